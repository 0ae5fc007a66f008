#pragma once

#include "metagrid/eval.hpp"

namespace metagrid {

// Merged run configuration: everything a training or experiment run needs,
// addressable as flat dotted keys in a key=value file. Every field has a
// documented default (the struct initializers); unknown keys are rejected.
struct RunConfig {
  TrainRunConfig train;
  OptimizerConfig rule;
  CuratorConfig curator;
  LevelDistribution dist;
  EvalConfig eval;
  int num_seeds = 10;  // paired seeds for experiments
};

// All recognized keys, sorted.
std::vector<std::string> config_keys();

// Built-in geometry presets: "desk" (64 lifetimes x 8 envs, the default) and
// "paper" (512 x 64).
void apply_profile(RunConfig& cfg, const std::string& name);

// Sets one field from its text form; throws naming the key on any problem.
void apply_override(RunConfig& cfg, const std::string& key, const std::string& value);

// key=value lines over `base`; '#' starts a comment. Throws with the
// offending line on malformed input or unknown keys.
RunConfig parse_config_text(const std::string& text, RunConfig base = {});
RunConfig load_config(const std::string& path, RunConfig base = {});

// Effective configuration with every key present; parse_config_text(dump(c))
// reproduces c bit-exactly (doubles are printed round-trip safe).
std::string dump_config(const RunConfig& cfg);

}  // namespace metagrid
