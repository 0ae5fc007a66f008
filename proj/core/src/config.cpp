#include "metagrid/config.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <functional>
#include <sstream>

namespace metagrid {

namespace {

std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return std::string(buf);
}

long parse_long(const std::string& key, const std::string& s) {
  size_t pos = 0;
  long v;
  try {
    v = std::stol(s, &pos);
  } catch (const std::exception&) {
    throw Error("config key '" + key + "': not an integer: '" + s + "'");
  }
  MG_CHECK(pos == s.size(), "config key '" + key + "': trailing characters in '" + s + "'");
  return v;
}

double parse_double(const std::string& key, const std::string& s) {
  size_t pos = 0;
  double v;
  try {
    v = std::stod(s, &pos);
  } catch (const std::exception&) {
    throw Error("config key '" + key + "': not a number: '" + s + "'");
  }
  MG_CHECK(pos == s.size(), "config key '" + key + "': trailing characters in '" + s + "'");
  return v;
}

bool parse_bool(const std::string& key, const std::string& s) {
  if (s == "true" || s == "1") return true;
  if (s == "false" || s == "0") return false;
  throw Error("config key '" + key + "': expected true/false, got '" + s + "'");
}

std::vector<std::string> split_commas(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

struct Field {
  std::string key;
  std::function<std::string(const RunConfig&)> get;
  std::function<void(RunConfig&, const std::string&)> set;
};

std::vector<Field> make_fields() {
  std::vector<Field> f;
  auto ints = [&](const std::string& key, std::function<int&(RunConfig&)> ref) {
    f.push_back({key,
                 [ref](const RunConfig& c) { return std::to_string(ref(const_cast<RunConfig&>(c))); },
                 [key, ref](RunConfig& c, const std::string& s) {
                   ref(c) = static_cast<int>(parse_long(key, s));
                 }});
  };
  auto longs = [&](const std::string& key, std::function<long&(RunConfig&)> ref) {
    f.push_back({key,
                 [ref](const RunConfig& c) { return std::to_string(ref(const_cast<RunConfig&>(c))); },
                 [key, ref](RunConfig& c, const std::string& s) { ref(c) = parse_long(key, s); }});
  };
  auto u64s = [&](const std::string& key, std::function<uint64_t&(RunConfig&)> ref) {
    f.push_back({key,
                 [ref](const RunConfig& c) { return std::to_string(ref(const_cast<RunConfig&>(c))); },
                 [key, ref](RunConfig& c, const std::string& s) {
                   try {
                     size_t pos = 0;
                     ref(c) = std::stoull(s, &pos);
                     MG_CHECK(pos == s.size(), "trailing characters");
                   } catch (const std::exception&) {
                     throw Error("config key '" + key + "': not an unsigned integer: '" + s + "'");
                   }
                 }});
  };
  auto doubles = [&](const std::string& key, std::function<double&(RunConfig&)> ref) {
    f.push_back({key,
                 [ref](const RunConfig& c) { return fmt_double(ref(const_cast<RunConfig&>(c))); },
                 [key, ref](RunConfig& c, const std::string& s) { ref(c) = parse_double(key, s); }});
  };
  auto bools = [&](const std::string& key, std::function<bool&(RunConfig&)> ref) {
    f.push_back({key,
                 [ref](const RunConfig& c) {
                   return ref(const_cast<RunConfig&>(c)) ? std::string("true") : std::string("false");
                 },
                 [key, ref](RunConfig& c, const std::string& s) { ref(c) = parse_bool(key, s); }});
  };
  auto strings = [&](const std::string& key, std::function<std::string&(RunConfig&)> ref) {
    f.push_back({key,
                 [ref](const RunConfig& c) { return ref(const_cast<RunConfig&>(c)); },
                 [ref](RunConfig& c, const std::string& s) { ref(c) = s; }});
  };
  auto int_lists = [&](const std::string& key, std::function<std::vector<int>&(RunConfig&)> ref) {
    f.push_back({key,
                 [ref](const RunConfig& c) {
                   std::string out;
                   for (int v : ref(const_cast<RunConfig&>(c)))
                     out += (out.empty() ? "" : ",") + std::to_string(v);
                   return out;
                 },
                 [key, ref](RunConfig& c, const std::string& s) {
                   std::vector<int> vs;
                   for (const std::string& p : split_commas(s))
                     vs.push_back(static_cast<int>(parse_long(key, p)));
                   MG_CHECK(!vs.empty(), "config key '" + key + "': empty list");
                   ref(c) = vs;
                 }});
  };
  auto double_lists = [&](const std::string& key,
                          std::function<std::vector<double>&(RunConfig&)> ref) {
    f.push_back({key,
                 [ref](const RunConfig& c) {
                   std::string out;
                   for (double v : ref(const_cast<RunConfig&>(c)))
                     out += (out.empty() ? "" : ",") + fmt_double(v);
                   return out;
                 },
                 [key, ref](RunConfig& c, const std::string& s) {
                   std::vector<double> vs;
                   for (const std::string& p : split_commas(s)) vs.push_back(parse_double(key, p));
                   MG_CHECK(!vs.empty(), "config key '" + key + "': empty list");
                   ref(c) = vs;
                 }});
  };

  ints("train.num_lifetimes", [](RunConfig& c) -> int& { return c.train.num_lifetimes; });
  ints("train.envs_per_lifetime", [](RunConfig& c) -> int& { return c.train.envs_per_lifetime; });
  ints("train.steps_per_update", [](RunConfig& c) -> int& { return c.train.steps_per_update; });
  ints("train.k_updates", [](RunConfig& c) -> int& { return c.train.k_updates; });
  longs("train.meta_updates", [](RunConfig& c) -> long& { return c.train.meta_updates; });
  longs("train.lifetime", [](RunConfig& c) -> long& { return c.train.lifetime; });
  ints("train.score_eval_episodes",
       [](RunConfig& c) -> int& { return c.train.score_eval_episodes; });
  u64s("train.seed", [](RunConfig& c) -> uint64_t& { return c.train.seed; });
  longs("train.checkpoint_interval",
        [](RunConfig& c) -> long& { return c.train.checkpoint_interval; });
  strings("train.out_dir", [](RunConfig& c) -> std::string& { return c.train.out_dir; });
  f.push_back({"train.score_kind",
               [](const RunConfig& c) { return std::string(score_kind_name(c.train.score_kind)); },
               [](RunConfig& c, const std::string& s) {
                 c.train.score_kind = score_kind_from_name(s);
               }});
  f.push_back({"train.antagonist",
               [](const RunConfig& c) { return std::string(antagonist_name(c.train.antagonist)); },
               [](RunConfig& c, const std::string& s) {
                 c.train.antagonist = antagonist_from_name(s);
               }});

  ints("rule.n", [](RunConfig& c) -> int& { return c.rule.n; });
  ints("rule.embed", [](RunConfig& c) -> int& { return c.rule.embed; });
  ints("rule.hidden", [](RunConfig& c) -> int& { return c.rule.hidden; });
  doubles("rule.gamma", [](RunConfig& c) -> double& { return c.rule.gamma; });
  doubles("rule.alpha_y", [](RunConfig& c) -> double& { return c.rule.alpha_y; });
  doubles("rule.inner_lr", [](RunConfig& c) -> double& { return c.rule.inner_lr; });
  doubles("rule.b_pi_ent", [](RunConfig& c) -> double& { return c.rule.b_pi_ent; });
  doubles("rule.b_y_ent", [](RunConfig& c) -> double& { return c.rule.b_y_ent; });
  doubles("rule.b_pi_l2", [](RunConfig& c) -> double& { return c.rule.b_pi_l2; });
  doubles("rule.b_y_l2", [](RunConfig& c) -> double& { return c.rule.b_y_l2; });
  doubles("rule.outer_lr", [](RunConfig& c) -> double& { return c.rule.outer_lr; });
  doubles("rule.outer_clip", [](RunConfig& c) -> double& { return c.rule.outer_clip; });

  f.push_back({"curator.capacity",
               [](const RunConfig& c) { return std::to_string(c.curator.capacity); },
               [](RunConfig& c, const std::string& s) {
                 long v = parse_long("curator.capacity", s);
                 MG_CHECK(v > 0, "config key 'curator.capacity': must be positive");
                 c.curator.capacity = static_cast<size_t>(v);
               }});
  doubles("curator.p_replay", [](RunConfig& c) -> double& { return c.curator.p_replay; });
  doubles("curator.temperature", [](RunConfig& c) -> double& { return c.curator.temperature; });
  doubles("curator.rho", [](RunConfig& c) -> double& { return c.curator.rho; });

  int_lists("dist.grid_sizes", [](RunConfig& c) -> std::vector<int>& { return c.dist.grid_sizes; });
  doubles("dist.wall_density_max",
          [](RunConfig& c) -> double& { return c.dist.wall_density_max; });
  ints("dist.min_objects", [](RunConfig& c) -> int& { return c.dist.min_objects; });
  ints("dist.max_objects", [](RunConfig& c) -> int& { return c.dist.max_objects; });
  bools("dist.unit_rewards", [](RunConfig& c) -> bool& { return c.dist.unit_rewards; });
  double_lists("dist.eps_term_choices",
               [](RunConfig& c) -> std::vector<double>& { return c.dist.eps_term_choices; });
  double_lists("dist.eps_respawn_choices",
               [](RunConfig& c) -> std::vector<double>& { return c.dist.eps_respawn_choices; });
  int_lists("dist.horizon_choices",
            [](RunConfig& c) -> std::vector<int>& { return c.dist.horizon_choices; });
  longs("dist.lifetime", [](RunConfig& c) -> long& { return c.dist.lifetime; });

  longs("eval.lifetime", [](RunConfig& c) -> long& { return c.eval.lifetime; });
  ints("eval.num_envs", [](RunConfig& c) -> int& { return c.eval.num_envs; });
  ints("eval.num_steps", [](RunConfig& c) -> int& { return c.eval.num_steps; });
  ints("eval.eval_episodes", [](RunConfig& c) -> int& { return c.eval.eval_episodes; });
  doubles("eval.norm_eps", [](RunConfig& c) -> double& { return c.eval.norm_eps; });
  u64s("eval.seed", [](RunConfig& c) -> uint64_t& { return c.eval.seed; });
  f.push_back({"eval.mode",
               [](const RunConfig& c) {
                 return std::string(c.eval.mode == AgentParams::Mode::Tabular ? "tabular" : "dense");
               },
               [](RunConfig& c, const std::string& s) {
                 if (s == "tabular")
                   c.eval.mode = AgentParams::Mode::Tabular;
                 else if (s == "dense")
                   c.eval.mode = AgentParams::Mode::Dense;
                 else
                   throw Error("config key 'eval.mode': expected tabular or dense, got '" + s + "'");
               }});

  ints("num_seeds", [](RunConfig& c) -> int& { return c.num_seeds; });

  std::sort(f.begin(), f.end(), [](const Field& a, const Field& b) { return a.key < b.key; });
  return f;
}

const std::vector<Field>& fields() {
  static const std::vector<Field> f = make_fields();
  return f;
}

const Field& find_field(const std::string& key) {
  for (const Field& f : fields())
    if (f.key == key) return f;
  throw Error("unknown config key: '" + key + "'");
}

std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

}  // namespace

std::vector<std::string> config_keys() {
  std::vector<std::string> out;
  for (const Field& f : fields()) out.push_back(f.key);
  return out;
}

void apply_profile(RunConfig& cfg, const std::string& name) {
  if (name == "desk") {
    cfg.train.num_lifetimes = 64;
    cfg.train.envs_per_lifetime = 8;
  } else if (name == "paper") {
    cfg.train.num_lifetimes = 512;
    cfg.train.envs_per_lifetime = 64;
  } else {
    throw Error("unknown profile: '" + name + "' (expected desk or paper)");
  }
}

void apply_override(RunConfig& cfg, const std::string& key, const std::string& value) {
  find_field(key).set(cfg, value);
}

RunConfig parse_config_text(const std::string& text, RunConfig base) {
  std::istringstream is(text);
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    size_t eq = line.find('=');
    MG_CHECK(eq != std::string::npos,
             "config line " + std::to_string(lineno) + ": expected key=value, got '" + line + "'");
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (key == "profile") {
      apply_profile(base, value);
      continue;
    }
    apply_override(base, key, value);
  }
  return base;
}

RunConfig load_config(const std::string& path, RunConfig base) {
  std::ifstream is(path);
  MG_CHECK(is.good(), "cannot read config file: " + path);
  std::stringstream ss;
  ss << is.rdbuf();
  return parse_config_text(ss.str(), std::move(base));
}

std::string dump_config(const RunConfig& cfg) {
  std::string out = "# effective configuration (all keys, defaults included)\n";
  for (const Field& f : fields()) out += f.key + " = " + f.get(cfg) + "\n";
  return out;
}

}  // namespace metagrid
