#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "metagrid/common.hpp"
#include "metagrid/rng.hpp"

namespace metagrid {

struct ObjectSpec {
  int row = 0;
  int col = 0;
  double reward = 0.0;
  double eps_term = 0.0;     // episode-termination probability on collection
  double eps_respawn = 0.0;  // per-step respawn probability while absent
};

// Free parameters of one task: grid, walls, objects, horizon and lifetime.
// Immutable after creation; safely shareable.
struct Level {
  int rows = 0;
  int cols = 0;
  std::vector<uint8_t> walls;  // rows*cols, 1 = wall
  int start_row = 0;
  int start_col = 0;
  std::vector<ObjectSpec> objects;
  int max_episode_steps = 1;  // T_max
  long lifetime = 1;          // N, environment interactions granted per student

  int num_cells() const { return rows * cols; }
  int num_objects() const { return static_cast<int>(objects.size()); }
  int num_states() const { return num_cells() << num_objects(); }
  bool wall_at(int r, int c) const { return walls[static_cast<size_t>(r) * cols + c] != 0; }
  int object_at(int r, int c) const;  // index or -1

  void validate() const;

  // Human-readable single-document form; round-trips bit-exactly.
  std::string serialize() const;
  static Level parse(const std::string& text);

  uint64_t content_hash() const;

  // Shortest path length from start to (r, c) through non-wall cells,
  // or -1 when unreachable.
  int bfs_distance(int r, int c) const;
};

// Ranges for domain-randomized sampling. Unfiltered by design: trivial and
// impossible levels are kept.
struct LevelDistribution {
  std::vector<int> grid_sizes{9, 11, 13};
  double wall_density_max = 0.3;
  int min_objects = 1;
  int max_objects = 6;
  bool unit_rewards = true;  // r in {-1,+1}; otherwise uniform in [-1,1]
  std::vector<double> eps_term_choices{0.0, 0.1, 0.5, 1.0};
  std::vector<double> eps_respawn_choices{0.0, 0.005, 0.01, 0.05, 0.1, 0.5, 1.0};
  std::vector<int> horizon_choices{50, 500, 1000, 2000};
  long lifetime = 2500;
};

Level sample_level(Rng& rng, const LevelDistribution& dist);

// The five fixed configurations: dense, sparse, long_horizon, longer_horizon,
// long_dense. Object and start placements are generated deterministically
// from the name, since only size/objects/horizon are pinned.
Level handcrafted(const std::string& name);
std::vector<std::string> handcrafted_names();

}  // namespace metagrid
