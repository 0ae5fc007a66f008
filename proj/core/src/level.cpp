#include "metagrid/level.hpp"

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <deque>
#include <sstream>

namespace metagrid {

int Level::object_at(int r, int c) const {
  for (size_t i = 0; i < objects.size(); ++i)
    if (objects[i].row == r && objects[i].col == c) return static_cast<int>(i);
  return -1;
}

void Level::validate() const {
  MG_CHECK(rows >= 1 && cols >= 1 && rows <= 13 && cols <= 13, "level: bad grid size");
  MG_CHECK(static_cast<int>(walls.size()) == rows * cols, "level: wall mask size");
  MG_CHECK(objects.size() <= 7, "level: too many objects");
  MG_CHECK(max_episode_steps >= 1, "level: T_max must be >= 1");
  MG_CHECK(lifetime >= 1, "level: lifetime must be >= 1");
  MG_CHECK(start_row >= 0 && start_row < rows && start_col >= 0 && start_col < cols,
           "level: start out of grid");
  MG_CHECK(!wall_at(start_row, start_col), "level: start on wall");
  for (const auto& o : objects) {
    MG_CHECK(o.row >= 0 && o.row < rows && o.col >= 0 && o.col < cols, "level: object out of grid");
    MG_CHECK(!wall_at(o.row, o.col), "level: object on wall");
    MG_CHECK(o.eps_term >= 0 && o.eps_term <= 1, "level: eps_term out of [0,1]");
    MG_CHECK(o.eps_respawn >= 0 && o.eps_respawn <= 1, "level: eps_respawn out of [0,1]");
  }
}

namespace {
std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}
}  // namespace

std::string Level::serialize() const {
  std::ostringstream os;
  os << "level v1\n";
  os << "size " << rows << " " << cols << "\n";
  os << "start " << start_row << " " << start_col << "\n";
  os << "tmax " << max_episode_steps << "\n";
  os << "lifetime " << lifetime << "\n";
  os << "walls\n";
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) os << (wall_at(r, c) ? '#' : '.');
    os << "\n";
  }
  os << "objects " << objects.size() << "\n";
  for (const auto& o : objects)
    os << "object " << o.row << " " << o.col << " " << fmt_double(o.reward) << " "
       << fmt_double(o.eps_term) << " " << fmt_double(o.eps_respawn) << "\n";
  os << "end\n";
  return os.str();
}

Level Level::parse(const std::string& text) {
  std::istringstream is(text);
  std::string tok;
  Level lv;
  is >> tok;
  MG_CHECK(tok == "level", "level parse: missing header");
  is >> tok;
  MG_CHECK(tok == "v1", "level parse: unsupported version");
  auto expect = [&](const char* kw) {
    is >> tok;
    MG_CHECK(is.good() && tok == kw, std::string("level parse: expected ") + kw);
  };
  expect("size");
  is >> lv.rows >> lv.cols;
  expect("start");
  is >> lv.start_row >> lv.start_col;
  expect("tmax");
  is >> lv.max_episode_steps;
  expect("lifetime");
  is >> lv.lifetime;
  expect("walls");
  lv.walls.assign(static_cast<size_t>(lv.rows) * lv.cols, 0);
  for (int r = 0; r < lv.rows; ++r) {
    is >> tok;
    MG_CHECK(static_cast<int>(tok.size()) == lv.cols, "level parse: bad wall row");
    for (int c = 0; c < lv.cols; ++c) {
      MG_CHECK(tok[c] == '.' || tok[c] == '#', "level parse: bad wall char");
      lv.walls[static_cast<size_t>(r) * lv.cols + c] = tok[c] == '#' ? 1 : 0;
    }
  }
  expect("objects");
  int k = 0;
  is >> k;
  MG_CHECK(k >= 0 && k <= 7, "level parse: bad object count");
  for (int i = 0; i < k; ++i) {
    expect("object");
    ObjectSpec o;
    std::string a, b, c;
    is >> o.row >> o.col >> a >> b >> c;
    o.reward = std::strtod(a.c_str(), nullptr);
    o.eps_term = std::strtod(b.c_str(), nullptr);
    o.eps_respawn = std::strtod(c.c_str(), nullptr);
    lv.objects.push_back(o);
  }
  expect("end");
  lv.validate();
  return lv;
}

uint64_t Level::content_hash() const {
  // FNV-1a over the canonical serialized form, excluding nothing: two levels
  // share a hash iff they are structurally identical.
  std::string s = serialize();
  uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

int Level::bfs_distance(int r, int c) const {
  std::vector<int> dist(static_cast<size_t>(rows) * cols, -1);
  std::deque<int> q;
  int s = start_row * cols + start_col;
  dist[s] = 0;
  q.push_back(s);
  static const int dr[4] = {-1, 1, 0, 0};
  static const int dc[4] = {0, 0, -1, 1};
  while (!q.empty()) {
    int cur = q.front();
    q.pop_front();
    int cr = cur / cols, cc = cur % cols;
    for (int a = 0; a < 4; ++a) {
      int nr = cr + dr[a], nc = cc + dc[a];
      if (nr < 0 || nr >= rows || nc < 0 || nc >= cols) continue;
      if (wall_at(nr, nc)) continue;
      int ni = nr * cols + nc;
      if (dist[ni] >= 0) continue;
      dist[ni] = dist[cur] + 1;
      q.push_back(ni);
    }
  }
  return dist[static_cast<size_t>(r) * cols + c];
}

Level sample_level(Rng& rng, const LevelDistribution& dist) {
  for (int attempt = 0; attempt < 1000; ++attempt) {
    Level lv;
    int size = dist.grid_sizes[rng.uniform_int(static_cast<int>(dist.grid_sizes.size()))];
    lv.rows = lv.cols = size;
    double density = rng.uniform(0.0, dist.wall_density_max);
    lv.walls.assign(static_cast<size_t>(size) * size, 0);
    for (auto& w : lv.walls) w = rng.bernoulli(density) ? 1 : 0;

    std::vector<int> free_cells;
    for (int i = 0; i < size * size; ++i)
      if (!lv.walls[i]) free_cells.push_back(i);
    int num_objects = dist.min_objects + rng.uniform_int(dist.max_objects - dist.min_objects + 1);
    if (static_cast<int>(free_cells.size()) < num_objects + 1) continue;

    // distinct cells for start and objects
    for (int i = static_cast<int>(free_cells.size()) - 1; i > 0; --i)
      std::swap(free_cells[i], free_cells[rng.uniform_int(i + 1)]);
    int start = free_cells[0];
    lv.start_row = start / size;
    lv.start_col = start % size;
    for (int i = 0; i < num_objects; ++i) {
      ObjectSpec o;
      o.row = free_cells[1 + i] / size;
      o.col = free_cells[1 + i] % size;
      o.reward = dist.unit_rewards ? (rng.bernoulli(0.5) ? 1.0 : -1.0) : rng.uniform(-1.0, 1.0);
      o.eps_term = dist.eps_term_choices[rng.uniform_int(static_cast<int>(dist.eps_term_choices.size()))];
      o.eps_respawn =
          dist.eps_respawn_choices[rng.uniform_int(static_cast<int>(dist.eps_respawn_choices.size()))];
      lv.objects.push_back(o);
    }
    lv.max_episode_steps =
        dist.horizon_choices[rng.uniform_int(static_cast<int>(dist.horizon_choices.size()))];
    lv.lifetime = dist.lifetime;
    lv.validate();
    return lv;
  }
  throw Error("sample_level: 1000 rejections; distribution config is inconsistent");
}

namespace {
Level build_handcrafted(int size, const std::vector<ObjectSpec>& protos, int tmax, uint64_t seed) {
  Level lv;
  lv.rows = lv.cols = size;
  lv.walls.assign(static_cast<size_t>(size) * size, 0);
  lv.max_episode_steps = tmax;
  lv.lifetime = 2500;
  Rng rng(seed);
  std::vector<int> cells(static_cast<size_t>(size) * size);
  for (size_t i = 0; i < cells.size(); ++i) cells[i] = static_cast<int>(i);
  for (int i = static_cast<int>(cells.size()) - 1; i > 0; --i)
    std::swap(cells[i], cells[rng.uniform_int(i + 1)]);
  lv.start_row = cells[0] / size;
  lv.start_col = cells[0] % size;
  for (size_t i = 0; i < protos.size(); ++i) {
    ObjectSpec o = protos[i];
    o.row = cells[1 + i] / size;
    o.col = cells[1 + i] % size;
    lv.objects.push_back(o);
  }
  lv.validate();
  return lv;
}

ObjectSpec obj(double r, double et, double er) {
  ObjectSpec o;
  o.reward = r;
  o.eps_term = et;
  o.eps_respawn = er;
  return o;
}
}  // namespace

Level handcrafted(const std::string& name) {
  if (name == "dense")
    return build_handcrafted(
        11, {obj(1, 0, 0.05), obj(1, 0, 0.05), obj(-1, 0.5, 0.1), obj(-1, 0, 0.5)}, 500, 11);
  if (name == "sparse")
    return build_handcrafted(13, {obj(1, 1, 0), obj(-1, 1, 0)}, 50, 13);
  if (name == "long_horizon")
    return build_handcrafted(
        11, {obj(1, 0, 0.01), obj(1, 0, 0.01), obj(-1, 0.5, 1), obj(-1, 0.5, 1)}, 1000, 17);
  if (name == "longer_horizon")
    return build_handcrafted(9,
                             {obj(1, 0.1, 0.01), obj(1, 0.1, 0.01), obj(-1, 0.8, 1),
                              obj(-1, 0.8, 1), obj(-1, 0.8, 1), obj(-1, 0.8, 1), obj(-1, 0.8, 1)},
                             2000, 19);
  if (name == "long_dense")
    return build_handcrafted(
        11, {obj(1, 0, 0.005), obj(1, 0, 0.005), obj(1, 0, 0.005), obj(1, 0, 0.005)}, 2000, 23);
  throw Error("handcrafted: unknown name '" + name + "'");
}

std::vector<std::string> handcrafted_names() {
  return {"dense", "sparse", "long_horizon", "longer_horizon", "long_dense"};
}

}  // namespace metagrid
