#include "metagrid/solver.hpp"

#include <algorithm>
#include <cmath>

namespace metagrid {

SolveResult solve_optimal(const Level& lv, double gamma, long budget, bool want_policy) {
  lv.validate();
  int P = lv.num_cells();
  int m = lv.num_objects();
  int M = 1 << m;
  long T = lv.max_episode_steps;
  long state_steps = static_cast<long>(P) * M * T;
  MG_CHECK(state_steps <= budget, "solve_optimal: state-step budget exceeded");

  // respawn transition list per mask: (next_mask, probability)
  std::vector<std::vector<std::pair<int, double>>> respawn(M);
  for (int mask = 0; mask < M; ++mask) {
    auto& lst = respawn[mask];
    lst.push_back({mask, 1.0});
    for (int i = 0; i < m; ++i) {
      if ((mask >> i) & 1) continue;
      double p = lv.objects[i].eps_respawn;
      if (p <= 0) continue;
      size_t cur = lst.size();
      for (size_t k = 0; k < cur; ++k) {
        auto [mk, pr] = lst[k];
        if (p >= 1.0) {
          lst[k] = {mk | (1 << i), pr};
        } else {
          lst[k].second = pr * (1.0 - p);
          lst.push_back({mk | (1 << i), pr * p});
        }
      }
    }
  }

  // movement targets per (pos, action)
  static const int dr[4] = {-1, 1, 0, 0};
  static const int dc[4] = {0, 0, -1, 1};
  std::vector<int> move(static_cast<size_t>(P) * kNumActions);
  for (int pos = 0; pos < P; ++pos) {
    int r = pos / lv.cols, c = pos % lv.cols;
    for (int a = 0; a < kNumActions; ++a) {
      int nr = r + dr[a], nc = c + dc[a];
      if (nr < 0 || nr >= lv.rows || nc < 0 || nc >= lv.cols || lv.wall_at(nr, nc)) {
        move[static_cast<size_t>(pos) * kNumActions + a] = pos;
      } else {
        move[static_cast<size_t>(pos) * kNumActions + a] = nr * lv.cols + nc;
      }
    }
  }
  std::vector<int> obj_at(P, -1);
  for (int i = 0; i < m; ++i)
    obj_at[lv.objects[i].row * lv.cols + lv.objects[i].col] = i;

  SolveResult res;
  res.rows = lv.rows;
  res.cols = lv.cols;
  res.num_objects = m;
  res.horizon = static_cast<int>(T);
  if (want_policy) res.actions.assign(static_cast<size_t>(T) * P * M, 0);

  size_t layer = static_cast<size_t>(P) * M;
  std::vector<double> vnext(layer, 0.0), vcur(layer, 0.0);
  for (long t = T - 1; t >= 0; --t) {
    for (int pos = 0; pos < P; ++pos) {
      for (int mask = 0; mask < M; ++mask) {
        double best = -1e300;
        int best_a = 0;
        for (int a = 0; a < kNumActions; ++a) {
          int np = move[static_cast<size_t>(pos) * kNumActions + a];
          double r = 0, p_cont = 1.0;
          int mask1 = mask;
          int oi = obj_at[np];
          if (oi >= 0 && ((mask >> oi) & 1)) {
            r = lv.objects[oi].reward;
            mask1 = mask & ~(1 << oi);
            p_cont = 1.0 - lv.objects[oi].eps_term;
          }
          double q = r;
          if (t + 1 < T && p_cont > 0) {
            double ev = 0;
            for (auto [mk, pr] : respawn[mask1])
              ev += pr * vnext[(static_cast<size_t>(np) << m) | mk];
            q += gamma * p_cont * ev;
          }
          if (q > best) {
            best = q;
            best_a = a;
          }
        }
        vcur[(static_cast<size_t>(pos) << m) | mask] = best;
        if (want_policy)
          res.actions[(static_cast<size_t>(t) * P + pos) * M + mask] =
              static_cast<uint8_t>(best_a);
      }
    }
    std::swap(vcur, vnext);
  }
  int start_pos = lv.start_row * lv.cols + lv.start_col;
  res.start_value = vnext[(static_cast<size_t>(start_pos) << m) | (M - 1)];
  res.has_policy = want_policy;
  return res;
}

}  // namespace metagrid
