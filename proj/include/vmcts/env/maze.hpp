/**
 * Tile mazes: the MazeSpec description, seeded generation, JSON round trip
 * and the wall geometry used for collision checks.
 *
 * Tile (col, row) has id row * n + col and covers
 * [col, col + 1] x [row, row + 1] scaled by tile_side. A wall between two
 * adjacent tiles is the closed unit segment on their shared edge.
 */

#pragma once

#include <algorithm>
#include <cstdint>
#include <deque>
#include <set>
#include <stdexcept>
#include <utility>
#include <vector>

#include <json.hpp>

#include "vmcts/common.hpp"

namespace vmcts::env {

struct MazeSpec {
  int size_n = 2;
  std::uint64_t seed = 0;
  double tile_side = 1.0;
  /// Blocked adjacencies as (smaller id, larger id), sorted.
  std::vector<std::pair<int, int>> walls;
  Vec<2> goal_center{};
  double goal_radius = 0.5;

  Vec<2> start() const { return {0.5 * tile_side, 0.5 * tile_side}; }
  Box<2> bounds() const {
    const double side = size_n * tile_side;
    return Box<2>{{0.0, 0.0}, {side, side}};
  }
  int tile_id(int col, int row) const { return row * size_n + col; }

  bool operator==(const MazeSpec&) const = default;
};

/// Fraction of non-tree walls knocked out after the spanning tree is carved.
inline constexpr double kLoopOpening = 0.15;

/// All 4-neighbour adjacencies of an n x n grid as sorted id pairs.
inline std::vector<std::pair<int, int>> grid_adjacencies(int n) {
  std::vector<std::pair<int, int>> out;
  for (int r = 0; r < n; ++r)
    for (int c = 0; c < n; ++c) {
      const int id = r * n + c;
      if (c + 1 < n) out.emplace_back(id, id + 1);
      if (r + 1 < n) out.emplace_back(id, id + n);
    }
  std::sort(out.begin(), out.end());
  return out;
}

/**
 * Randomized depth-first spanning tree from the start tile; every adjacency
 * not used by the tree becomes a wall, then each wall is removed
 * independently with probability kLoopOpening.
 */
inline MazeSpec generate_maze(int size_n, std::uint64_t seed) {
  if (size_n < 2) throw std::invalid_argument("generate_maze: size_n must be >= 2");

  Rng rng(mix_seed(seed, 0x6D617A65));
  const int n = size_n;
  std::vector<char> visited(static_cast<std::size_t>(n * n), 0);
  std::set<std::pair<int, int>> tree_edges;
  std::vector<int> stack{0};
  visited[0] = 1;

  while (!stack.empty()) {
    const int cur = stack.back();
    const int c = cur % n, r = cur / n;
    std::array<int, 4> cand{};
    int k = 0;
    if (c > 0 && !visited[cur - 1]) cand[k++] = cur - 1;
    if (c + 1 < n && !visited[cur + 1]) cand[k++] = cur + 1;
    if (r > 0 && !visited[cur - n]) cand[k++] = cur - n;
    if (r + 1 < n && !visited[cur + n]) cand[k++] = cur + n;
    if (k == 0) {
      stack.pop_back();
      continue;
    }
    const int next = cand[rng.index(static_cast<std::size_t>(k))];
    visited[next] = 1;
    tree_edges.emplace(std::min(cur, next), std::max(cur, next));
    stack.push_back(next);
  }

  MazeSpec spec;
  spec.size_n = n;
  spec.seed = seed;
  spec.tile_side = 1.0;
  for (const auto& adj : grid_adjacencies(n)) {
    if (tree_edges.count(adj)) continue;
    if (rng.bernoulli(kLoopOpening)) continue;
    spec.walls.push_back(adj);
  }
  spec.goal_center = {(n - 0.5) * spec.tile_side, (n - 0.5) * spec.tile_side};
  spec.goal_radius = 0.5 * spec.tile_side;
  return spec;
}

/// Tiles reachable from `from` through open adjacencies (breadth-first).
inline std::vector<int> reachable_tiles(const MazeSpec& spec, int from) {
  const int n = spec.size_n;
  std::set<std::pair<int, int>> blocked(spec.walls.begin(), spec.walls.end());
  std::vector<int> dist(static_cast<std::size_t>(n * n), -1);
  std::deque<int> q{from};
  dist[from] = 0;
  while (!q.empty()) {
    const int cur = q.front();
    q.pop_front();
    const int c = cur % n, r = cur / n;
    const int nb[4] = {c > 0 ? cur - 1 : -1, c + 1 < n ? cur + 1 : -1,
                       r > 0 ? cur - n : -1, r + 1 < n ? cur + n : -1};
    for (int x : nb) {
      if (x < 0 || dist[x] >= 0) continue;
      if (blocked.count({std::min(cur, x), std::max(cur, x)})) continue;
      dist[x] = dist[cur] + 1;
      q.push_back(x);
    }
  }
  return dist;
}

inline nlohmann::json to_json(const MazeSpec& spec) {
  nlohmann::json walls = nlohmann::json::array();
  for (const auto& [a, b] : spec.walls) walls.push_back({a, b});
  return {{"size", spec.size_n},
          {"seed", spec.seed},
          {"tile_side", spec.tile_side},
          {"walls", walls},
          {"goal_center", {spec.goal_center[0], spec.goal_center[1]}},
          {"goal_radius", spec.goal_radius}};
}

inline MazeSpec maze_from_json(const nlohmann::json& j) {
  MazeSpec spec;
  spec.size_n = j.at("size").get<int>();
  if (spec.size_n < 2) throw std::invalid_argument("maze json: size must be >= 2");
  spec.seed = j.value("seed", std::uint64_t{0});
  spec.tile_side = j.value("tile_side", 1.0);
  const int n = spec.size_n;
  for (const auto& w : j.at("walls")) {
    int a = w.at(0).get<int>(), b = w.at(1).get<int>();
    if (a > b) std::swap(a, b);
    const bool horiz = (b == a + 1) && (a % n) + 1 < n;
    const bool vert = (b == a + n);
    if (a < 0 || b >= n * n || !(horiz || vert))
      throw std::invalid_argument("maze json: wall between non-adjacent tiles");
    spec.walls.emplace_back(a, b);
  }
  std::sort(spec.walls.begin(), spec.walls.end());
  spec.walls.erase(std::unique(spec.walls.begin(), spec.walls.end()), spec.walls.end());
  if (j.contains("goal_center")) {
    spec.goal_center = {j["goal_center"].at(0).get<double>(), j["goal_center"].at(1).get<double>()};
  } else {
    spec.goal_center = {(n - 0.5) * spec.tile_side, (n - 0.5) * spec.tile_side};
  }
  spec.goal_radius = j.value("goal_radius", 0.5 * spec.tile_side);
  return spec;
}

// ---------------------------------------------------------------------------
// Geometry

struct Segment {
  Vec<2> a;
  Vec<2> b;
};

namespace detail {

inline double orient(const Vec<2>& p, const Vec<2>& q, const Vec<2>& r) {
  return (q[0] - p[0]) * (r[1] - p[1]) - (q[1] - p[1]) * (r[0] - p[0]);
}

inline bool on_segment(const Vec<2>& p, const Vec<2>& q, const Vec<2>& r) {
  return std::min(p[0], q[0]) <= r[0] && r[0] <= std::max(p[0], q[0]) &&
         std::min(p[1], q[1]) <= r[1] && r[1] <= std::max(p[1], q[1]);
}

}  // namespace detail

/// Closed-segment intersection, touching endpoints included.
inline bool segments_intersect(const Segment& s, const Segment& t) {
  using detail::orient;
  using detail::on_segment;
  const double d1 = orient(t.a, t.b, s.a);
  const double d2 = orient(t.a, t.b, s.b);
  const double d3 = orient(s.a, s.b, t.a);
  const double d4 = orient(s.a, s.b, t.b);
  if (((d1 > 0 && d2 < 0) || (d1 < 0 && d2 > 0)) && ((d3 > 0 && d4 < 0) || (d3 < 0 && d4 > 0)))
    return true;
  if (d1 == 0 && on_segment(t.a, t.b, s.a)) return true;
  if (d2 == 0 && on_segment(t.a, t.b, s.b)) return true;
  if (d3 == 0 && on_segment(s.a, s.b, t.a)) return true;
  if (d4 == 0 && on_segment(s.a, s.b, t.b)) return true;
  return false;
}

/// Wall segments in world coordinates for a maze spec.
inline std::vector<Segment> wall_segments(const MazeSpec& spec) {
  const int n = spec.size_n;
  const double ts = spec.tile_side;
  std::vector<Segment> out;
  out.reserve(spec.walls.size());
  for (const auto& [a, b] : spec.walls) {
    const int ca = a % n, ra = a / n;
    if (b == a + 1) {
      const double x = (ca + 1) * ts;
      out.push_back({{x, ra * ts}, {x, (ra + 1) * ts}});
    } else {
      const double y = (ra + 1) * ts;
      out.push_back({{ca * ts, y}, {(ca + 1) * ts, y}});
    }
  }
  return out;
}

/**
 * Constant-time wall lookup plus motion-segment collision test. Only walls
 * whose tile edges overlap the motion's bounding box are tested.
 */
class WallMap {
 public:
  WallMap() = default;
  explicit WallMap(const MazeSpec& spec)
      : n_(spec.size_n),
        ts_(spec.tile_side),
        box_(spec.bounds()),
        vertical_(static_cast<std::size_t>(n_ * n_), 0),
        horizontal_(static_cast<std::size_t>(n_ * n_), 0) {
    for (const auto& [a, b] : spec.walls) {
      if (b == a + 1)
        vertical_[a] = 1;  // east edge of tile a
      else
        horizontal_[a] = 1;  // north edge of tile a
    }
  }

  const Box<2>& box() const { return box_; }

  /// True if moving along the closed segment p->q touches a wall or leaves the box.
  bool blocked(const Vec<2>& p, const Vec<2>& q) const {
    if (!box_.contains(q) || !box_.contains(p)) return true;
    const double minx = std::min(p[0], q[0]), maxx = std::max(p[0], q[0]);
    const double miny = std::min(p[1], q[1]), maxy = std::max(p[1], q[1]);
    const Segment motion{p, q};

    // Vertical walls lie on x = k * ts for k in 1..n-1 (east edge of col k-1).
    const int k0 = std::max(1, static_cast<int>(std::ceil(minx / ts_)));
    const int k1 = std::min(n_ - 1, static_cast<int>(std::floor(maxx / ts_)));
    const int r0 = std::max(0, static_cast<int>(std::floor(miny / ts_)) - 1);
    const int r1 = std::min(n_ - 1, static_cast<int>(std::floor(maxy / ts_)));
    for (int k = k0; k <= k1; ++k)
      for (int r = r0; r <= r1; ++r) {
        if (!vertical_[r * n_ + (k - 1)]) continue;
        const Segment w{{k * ts_, r * ts_}, {k * ts_, (r + 1) * ts_}};
        if (segments_intersect(motion, w)) return true;
      }

    // Horizontal walls lie on y = k * ts (north edge of row k-1).
    const int h0 = std::max(1, static_cast<int>(std::ceil(miny / ts_)));
    const int h1 = std::min(n_ - 1, static_cast<int>(std::floor(maxy / ts_)));
    const int c0 = std::max(0, static_cast<int>(std::floor(minx / ts_)) - 1);
    const int c1 = std::min(n_ - 1, static_cast<int>(std::floor(maxx / ts_)));
    for (int k = h0; k <= h1; ++k)
      for (int c = c0; c <= c1; ++c) {
        if (!horizontal_[(k - 1) * n_ + c]) continue;
        const Segment w{{c * ts_, k * ts_}, {(c + 1) * ts_, k * ts_}};
        if (segments_intersect(motion, w)) return true;
      }
    return false;
  }

 private:
  int n_ = 0;
  double ts_ = 1.0;
  Box<2> box_{};
  std::vector<char> vertical_;
  std::vector<char> horizontal_;
};

}  // namespace vmcts::env
