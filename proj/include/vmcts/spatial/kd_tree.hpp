/**
 * Incremental k-d tree over visited states.
 *
 * Each leaf stores exactly one point and owns an axis-aligned region; the
 * leaf regions partition the root box, so leaf volumes double as a partition
 * density estimator. Every node also keeps a value sum and visit count that
 * aggregate all values backed up through its region, which gives the
 * half-depth nonparametric value estimate.
 *
 * Handles are stable: when a leaf is split, a fresh interior node takes its
 * place in the tree and the old leaf keeps its handle (one level deeper,
 * with the half-box that still contains its point).
 */

#pragma once

#include <cstdint>
#include <stdexcept>
#include <vector>

#include <json.hpp>

#include "vmcts/common.hpp"

namespace vmcts::spatial {

using KdHandle = std::uint32_t;
inline constexpr KdHandle kNoNode = 0xFFFFFFFFu;

template <std::size_t D>
struct KdNode {
  Box<D> bounds{};
  int split_dim = -1;  // -1 for leaves
  double split_coord = 0.0;
  Vec<D> point{};      // meaningful for leaves only
  double value_sum = 0.0;
  std::uint64_t visit_count = 0;
  std::uint32_t depth = 0;
  KdHandle parent = kNoNode;
  KdHandle left = kNoNode;
  KdHandle right = kNoNode;
  std::uint64_t payload = 0;  // caller's id for the point (leaves only)

  bool is_leaf() const { return split_dim < 0; }
  double volume() const { return bounds.volume(); }
  double mean() const { return value_sum / static_cast<double>(visit_count); }
};

/// Volume bookkeeping emitted by an insertion.
struct InsertReport {
  KdHandle new_leaf = kNoNode;
  KdHandle old_leaf = kNoNode;  // kNoNode for the very first insertion
  std::uint64_t old_payload = 0;
  double old_volume = 0.0;      // region of the split leaf before the insert
  double new_old_volume = 0.0;  // what the old point keeps
  double new_volume = 0.0;      // region of the inserted point
};

template <std::size_t D>
class KdTree {
 public:
  explicit KdTree(Box<D> root_bounds) : root_bounds_(root_bounds) {}

  bool empty() const { return nodes_.empty(); }
  std::size_t node_count() const { return nodes_.size(); }
  std::size_t leaf_count() const { return leaves_; }
  KdHandle root() const { return root_; }
  const Box<D>& root_bounds() const { return root_bounds_; }
  const KdNode<D>& node(KdHandle h) const { return nodes_.at(h); }

  /// Leaf whose region contains `p` (points on a split plane go right).
  KdHandle locate(const Vec<D>& p) const {
    if (empty()) throw EmptyTreeError("kd tree is empty");
    KdHandle h = root_;
    while (!nodes_[h].is_leaf()) {
      const auto& n = nodes_[h];
      h = p[n.split_dim] < n.split_coord ? n.left : n.right;
    }
    return h;
  }

  /**
   * Adds `p` with one initial value observation. The owning leaf is split
   * along the dimension where the two points are furthest apart relative to
   * the leaf's side length, at the midpoint of their coordinates. Identical
   * points split the leaf's longest side at its midpoint instead.
   */
  InsertReport insert(const Vec<D>& p, double initial_value, std::uint64_t payload = 0) {
    if (!all_finite(p) || !root_bounds_.contains(p)) throw std::out_of_range("kd insert: point outside root bounds");

    InsertReport rep;
    if (empty()) {
      KdNode<D> n;
      n.bounds = root_bounds_;
      n.point = p;
      n.payload = payload;
      nodes_.push_back(n);
      root_ = 0;
      leaves_ = 1;
      rep.new_leaf = 0;
      rep.new_volume = root_bounds_.volume();
      backprop_at(0, initial_value);
      return rep;
    }

    const KdHandle old = locate(p);
    const KdNode<D> leaf = nodes_[old];
    rep.old_leaf = old;
    rep.old_payload = leaf.payload;
    rep.old_volume = leaf.volume();

    int dim = -1;
    double best = 0.0;
    for (std::size_t d = 0; d < D; ++d) {
      const double rel = std::abs(p[d] - leaf.point[d]) / leaf.bounds.side(d);
      if (rel > best) {
        best = rel;
        dim = static_cast<int>(d);
      }
    }
    double split;
    if (dim >= 0) {
      const double lo = std::min(p[dim], leaf.point[dim]);
      const double hi = std::max(p[dim], leaf.point[dim]);
      split = 0.5 * (lo + hi);
      if (!(split > lo)) split = hi;
    } else {
      dim = 0;
      for (std::size_t d = 1; d < D; ++d)
        if (leaf.bounds.side(d) > leaf.bounds.side(dim)) dim = static_cast<int>(d);
      split = 0.5 * (leaf.bounds.lo[dim] + leaf.bounds.hi[dim]);
    }

    const auto interior = static_cast<KdHandle>(nodes_.size());
    const auto fresh = static_cast<KdHandle>(nodes_.size() + 1);

    KdNode<D> in = leaf;
    in.split_dim = dim;
    in.split_coord = split;
    in.point = {};
    in.payload = 0;

    Box<D> left_box = leaf.bounds, right_box = leaf.bounds;
    left_box.hi[dim] = split;
    right_box.lo[dim] = split;
    const bool old_goes_left = leaf.point[dim] < split;

    KdNode<D> nw;
    nw.point = p;
    nw.payload = payload;
    nw.depth = leaf.depth + 1;
    nw.parent = interior;
    nw.bounds = old_goes_left ? right_box : left_box;

    in.left = old_goes_left ? old : fresh;
    in.right = old_goes_left ? fresh : old;

    if (leaf.parent != kNoNode) {
      auto& par = nodes_[leaf.parent];
      (par.left == old ? par.left : par.right) = interior;
    } else {
      root_ = interior;
    }

    nodes_.push_back(in);
    nodes_.push_back(nw);
    auto& o = nodes_[old];
    o.bounds = old_goes_left ? left_box : right_box;
    o.depth = leaf.depth + 1;
    o.parent = interior;
    ++leaves_;

    rep.new_leaf = fresh;
    rep.new_old_volume = nodes_[old].volume();
    rep.new_volume = nodes_[fresh].volume();
    backprop_at(fresh, initial_value);
    return rep;
  }

  /// Half-depth ancestor of a leaf: the node at depth floor(leaf_depth / 2).
  KdHandle half_depth_ancestor(KdHandle leaf) const {
    KdHandle h = leaf;
    const std::uint32_t target = nodes_.at(leaf).depth / 2;
    while (nodes_[h].depth > target) h = nodes_[h].parent;
    return h;
  }

  /// Mean backed-up value of the half-depth ancestor of `leaf`.
  double value_at(KdHandle leaf) const {
    const auto& n = nodes_.at(half_depth_ancestor(leaf));
    return n.mean();
  }

  double value(const Vec<D>& state) const { return value_at(locate(state)); }

  /// Adds one observation to `leaf` and every ancestor.
  void backprop_at(KdHandle leaf, double value) {
    for (KdHandle h = leaf; h != kNoNode; h = nodes_[h].parent) {
      nodes_[h].value_sum += value;
      nodes_[h].visit_count += 1;
    }
  }

  void backprop(double value, const Vec<D>& state) { backprop_at(locate(state), value); }

  template <class F>
  void for_each_leaf(F&& f) const {
    for (KdHandle h = 0; h < nodes_.size(); ++h)
      if (nodes_[h].is_leaf()) f(h, nodes_[h]);
  }

  nlohmann::json to_json() const {
    if (empty()) return nullptr;
    return node_json(root_);
  }

 private:
  nlohmann::json node_json(KdHandle h) const {
    const auto& n = nodes_[h];
    nlohmann::json j{{"lo", n.bounds.lo},
                     {"hi", n.bounds.hi},
                     {"depth", n.depth},
                     {"value_sum", n.value_sum},
                     {"visit_count", n.visit_count}};
    if (n.is_leaf()) {
      j["point"] = n.point;
      j["payload"] = n.payload;
    } else {
      j["split_dim"] = n.split_dim;
      j["split_coord"] = n.split_coord;
      j["left"] = node_json(n.left);
      j["right"] = node_json(n.right);
    }
    return j;
  }

  Box<D> root_bounds_;
  std::vector<KdNode<D>> nodes_;
  KdHandle root_ = kNoNode;
  std::size_t leaves_ = 0;
};

}  // namespace vmcts::spatial
