/**
 * Search-tree storage shared by every planner.
 *
 * Nodes live in one vector and refer to each other by index; a child always
 * has a larger index than its parent. Depth is counted in environment steps
 * from the episode start, so a closed-loop search that reuses a subtree keeps
 * consistent episode accounting.
 */

#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "vmcts/env/environment.hpp"
#include "vmcts/env/episode.hpp"

namespace vmcts::planner {

using NodeId = std::uint32_t;
inline constexpr NodeId kNoParent = std::numeric_limits<NodeId>::max();
inline constexpr std::uint32_t kNoKdLeaf = 0xFFFFFFFFu;

template <std::size_t D, std::size_t A>
struct SearchNode {
  Vec<D> state{};
  Vec<A> action{};  // action that led here from the parent
  NodeId parent = kNoParent;
  int depth = 0;
  std::vector<NodeId> children;

  double reward = 0.0;
  bool goal = false;
  double path_reward = 0.0;    // discounted reward along the path, this node excluded
  double cum_reward = 0.0;     // undiscounted reward along the path, this node included
  double earned = 0.0;         // episode return of following the path, then staying still
  double max_earned = 0.0;     // best `earned` within the subtree

  double value_sum = 0.0;
  std::uint64_t visit_count = 0;
  std::uint64_t expansions = 0;  // times this node was the expanded one

  std::uint32_t kd_leaf = kNoKdLeaf;
  double own_volume = 0.0;
  double subtree_volume = 0.0;

  double prior = 1.0;           // policy density of `action`
  double intrinsic = 0.0;       // count-based bonus computed at creation
  double intrinsic_sum = 0.0;   // over the subtree
  std::uint64_t subtree_size = 1;

  double mean() const { return visit_count ? value_sum / static_cast<double>(visit_count) : 0.0; }
};

template <std::size_t D, std::size_t A>
class SearchTree {
 public:
  using Node = SearchNode<D, A>;

  SearchTree() = default;
  SearchTree(double gamma, int horizon) : gamma_(gamma), horizon_(horizon) {}

  double gamma() const { return gamma_; }
  int horizon() const { return horizon_; }
  std::size_t size() const { return nodes_.size(); }
  bool empty() const { return nodes_.empty(); }
  Node& operator[](NodeId id) { return nodes_[id]; }
  const Node& operator[](NodeId id) const { return nodes_[id]; }
  const std::vector<Node>& nodes() const { return nodes_; }

  NodeId add_root(const Vec<D>& state, double reward, bool goal) {
    nodes_.clear();
    Node n;
    n.state = state;
    n.reward = reward;
    n.goal = goal;
    n.cum_reward = 0.0;
    // A goal start earns the reward on every step of the episode.
    n.earned = goal ? static_cast<double>(horizon_) - 1.0 : 0.0;
    n.max_earned = n.earned;
    nodes_.push_back(n);
    return 0;
  }

  NodeId add_child(NodeId parent, const Vec<A>& action, const env::StepOutcome<D>& out) {
    const auto id = static_cast<NodeId>(nodes_.size());
    Node n;
    {
      const Node& p = nodes_[parent];
      n.state = out.next_state;
      n.action = action;
      n.parent = parent;
      n.depth = p.depth + 1;
      n.reward = out.reward;
      n.goal = out.terminal;
      n.path_reward = p.path_reward + std::pow(gamma_, p.depth) * p.reward;
      n.cum_reward = p.cum_reward + out.reward;
      const int remaining = horizon_ - n.depth;
      n.earned = n.goal ? n.cum_reward + env::arrival_bonus(n.depth, horizon_)
                        : n.cum_reward + out.reward * std::max(0, remaining);
      n.max_earned = n.earned;
    }
    nodes_.push_back(n);
    nodes_[parent].children.push_back(id);
    for (NodeId a = parent; a != kNoParent; a = nodes_[a].parent) {
      if (nodes_[a].max_earned >= n.earned) break;
      nodes_[a].max_earned = n.earned;
    }
    return id;
  }

  /// A node that ends the episode: the goal, or the horizon.
  bool terminal(NodeId id) const { return nodes_[id].goal || nodes_[id].depth >= horizon_; }

  std::vector<NodeId> path_to(NodeId id) const {
    std::vector<NodeId> p;
    for (NodeId a = id; a != kNoParent; a = nodes_[a].parent) p.push_back(a);
    return {p.rbegin(), p.rend()};
  }

  /// Child-index path from the root, e.g. "root/2/0".
  std::string describe_path(NodeId id) const {
    std::string s = "root";
    const auto p = path_to(id);
    for (std::size_t k = 1; k < p.size(); ++k) {
      const auto& ch = nodes_[p[k - 1]].children;
      for (std::size_t i = 0; i < ch.size(); ++i)
        if (ch[i] == p[k]) s += "/" + std::to_string(i);
    }
    return s;
  }

  nlohmann::json to_json(bool with_volumes = true) const {
    nlohmann::json arr = nlohmann::json::array();
    for (NodeId i = 0; i < nodes_.size(); ++i) {
      const auto& n = nodes_[i];
      nlohmann::json j{{"id", i},
                       {"parent", n.parent == kNoParent ? nlohmann::json(nullptr) : nlohmann::json(n.parent)},
                       {"depth", n.depth},
                       {"state", n.state},
                       {"action", n.action},
                       {"reward", n.reward},
                       {"value", n.mean()},
                       {"visits", n.visit_count},
                       {"max_earned", n.max_earned}};
      if (with_volumes) {
        j["own_volume"] = n.own_volume;
        j["subtree_volume"] = n.subtree_volume;
      }
      arr.push_back(std::move(j));
    }
    return arr;
  }

 private:
  double gamma_ = 0.95;
  int horizon_ = 50;
  std::vector<Node> nodes_;
};

/**
 * Open-loop plan: the path to the node with the largest earned return,
 * preferring deeper nodes on ties and then the lexicographically first path.
 */
template <std::size_t D, std::size_t A>
std::vector<Vec<A>> openloop_select_plan(const SearchTree<D, A>& tree, NodeId root = 0) {
  std::vector<Vec<A>> plan;
  if (tree.empty()) return plan;
  struct Best {
    double earned;
    int depth;
    NodeId node;
  };
  // Children have larger ids than parents, so one reverse sweep suffices.
  std::vector<Best> best(tree.size());
  for (std::size_t k = tree.size(); k-- > 0;) {
    const auto& n = tree[static_cast<NodeId>(k)];
    Best b{n.earned, n.depth, static_cast<NodeId>(k)};
    for (NodeId c : n.children) {
      const Best& cb = best[c];
      if (cb.earned > b.earned || (cb.earned == b.earned && cb.depth > b.depth)) b = cb;
    }
    best[k] = b;
  }
  const auto path = tree.path_to(best[root].node);
  bool started = false;
  for (NodeId id : path) {
    if (started) plan.push_back(tree[id].action);
    if (id == root) started = true;
  }
  return plan;
}

/**
 * Turns raw child advantages (backed-up return minus node value) into
 * training weights: the positive part, divided by the number of children.
 * Negative weights would let the log-density surrogate fall without bound
 * by pushing the policy mean away from poor actions.
 */
inline void advantage_weights(std::vector<double>& adv) {
  if (adv.empty()) return;
  const double k = static_cast<double>(adv.size());
  for (double& a : adv) a = std::max(a, 0.0) / k;
}

// ---------------------------------------------------------------------------

enum class Algorithm { VolumeMcts, AlphaZero, AlphaZeroCbe, AlphaZeroOpenLoop, VolumeRrtAblation };

inline std::string to_string(Algorithm a) {
  switch (a) {
    case Algorithm::VolumeMcts: return "volume-mcts";
    case Algorithm::AlphaZero: return "alphazero";
    case Algorithm::AlphaZeroCbe: return "alphazero-cbe";
    case Algorithm::AlphaZeroOpenLoop: return "alphazero-openloop";
    case Algorithm::VolumeRrtAblation: return "volume-rrt-ablation";
  }
  return "?";
}

inline Algorithm parse_algorithm(const std::string& s) {
  for (auto a : {Algorithm::VolumeMcts, Algorithm::AlphaZero, Algorithm::AlphaZeroCbe, Algorithm::AlphaZeroOpenLoop,
                 Algorithm::VolumeRrtAblation})
    if (to_string(a) == s) return a;
  throw std::invalid_argument("unknown algorithm: " + s);
}

struct PlannerConfig {
  Algorithm algorithm = Algorithm::VolumeMcts;
  double gamma = 0.95;
  double c = 20.0;
  int rollouts = 5000;
  int horizon = 50;
  double pw_coeff = 1.0;
  double pw_exponent = 0.5;
  std::uint64_t seed = 0;
  bool value_floor_enabled = true;
  bool action_reward_variant = false;
  /// Measure volumes as fractions of the state box instead of raw units.
  bool normalize_volumes = true;
  /// Drop expansions whose transition leaves the state unchanged.
  bool skip_noop_expansions = false;
  double cbe_bandwidth = 0.5;
  double cbe_coefficient = 20.0;
  /// Scale the exploration weight like lambda: coefficient / sqrt(parent visits).
  bool cbe_decay = true;
  /// Stop as soon as a goal node exists (used by the exploration check).
  bool stop_on_goal = false;
  /// Test fixture: skip the volume transfer out of split nodes' ancestors.
  bool inject_volume_bug = false;

  void validate() const {
    if (!(gamma > 0.0 && gamma < 1.0)) throw std::invalid_argument("gamma must be in (0, 1)");
    if (!(c > 0.0)) throw std::invalid_argument("c must be > 0");
    if (rollouts < 0) throw std::invalid_argument("rollouts must be >= 0");
    if (horizon < 1) throw std::invalid_argument("horizon must be >= 1");
    if (!(pw_exponent > 0.0 && pw_exponent <= 1.0)) throw std::invalid_argument("pw_exponent must be in (0, 1]");
    if (!(pw_coeff > 0.0)) throw std::invalid_argument("pw_coeff must be > 0");
  }
};

struct RunRecord {
  std::string algorithm;
  std::string env;
  int size = 0;
  std::string phase = "untrained";
  std::uint64_t seed = 0;
  int rollouts = 0;
  double ret = 0.0;
  bool success = false;
  std::optional<std::uint64_t> expansions_to_goal;
  double ms = 0.0;
  bool value_floor = true;
};

}  // namespace vmcts::planner
