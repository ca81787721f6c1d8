/**
 * Volume-MCTS: tree search whose expansion distribution solves the
 * occupancy-regularized objective, with kd-tree region volumes as the
 * density estimate and kd-tree value estimates for Q.
 *
 * Each iteration descends from the root. At node n the moves are STAY
 * (expand n itself; volume = n's kd region, q = kd value of n's state) and
 * every child (volume = child's subtree volume, q = kd value of the child's
 * state). Moves are weighted by w = gamma^depth * P(n reached) and sampled
 * from the per-node closed-form policy with lambda = c / sqrt(iteration).
 * The zero-reward ablation sets every q to 0, which reduces the expansion
 * distribution to region-volume proportions, as in kinodynamic RRT.
 */

#pragma once

#include <chrono>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "vmcts/env/episode.hpp"
#include "vmcts/occupancy/occupancy.hpp"
#include "vmcts/planner/models.hpp"
#include "vmcts/planner/search_tree.hpp"
#include "vmcts/spatial/kd_tree.hpp"

namespace vmcts::planner {

/// Offending node of a failed subtree-volume audit.
struct VolumeAuditFailure {
  NodeId node = 0;
  std::string path;
  double expected = 0.0;
  double actual = 0.0;
};

template <std::size_t D, std::size_t A>
std::optional<VolumeAuditFailure> audit_volumes(const SearchTree<D, A>& tree, double total_volume,
                                                double rel_tol = 1e-9) {
  if (tree.empty()) return std::nullopt;
  std::vector<double> sub(tree.size(), 0.0);
  for (std::size_t k = tree.size(); k-- > 0;) {
    sub[k] += tree[static_cast<NodeId>(k)].own_volume;
    if (tree[static_cast<NodeId>(k)].parent != kNoParent) sub[tree[static_cast<NodeId>(k)].parent] += sub[k];
  }
  const double tol = rel_tol * total_volume;
  for (NodeId i = 0; i < tree.size(); ++i) {
    if (std::abs(sub[i] - tree[i].subtree_volume) > tol)
      return VolumeAuditFailure{i, tree.describe_path(i), sub[i], tree[i].subtree_volume};
  }
  if (std::abs(sub[0] - total_volume) > tol) return VolumeAuditFailure{0, "root", total_volume, sub[0]};
  return std::nullopt;
}

template <env::Environment E>
class VolumeSearch {
 public:
  static constexpr std::size_t D = E::kStateDim;
  static constexpr std::size_t A = E::kActionDim;
  using Tree = SearchTree<D, A>;

  VolumeSearch(const E& env, PlannerConfig cfg, Models<D, A> models = {})
      : env_(env),
        cfg_(cfg),
        models_(models),
        rng_(mix_seed(cfg.seed, 0x766F6C)),
        kd_(env.state_box()),
        tree_(cfg.gamma, cfg.horizon),
        total_volume_(env.state_box().volume()),
        volume_unit_(cfg.normalize_volumes ? total_volume_ : 1.0),
        ablation_(cfg.algorithm == Algorithm::VolumeRrtAblation) {
    cfg_.validate();
    if (ablation_) models_ = Models<D, A>{};
    models_.box = env.state_box();
    const auto s0 = env.start();
    tree_.add_root(s0, env.reward(s0), env.is_goal(s0));
    const auto rep = kd_.insert(s0, initial_value(s0, env.reward(s0)), 0);
    tree_[0].kd_leaf = rep.new_leaf;
    tree_[0].own_volume = tree_[0].subtree_volume = rep.new_volume;
    if (tree_[0].goal) expansions_to_goal_ = 0;
  }

  const Tree& tree() const { return tree_; }
  const spatial::KdTree<D>& kd() const { return kd_; }
  std::uint64_t iterations() const { return iterations_; }
  std::uint64_t expansions() const { return expansions_; }
  std::uint64_t noop_expansions() const { return noop_expansions_; }
  std::optional<std::uint64_t> expansions_to_goal() const { return expansions_to_goal_; }
  double total_volume() const { return total_volume_; }

  /// Runs the configured number of iterations (or until a goal, if requested).
  void run() {
    for (int k = 0; k < cfg_.rollouts; ++k) {
      if (cfg_.stop_on_goal && expansions_to_goal_) break;
      iterate();
    }
  }

  /// One descent, expansion and backup.
  void iterate() {
    ++iterations_;
    const double lambda = cfg_.c / std::sqrt(static_cast<double>(iterations_));
    path_.clear();
    NodeId id = 0;
    double reach = 1.0;
    double leaf_value = 0.0;
    for (;;) {
      path_.push_back(id);
      if (tree_.terminal(id)) {
        leaf_value = estimate(id);
        break;
      }
      const std::size_t m = sample_move(id, reach, lambda, rng_.uniform());
      if (m == 0) {
        leaf_value = tree_[id].reward + cfg_.gamma * expand(id);
        break;
      }
      reach *= probs_[m];
      id = tree_[id].children[m - 1];
    }
    backup(leaf_value);
  }

  /**
   * Samples a move at `id` from the regularized policy: 0 is STAY, k > 0 the
   * (k-1)-th child. Leaves the move probabilities in probs().
   */
  std::size_t sample_move(NodeId id, double reach, double lambda, double u) {
    const auto& n = tree_[id];
    const double w = std::pow(cfg_.gamma, n.depth - tree_[0].depth) * reach;
    // Repeated collisions can halve a region down to zero width; a move
    // without volume has probability zero and is left out of the solve.
    scores_.clear();
    moves_.clear();
    if (n.own_volume > 0.0) {
      scores_.push_back({estimate(id), n.own_volume / volume_unit_, w});
      moves_.push_back(0);
    }
    for (std::size_t k = 0; k < n.children.size(); ++k) {
      const NodeId c = n.children[k];
      if (!(tree_[c].subtree_volume > 0.0)) continue;
      scores_.push_back({estimate(c), tree_[c].subtree_volume / volume_unit_, w});
      moves_.push_back(k + 1);
    }
    probs_.assign(n.children.size() + 1, 0.0);
    if (scores_.size() == 1) {
      probs_[moves_[0]] = 1.0;
      return moves_[0];
    }
    const occupancy::TreeMoveDistribution dist =
        cfg_.action_reward_variant
            ? occupancy::tree_policy_action_reward_variant(scores_, lambda, static_cast<int>(n.children.size()))
            : occupancy::tree_policy(scores_, lambda);
    for (std::size_t k = 0; k < moves_.size(); ++k) probs_[moves_[k]] = dist.probs[k];
    return moves_[dist.sample_at(u)];
  }

  /// Descends without expanding; returns the node whose STAY was chosen.
  NodeId sample_expansion_target(Rng& rng, double lambda) {
    NodeId id = 0;
    double reach = 1.0;
    for (;;) {
      if (tree_.terminal(id)) return id;
      const std::size_t m = sample_move(id, reach, lambda, rng.uniform());
      if (m == 0) return id;
      reach *= probs_[m];
      id = tree_[id].children[m - 1];
    }
  }

  const std::vector<double>& probs() const { return probs_; }

  /// Value estimate of a node: kd half-depth value, floored; 0 in the ablation.
  double estimate(NodeId id) const {
    if (ablation_) return 0.0;
    const auto& n = tree_[id];
    double v = kd_.value_at(n.kd_leaf);
    if (cfg_.value_floor_enabled) v = std::max(v, n.reward / (1.0 - cfg_.gamma));
    return v;
  }

  /// Adds one child to `id` with an action from the policy; returns its value estimate.
  double expand(NodeId id) {
    ++expansions_;
    ++tree_[id].expansions;
    const auto a = models_.sample_action(tree_[id].state, rng_);
    const auto out = env_.step(tree_[id].state, a);
    if (cfg_.skip_noop_expansions && out.next_state == tree_[id].state) {
      ++noop_expansions_;
      return estimate(id);
    }
    const NodeId child = tree_.add_child(id, a, out);
    const auto rep = kd_.insert(out.next_state, initial_value(out.next_state, out.reward), child);
    tree_[child].kd_leaf = rep.new_leaf;
    apply_volume_report(child, rep);
    if (out.terminal && !expansions_to_goal_) expansions_to_goal_ = expansions_;
    return estimate(child);
  }

  std::vector<typename E::Action> plan() const { return openloop_select_plan(tree_); }

  /// Every node with at least one child; targets and advantages use kd values.
  std::vector<learn::TrainSample> training_data() const {
    std::vector<learn::TrainSample> out;
    for (NodeId i = 0; i < tree_.size(); ++i) {
      const auto& n = tree_[i];
      if (n.children.empty()) continue;
      learn::TrainSample s;
      s.state = models_.features(n.state);
      s.value_target = estimate(i);
      for (NodeId c : n.children) {
        s.actions.emplace_back(tree_[c].action.begin(), tree_[c].action.end());
        s.advantages.push_back(n.reward + cfg_.gamma * estimate(c) - s.value_target);
      }
      advantage_weights(s.advantages);
      out.push_back(std::move(s));
    }
    return out;
  }

 private:
  double initial_value(const Vec<D>& s, double reward) const {
    if (ablation_) return 0.0;
    double v = models_.value_of(s);
    if (cfg_.value_floor_enabled) v = std::max(v, reward / (1.0 - cfg_.gamma));
    return v;
  }

  void apply_volume_report(NodeId child, const spatial::InsertReport& rep) {
    const auto old = static_cast<NodeId>(rep.old_payload);
    const double delta = rep.old_volume - rep.new_old_volume;
    tree_[old].own_volume = rep.new_old_volume;
    if (!cfg_.inject_volume_bug) {
      for (NodeId a = old; a != kNoParent; a = tree_[a].parent) tree_[a].subtree_volume -= delta;
    } else {
      tree_[old].subtree_volume -= delta;
    }
    tree_[child].own_volume = tree_[child].subtree_volume = rep.new_volume;
    for (NodeId a = tree_[child].parent; a != kNoParent; a = tree_[a].parent) tree_[a].subtree_volume += rep.new_volume;
  }

  void backup(double value) {
    for (std::size_t k = path_.size(); k-- > 0;) {
      auto& n = tree_[path_[k]];
      if (k + 1 < path_.size()) value = n.reward + cfg_.gamma * value;
      n.value_sum += value;
      ++n.visit_count;
      kd_.backprop_at(n.kd_leaf, value);
    }
  }

  const E& env_;
  PlannerConfig cfg_;
  Models<D, A> models_;
  Rng rng_;
  spatial::KdTree<D> kd_;
  Tree tree_;
  double total_volume_;
  double volume_unit_;
  bool ablation_;
  std::uint64_t iterations_ = 0;
  std::uint64_t expansions_ = 0;
  std::uint64_t noop_expansions_ = 0;
  std::optional<std::uint64_t> expansions_to_goal_;
  std::vector<NodeId> path_;
  std::vector<occupancy::MoveScore> scores_;
  std::vector<std::size_t> moves_;
  std::vector<double> probs_;
};

/// Outcome of one open-loop search followed by plan execution.
template <env::Environment E>
struct OpenLoopOutcome {
  std::vector<typename E::Action> plan;
  std::vector<env::StepOutcome<E::kStateDim>> steps;
  double ret = 0.0;
};

template <env::Environment E>
OpenLoopOutcome<E> execute_plan(const E& env, std::vector<typename E::Action> plan, int horizon) {
  OpenLoopOutcome<E> o;
  o.plan = std::move(plan);
  o.steps = env::replay_plan(env, o.plan, horizon);
  o.ret = env::undiscounted_return(o.steps);
  return o;
}

}  // namespace vmcts::planner
