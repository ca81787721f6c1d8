/**
 * AlphaZero for continuous actions: PUCT selection, progressive widening
 * with actions drawn from the policy network, network leaf values and
 * average backups. Three flavours share the code:
 *   closed-loop   replans every environment step with rollouts / horizon
 *                 simulations and reuses the chosen subtree,
 *   cbe           closed-loop plus a count-based exploration term in
 *                 selection (mean intrinsic reward over the child's subtree),
 *   open-loop     one search with the whole budget, then the best branch.
 */

#pragma once

#include <cmath>
#include <limits>
#include <optional>
#include <vector>

#include "vmcts/env/episode.hpp"
#include "vmcts/learn/train.hpp"
#include "vmcts/occupancy/occupancy.hpp"
#include "vmcts/planner/models.hpp"
#include "vmcts/planner/search_tree.hpp"

namespace vmcts::planner {

template <env::Environment E>
class AlphaZeroSearch {
 public:
  static constexpr std::size_t D = E::kStateDim;
  static constexpr std::size_t A = E::kActionDim;
  using Tree = SearchTree<D, A>;

  AlphaZeroSearch(const E& env, PlannerConfig cfg, Models<D, A> models = {})
      : env_(env), cfg_(cfg), models_(models), rng_(mix_seed(cfg.seed, 0x617A)), tree_(cfg.gamma, cfg.horizon) {
    cfg_.validate();
    models_.box = env.state_box();
    cbe_ = cfg.algorithm == Algorithm::AlphaZeroCbe;
    const auto s0 = env.start();
    tree_.add_root(s0, env.reward(s0), env.is_goal(s0));
    if (cbe_) register_intrinsic(0);
  }

  const Tree& tree() const { return tree_; }
  std::uint64_t expansions() const { return expansions_; }
  std::uint64_t simulations() const { return simulations_; }

  /// One selection / widening / backup pass from `root`.
  void simulate(NodeId root) {
    ++simulations_;
    path_.clear();
    NodeId id = root;
    double leaf = 0.0;
    for (;;) {
      path_.push_back(id);
      if (tree_.terminal(id)) {
        leaf = estimate(tree_[id].state, tree_[id].reward);
        break;
      }
      if (should_widen(id)) {
        const NodeId c = widen(id);
        path_.push_back(c);
        leaf = estimate(tree_[c].state, tree_[c].reward);
        break;
      }
      id = select(id);
    }
    for (std::size_t k = path_.size(); k-- > 0;) {
      auto& n = tree_[path_[k]];
      n.value_sum += leaf;
      ++n.visit_count;
      if (k > 0) leaf = tree_[path_[k - 1]].reward + cfg_.gamma * leaf;
    }
  }

  bool should_widen(NodeId id) const {
    const auto& n = tree_[id];
    const double visits = static_cast<double>(std::max<std::uint64_t>(n.visit_count, 1));
    return static_cast<double>(n.children.size()) < cfg_.pw_coeff * std::pow(visits, cfg_.pw_exponent);
  }

  /// Child maximizing PUCT (plus the exploration bonus for CBE); ties go to the lower index.
  NodeId select(NodeId id) const {
    const auto& n = tree_[id];
    double prior_sum = 0.0;
    for (NodeId c : n.children) prior_sum += tree_[c].prior;
    const double cbe_weight =
        cfg_.cbe_decay ? cfg_.cbe_coefficient / std::sqrt(static_cast<double>(std::max<std::uint64_t>(n.visit_count, 1)))
                       : cfg_.cbe_coefficient;
    NodeId best = n.children.front();
    double best_score = -std::numeric_limits<double>::infinity();
    for (NodeId c : n.children) {
      const auto& ch = tree_[c];
      const double prior = prior_sum > 0.0 ? ch.prior / prior_sum : 1.0 / static_cast<double>(n.children.size());
      double s = occupancy::puct_score(cfg_.gamma * ch.mean(), prior, n.visit_count, ch.visit_count, cfg_.c);
      if (cbe_) s += cbe_weight * exploration_value(c);
      if (s > best_score) {
        best_score = s;
        best = c;
      }
    }
    return best;
  }

  /// Mean intrinsic reward over the subtree of `id`.
  double exploration_value(NodeId id) const {
    return tree_[id].intrinsic_sum / static_cast<double>(tree_[id].subtree_size);
  }

  NodeId widen(NodeId id) {
    ++expansions_;
    const auto s = tree_[id].state;
    const auto a = models_.sample_action(s, rng_);
    const auto out = env_.step(s, a);
    const NodeId c = tree_.add_child(id, a, out);
    tree_[c].prior = models_.density(s, a);
    if (cbe_) register_intrinsic(c);
    return c;
  }

  /// Closed-loop episode (AlphaZero and AlphaZero+CBE).
  double run_closed_loop() {
    NodeId root = 0;
    const int H = cfg_.horizon;
    const int base = cfg_.rollouts / H, extra = cfg_.rollouts % H;
    steps_.clear();
    for (int t = 1; t <= H; ++t) {
      const int sims = base + (t <= extra ? 1 : 0);
      for (int k = 0; k < sims; ++k) simulate(root);
      if (tree_[root].children.empty()) widen(root);
      NodeId best = tree_[root].children.front();
      for (NodeId c : tree_[root].children)
        if (tree_[c].visit_count > tree_[best].visit_count) best = c;
      env::StepOutcome<D> out = env_.step(tree_[root].state, tree_[best].action);
      if (out.terminal) {
        out.steps_remaining_bonus = env::arrival_bonus(t, H);
        if (!expansions_to_goal_) expansions_to_goal_ = expansions_;
      }
      steps_.push_back(out);
      executed_.push_back(root);
      root = best;
      if (out.terminal) break;
    }
    return env::undiscounted_return(steps_);
  }

  /// Open-loop episode: one search from the start state, then the best branch.
  double run_open_loop() {
    for (int k = 0; k < cfg_.rollouts; ++k) simulate(0);
    plan_ = openloop_select_plan(tree_);
    steps_ = env::replay_plan(env_, plan_, cfg_.horizon);
    const double ret = env::undiscounted_return(steps_);
    if (ret > 0.0) {
      for (NodeId i = 0; i < tree_.size(); ++i)
        if (tree_[i].goal) {
          expansions_to_goal_ = i;  // node ids count expansions
          break;
        }
    }
    return ret;
  }

  double run() { return cfg_.algorithm == Algorithm::AlphaZeroOpenLoop ? run_open_loop() : run_closed_loop(); }

  std::optional<std::uint64_t> expansions_to_goal() const { return expansions_to_goal_; }
  const std::vector<typename E::Action>& plan() const { return plan_; }
  const std::vector<env::StepOutcome<D>>& steps() const { return steps_; }

  /**
   * Training data: the executed roots for closed-loop search, every node
   * with at least one child for open-loop search.
   */
  std::vector<learn::TrainSample> training_data() const {
    std::vector<NodeId> ids;
    if (cfg_.algorithm == Algorithm::AlphaZeroOpenLoop) {
      for (NodeId i = 0; i < tree_.size(); ++i)
        if (!tree_[i].children.empty()) ids.push_back(i);
    } else {
      ids = executed_;
    }
    std::vector<learn::TrainSample> out;
    for (NodeId i : ids) {
      const auto& n = tree_[i];
      if (n.children.empty() || n.visit_count == 0) continue;
      learn::TrainSample s;
      s.state = models_.features(n.state);
      s.value_target = n.mean();
      for (NodeId c : n.children) {
        if (tree_[c].visit_count == 0) continue;
        s.actions.emplace_back(tree_[c].action.begin(), tree_[c].action.end());
        s.advantages.push_back(n.reward + cfg_.gamma * tree_[c].mean() - n.mean());
      }
      advantage_weights(s.advantages);
      out.push_back(std::move(s));
    }
    return out;
  }

 private:
  double estimate(const Vec<D>& s, double reward) const {
    double v = models_.value_of(s);
    if (cfg_.value_floor_enabled) v = std::max(v, reward / (1.0 - cfg_.gamma));
    return v;
  }

  void register_intrinsic(NodeId id) {
    const occupancy::CbeConfig cc{cfg_.cbe_bandwidth, cfg_.cbe_coefficient};
    double sum = 0.0;
    const auto& s = tree_[id].state;
    for (const auto& n : tree_.nodes()) sum += occupancy::rbf_kernel(n.state, s, cc.bandwidth);
    const double r = std::sqrt(1.0 / sum);
    tree_[id].intrinsic = r;
    tree_[id].intrinsic_sum = r;
    for (NodeId a = tree_[id].parent; a != kNoParent; a = tree_[a].parent) {
      tree_[a].intrinsic_sum += r;
      tree_[a].subtree_size += 1;
    }
  }

  const E& env_;
  PlannerConfig cfg_;
  Models<D, A> models_;
  Rng rng_;
  Tree tree_;
  bool cbe_ = false;
  std::uint64_t expansions_ = 0;
  std::uint64_t simulations_ = 0;
  std::optional<std::uint64_t> expansions_to_goal_;
  std::vector<NodeId> path_;
  std::vector<NodeId> executed_;
  std::vector<typename E::Action> plan_;
  std::vector<env::StepOutcome<D>> steps_;
};

}  // namespace vmcts::planner
