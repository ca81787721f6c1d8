/**
 * Exploration-bound check on an obstacle-free corridor.
 *
 * A straight chain of `balls` delta-balls, spaced `hop_length` apart, runs
 * from a ball around the start to the end ball; one ball means the start
 * already lies in the goal. With geometric
 * dynamics s' = s + v_max a and a uniform action distribution on [-1, 1]^2,
 * the actions that move a state into a delta-ball around the next waypoint
 * form a disc of radius delta / v_max, so the controllability measure is
 * sigma * delta^2 with sigma = pi / (4 v_max^2). Ball volumes are fractions
 * of the corridor area, matching the planner's normalized volumes.
 *
 * Two budgets are reported. `stated_bound` evaluates
 *   c^2 (1 - gamma)^2 (i |B| sigma delta^dA / 2 + 1)^2  (i = balls),
 * which is about one expansion for any realistic corridor. `inverted_bound`
 * puts the chain term in the denominator,
 *   c^2 (1 - gamma)^2 (2 i / (|B| sigma delta^dA) + 1)^2,
 * which grows with the difficulty of the corridor as a sample bound should.
 */

#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <vector>

#include <json.hpp>

#include "vmcts/env/environment.hpp"
#include "vmcts/planner/volume_mcts.hpp"

namespace vmcts::harness {

struct ExplorationBoundParams {
  int balls = 10;
  double hop_length = 0.8;
  double delta = 0.2;
  double v_max = 1.0;
  double width = 1.0;
  double margin = 0.5;
  double gamma = 0.95;
  double c = 20.0;
  int d_action = 2;

  int hops() const { return balls - 1; }
  double length() const { return 2.0 * margin + hops() * hop_length; }
  double area() const { return length() * width; }
  double sigma() const { return std::numbers::pi / (4.0 * v_max * v_max); }
  /// |B_{delta/5}| as a fraction of the corridor area.
  double ball_volume() const { return std::numbers::pi * std::pow(delta / 5.0, 2) / area(); }
  double controllable_measure() const { return sigma() * std::pow(delta, d_action); }

  double stated_bound() const {
    const double k = c * c * (1.0 - gamma) * (1.0 - gamma);
    return k * std::pow(0.5 * balls * ball_volume() * controllable_measure() + 1.0, 2);
  }
  double inverted_bound() const {
    const double k = c * c * (1.0 - gamma) * (1.0 - gamma);
    return k * std::pow(2.0 * balls / (ball_volume() * controllable_measure()) + 1.0, 2);
  }

  void validate() const {
    if (balls < 1) throw std::invalid_argument("bound: need at least one ball");
    if (!(hop_length > 0 && delta > 0 && v_max > 0 && width > 0 && margin >= 0 && c > 0))
      throw std::invalid_argument("bound: lengths, delta, v_max and c must be positive");
    if (!(gamma > 0 && gamma < 1)) throw std::invalid_argument("bound: gamma must be in (0, 1)");
    if (hop_length > v_max) throw std::invalid_argument("bound: a hop must be reachable in one step");
    if (d_action != 2) throw std::invalid_argument("bound: geometric dynamics have two action dimensions");
  }

  env::Corridor corridor() const {
    const double y = 0.5 * width;
    const Vec<2> start{margin, y};
    const Vec<2> goal{margin + hops() * hop_length, y};
    return env::Corridor(length(), width, v_max, start, goal, delta);
  }
};

struct BoundReport {
  ExplorationBoundParams params;
  std::vector<std::uint64_t> seeds;
  std::vector<std::optional<std::uint64_t>> expansions_to_goal;
  int budget = 0;

  /// Fraction of seeds whose first goal node appeared within `n` expansions.
  double success_fraction(double n) const {
    if (seeds.empty()) return 0.0;
    int hit = 0;
    for (const auto& e : expansions_to_goal)
      if (e && static_cast<double>(*e) <= n) ++hit;
    return static_cast<double>(hit) / static_cast<double>(seeds.size());
  }

  nlohmann::json to_json() const {
    nlohmann::json runs = nlohmann::json::array();
    for (std::size_t i = 0; i < seeds.size(); ++i)
      runs.push_back({{"seed", seeds[i]},
                      {"expansions_to_goal", expansions_to_goal[i] ? nlohmann::json(*expansions_to_goal[i])
                                                                   : nlohmann::json(nullptr)}});
    const double n1 = params.stated_bound();
    return {{"balls", params.balls},
            {"delta", params.delta},
            {"sigma", params.sigma()},
            {"ball_volume", params.ball_volume()},
            {"gamma", params.gamma},
            {"c", params.c},
            {"budget", budget},
            {"stated_bound", n1},
            {"success_at_stated_bound", success_fraction(n1)},
            {"success_at_twice_stated_bound", success_fraction(2.0 * n1)},
            {"inverted_bound", params.inverted_bound()},
            {"success_at_budget", success_fraction(budget)},
            {"runs", runs}};
  }
};

/**
 * Runs the zero-reward search once per seed with `budget` iterations,
 * stopping at the first goal node, and records when it appeared.
 */
inline BoundReport run_exploration_bound_check(const ExplorationBoundParams& params,
                                               const std::vector<std::uint64_t>& seeds, int budget) {
  params.validate();
  BoundReport rep;
  rep.params = params;
  rep.seeds = seeds;
  rep.budget = budget;
  const auto env = params.corridor();
  for (auto seed : seeds) {
    planner::PlannerConfig cfg;
    cfg.algorithm = planner::Algorithm::VolumeRrtAblation;
    cfg.rollouts = budget;
    cfg.seed = seed;
    cfg.gamma = params.gamma;
    cfg.c = params.c;
    cfg.stop_on_goal = true;
    planner::VolumeSearch<env::Corridor> s(env, cfg);
    s.run();
    rep.expansions_to_goal.push_back(s.expansions_to_goal());
  }
  return rep;
}

}  // namespace vmcts::harness
