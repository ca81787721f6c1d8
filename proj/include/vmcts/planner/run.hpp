#pragma once

#include <chrono>
#include <vector>

#include <json.hpp>

#include "vmcts/planner/alphazero.hpp"
#include "vmcts/planner/volume_mcts.hpp"

namespace vmcts::planner {

struct RunResult {
  RunRecord record;
  std::vector<learn::TrainSample> data;
  nlohmann::json tree;  // filled only when requested
};

/// One seeded episode of any algorithm.
template <env::Environment E>
RunResult run_planner(const E& env, const PlannerConfig& cfg, Models<E::kStateDim, E::kActionDim> models = {},
                      int size = 0, bool want_data = false, bool want_tree = false) {
  const auto t0 = std::chrono::steady_clock::now();
  RunResult r;
  r.record.algorithm = to_string(cfg.algorithm);
  r.record.env = env.name();
  r.record.size = size;
  r.record.phase = models.trained() ? "trained" : "untrained";
  r.record.seed = cfg.seed;
  r.record.rollouts = cfg.rollouts;
  r.record.value_floor = cfg.value_floor_enabled;

  if (cfg.algorithm == Algorithm::VolumeMcts || cfg.algorithm == Algorithm::VolumeRrtAblation) {
    VolumeSearch<E> s(env, cfg, models);
    s.run();
    const auto o = execute_plan(env, s.plan(), cfg.horizon);
    r.record.ret = o.ret;
    r.record.success = o.ret > 0.0;
    if (r.record.success) r.record.expansions_to_goal = s.expansions_to_goal();
    if (want_data) r.data = s.training_data();
    if (want_tree) r.tree = s.tree().to_json();
  } else {
    AlphaZeroSearch<E> s(env, cfg, models);
    r.record.ret = s.run();
    r.record.success = r.record.ret > 0.0;
    if (r.record.success) r.record.expansions_to_goal = s.expansions_to_goal();
    if (want_data) r.data = s.training_data();
    if (want_tree) r.tree = s.tree().to_json(false);
  }
  r.record.ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  return r;
}

}  // namespace vmcts::planner
