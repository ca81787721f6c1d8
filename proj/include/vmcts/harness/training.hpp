/**
 * Training loop: alternate one planning episode with the current networks
 * and one pass of mini-batch updates on the data that episode produced.
 * Training mazes come from their own seed range so evaluation mazes
 * (maze seed = run seed) are never trained on.
 */

#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "vmcts/learn/train.hpp"
#include "vmcts/planner/run.hpp"

namespace vmcts::harness {

inline constexpr std::uint64_t kTrainingMazeBase = 1'000'000;
inline constexpr std::uint64_t kHeldOutMazeBase = 2'000'000;

struct TrainingSettings {
  int episodes = 200;
  int batches = 40;
  int batch_size = 256;
  std::uint64_t seed = 0;
  int heldout_mazes = 3;
  /// Held-out mse is measured before training and after every `eval_every` episodes.
  int eval_every = 50;
  std::vector<int> hidden{256, 256, 256};
};

struct TrainingReport {
  std::vector<int> eval_episodes;
  std::vector<double> heldout_mse;
  std::vector<double> episode_returns;
  std::vector<double> final_batch_loss;
};

/**
 * Trains `learner` in place. `make_env(maze_seed)` builds the environment of
 * one episode; `base` fixes the algorithm and search budget.
 */
template <class MakeEnv>
TrainingReport train_models(MakeEnv&& make_env, const planner::PlannerConfig& base, learn::Learner& learner,
                            const TrainingSettings& settings) {
  using E = std::decay_t<decltype(make_env(std::uint64_t{0}))>;
  constexpr std::size_t D = E::kStateDim, A = E::kActionDim;

  // Held-out targets: kd values from untrained Volume-MCTS searches.
  std::vector<learn::TrainSample> heldout;
  for (int k = 0; k < settings.heldout_mazes; ++k) {
    const auto env = make_env(kHeldOutMazeBase + static_cast<std::uint64_t>(k));
    planner::PlannerConfig hc = base;
    hc.algorithm = planner::Algorithm::VolumeMcts;
    hc.seed = kHeldOutMazeBase + static_cast<std::uint64_t>(k);
    auto r = planner::run_planner(env, hc, {}, 0, true);
    heldout.insert(heldout.end(), r.data.begin(), r.data.end());
  }

  TrainingReport rep;
  auto evaluate = [&](int episode) {
    rep.eval_episodes.push_back(episode);
    rep.heldout_mse.push_back(learn::value_mse(learner.value, heldout));
  };
  evaluate(0);

  Rng rng(mix_seed(settings.seed, 0x747261));
  const double lambda = base.c / std::sqrt(static_cast<double>(std::max(base.rollouts, 1)));
  for (int e = 1; e <= settings.episodes; ++e) {
    const std::uint64_t maze_seed = kTrainingMazeBase + settings.seed * 100'000 + static_cast<std::uint64_t>(e);
    const auto env = make_env(maze_seed);
    planner::PlannerConfig pc = base;
    pc.seed = maze_seed;
    planner::Models<D, A> models{&learner.value, &learner.policy, {}};
    auto r = planner::run_planner(env, pc, models, 0, true);
    rep.episode_returns.push_back(r.record.ret);
    const auto trace = learn::train_epoch(learner, r.data, lambda, rng, settings.batch_size, settings.batches);
    rep.final_batch_loss.push_back(trace.empty() ? 0.0 : trace.back());
    if (settings.eval_every > 0 && (e % settings.eval_every == 0 || e == settings.episodes) &&
        rep.eval_episodes.back() != e)
      evaluate(e);
  }
  return rep;
}

}  // namespace vmcts::harness
