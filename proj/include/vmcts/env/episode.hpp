/**
 * Episode execution and return accounting.
 *
 * An episode runs for at most `horizon` steps (step indices are 1-based).
 * Arriving in the goal on step t earns reward 1 on that step and ends the
 * episode with a bonus of max(0, horizon - t - 1) for the remaining steps,
 * so the undiscounted return of an arrival on step 1 of 50 is 49 and an
 * arrival on the final step earns 1.
 */

#pragma once

#include <cmath>
#include <functional>
#include <stdexcept>
#include <vector>

#include "vmcts/env/environment.hpp"

namespace vmcts::env {

inline double arrival_bonus(int step, int horizon) {
  return static_cast<double>(std::max(0, horizon - step - 1));
}

/// Undiscounted return of an episode whose goal arrival happens on `step` (1-based).
inline double arrival_return(int step, int horizon) { return 1.0 + arrival_bonus(step, horizon); }

template <std::size_t D>
double undiscounted_return(const std::vector<StepOutcome<D>>& steps) {
  double total = 0.0;
  for (const auto& s : steps) total += s.reward + s.steps_remaining_bonus;
  return total;
}

/// Discounted return; the goal bonus is paid out one unit per remaining step.
template <std::size_t D>
double discounted_return(const std::vector<StepOutcome<D>>& steps, double gamma) {
  double total = 0.0, g = 1.0;
  for (const auto& s : steps) {
    total += g * s.reward;
    g *= gamma;
    const int extra = static_cast<int>(s.steps_remaining_bonus);
    for (int k = 0; k < extra; ++k) {
      total += g;
      g *= gamma;
    }
  }
  return total;
}

/**
 * Runs `policy(state, step)` for up to `horizon` steps, stopping at the goal.
 * A callback that yields a non-finite or out-of-box action raises
 * std::invalid_argument.
 */
template <Environment E, class Policy>
std::vector<StepOutcome<E::kStateDim>> rollout_episode(const E& env, Policy&& policy, int horizon) {
  if (horizon < 1) throw std::invalid_argument("rollout_episode: horizon must be >= 1");
  std::vector<StepOutcome<E::kStateDim>> out;
  out.reserve(static_cast<std::size_t>(horizon));
  typename E::State s = env.start();
  for (int t = 1; t <= horizon; ++t) {
    const typename E::Action a = policy(s, t);
    auto step = env.step(s, a);  // validates the action
    if (step.terminal) step.steps_remaining_bonus = arrival_bonus(t, horizon);
    s = step.next_state;
    out.push_back(step);
    if (step.terminal) break;
  }
  return out;
}

/// Replays a fixed action list, padding with the stay-still action.
template <Environment E>
std::vector<StepOutcome<E::kStateDim>> replay_plan(const E& env, const std::vector<typename E::Action>& plan,
                                                   int horizon) {
  return rollout_episode(
      env,
      [&](const typename E::State&, int t) {
        const auto i = static_cast<std::size_t>(t - 1);
        return i < plan.size() ? plan[i] : env.stay_action();
      },
      horizon);
}

}  // namespace vmcts::env
