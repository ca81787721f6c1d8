/**
 * Deterministic continuous-state, continuous-action environments.
 *
 * Every environment exposes the same small surface (see the Environment
 * concept): a start state, a pure step function, a state-dependent reward,
 * the bounding box of the state space and the "stay still" action. Rewards
 * are 1 inside the goal region and 0 elsewhere; reaching the goal ends the
 * episode.
 */

#pragma once

#include <cmath>
#include <concepts>
#include <numbers>
#include <stdexcept>
#include <string>

#include "vmcts/common.hpp"
#include "vmcts/env/maze.hpp"

namespace vmcts::env {

template <std::size_t D>
struct StepOutcome {
  Vec<D> next_state{};
  double reward = 0.0;
  bool terminal = false;
  /// Filled in by episode execution on goal arrival; steps never set it.
  double steps_remaining_bonus = 0.0;
};

template <class E>
concept Environment = requires(const E& e, const typename E::State& s, const typename E::Action& a) {
  { E::kStateDim } -> std::convertible_to<std::size_t>;
  { E::kActionDim } -> std::convertible_to<std::size_t>;
  { e.start() } -> std::same_as<typename E::State>;
  { e.step(s, a) } -> std::same_as<StepOutcome<E::kStateDim>>;
  { e.reward(s) } -> std::convertible_to<double>;
  { e.is_goal(s) } -> std::convertible_to<bool>;
  { e.state_box() } -> std::same_as<Box<E::kStateDim>>;
  { e.stay_action() } -> std::same_as<typename E::Action>;
  { e.name() } -> std::convertible_to<std::string>;
};

template <std::size_t A>
void check_action(const Vec<A>& a) {
  for (double x : a)
    if (!std::isfinite(x) || x < -1.0 || x > 1.0)
      throw std::invalid_argument("action component outside [-1, 1]");
}

// ---------------------------------------------------------------------------

/// s' = s + v_max * a; a blocked move leaves the agent where it was.
class GeometricMaze {
 public:
  static constexpr std::size_t kStateDim = 2;
  static constexpr std::size_t kActionDim = 2;
  using State = Vec<2>;
  using Action = Vec<2>;

  explicit GeometricMaze(MazeSpec spec) : spec_(std::move(spec)), walls_(spec_), v_max_(spec_.tile_side) {}

  const MazeSpec& spec() const { return spec_; }
  double v_max() const { return v_max_; }
  std::string name() const { return "geometric"; }

  State start() const { return spec_.start(); }
  Box<2> state_box() const { return spec_.bounds(); }
  Action stay_action() const { return {0.0, 0.0}; }

  bool is_goal(const State& s) const {
    return squared_distance(s, spec_.goal_center) <= spec_.goal_radius * spec_.goal_radius;
  }
  double reward(const State& s) const { return is_goal(s) ? 1.0 : 0.0; }

  StepOutcome<2> step(const State& s, const Action& a) const {
    check_action(a);
    State cand{s[0] + v_max_ * a[0], s[1] + v_max_ * a[1]};
    StepOutcome<2> out;
    out.next_state = walls_.blocked(s, cand) ? s : cand;
    out.reward = reward(out.next_state);
    out.terminal = out.reward > 0.0;
    return out;
  }

  bool blocked(const State& p, const State& q) const { return walls_.blocked(p, q); }

 private:
  MazeSpec spec_;
  WallMap walls_;
  double v_max_;
};

// ---------------------------------------------------------------------------

struct DubinsParams {
  double v_max = 1.0;
  double phi_max = std::numbers::pi / 2.0;
  int substeps = 10;
};

/**
 * Car with state (x, y, heading). Action (speed scale, steering scale) is held
 * constant over one unit of time and integrated with fixed-step RK4. A
 * collision at any substep freezes the car at its pre-step state.
 */
class DubinsMaze {
 public:
  static constexpr std::size_t kStateDim = 3;
  static constexpr std::size_t kActionDim = 2;
  using State = Vec<3>;
  using Action = Vec<2>;

  explicit DubinsMaze(MazeSpec spec, DubinsParams params = {})
      : spec_(std::move(spec)), walls_(spec_), params_(params) {}

  const MazeSpec& spec() const { return spec_; }
  const DubinsParams& params() const { return params_; }
  std::string name() const { return "dubins"; }

  State start() const {
    const auto p = spec_.start();
    return {p[0], p[1], 0.0};
  }
  Box<3> state_box() const {
    const auto b = spec_.bounds();
    return Box<3>{{b.lo[0], b.lo[1], -std::numbers::pi}, {b.hi[0], b.hi[1], std::numbers::pi}};
  }
  Action stay_action() const { return {0.0, 0.0}; }

  bool is_goal(const State& s) const {
    const double dx = s[0] - spec_.goal_center[0], dy = s[1] - spec_.goal_center[1];
    return dx * dx + dy * dy <= spec_.goal_radius * spec_.goal_radius;
  }
  double reward(const State& s) const { return is_goal(s) ? 1.0 : 0.0; }

  /// Integrates one unit of time without collision checks.
  State integrate(const State& s, const Action& a) const {
    const double v = a[0] * params_.v_max;
    const double w = a[1] * params_.phi_max;
    const double h = 1.0 / params_.substeps;
    State cur = s;
    for (int i = 0; i < params_.substeps; ++i) cur = rk4(cur, v, w, h);
    cur[2] = wrap_angle(cur[2]);
    return cur;
  }

  StepOutcome<3> step(const State& s, const Action& a) const {
    check_action(a);
    const double v = a[0] * params_.v_max;
    const double w = a[1] * params_.phi_max;
    const double h = 1.0 / params_.substeps;
    State cur = s;
    bool collided = false;
    for (int i = 0; i < params_.substeps && !collided; ++i) {
      const State nxt = rk4(cur, v, w, h);
      if (walls_.blocked({cur[0], cur[1]}, {nxt[0], nxt[1]})) collided = true;
      cur = nxt;
    }
    StepOutcome<3> out;
    if (collided) {
      out.next_state = s;
    } else {
      out.next_state = cur;
      out.next_state[2] = wrap_angle(cur[2]);
    }
    out.reward = reward(out.next_state);
    out.terminal = out.reward > 0.0;
    return out;
  }

 private:
  static State deriv(const State& s, double v, double w) { return {v * std::cos(s[2]), v * std::sin(s[2]), w}; }

  static State rk4(const State& s, double v, double w, double h) {
    auto add = [](const State& x, const State& k, double f) {
      return State{x[0] + f * k[0], x[1] + f * k[1], x[2] + f * k[2]};
    };
    const State k1 = deriv(s, v, w);
    const State k2 = deriv(add(s, k1, h / 2), v, w);
    const State k3 = deriv(add(s, k2, h / 2), v, w);
    const State k4 = deriv(add(s, k3, h), v, w);
    State out;
    for (int d = 0; d < 3; ++d) out[d] = s[d] + h / 6.0 * (k1[d] + 2 * k2[d] + 2 * k3[d] + k4[d]);
    return out;
  }

  MazeSpec spec_;
  WallMap walls_;
  DubinsParams params_;
};

// ---------------------------------------------------------------------------

/// Obstacle-free rectangle with geometric dynamics; used for exploration-bound checks.
class Corridor {
 public:
  static constexpr std::size_t kStateDim = 2;
  static constexpr std::size_t kActionDim = 2;
  using State = Vec<2>;
  using Action = Vec<2>;

  Corridor(double length, double width, double v_max, State start, State goal, double goal_radius)
      : box_{{0.0, 0.0}, {length, width}}, v_max_(v_max), start_(start), goal_(goal), goal_radius_(goal_radius) {}

  std::string name() const { return "corridor"; }
  State start() const { return start_; }
  Box<2> state_box() const { return box_; }
  Action stay_action() const { return {0.0, 0.0}; }
  double v_max() const { return v_max_; }

  bool is_goal(const State& s) const { return squared_distance(s, goal_) <= goal_radius_ * goal_radius_; }
  double reward(const State& s) const { return is_goal(s) ? 1.0 : 0.0; }

  StepOutcome<2> step(const State& s, const Action& a) const {
    check_action(a);
    State cand{s[0] + v_max_ * a[0], s[1] + v_max_ * a[1]};
    StepOutcome<2> out;
    out.next_state = box_.contains(cand) ? cand : s;
    out.reward = reward(out.next_state);
    out.terminal = out.reward > 0.0;
    return out;
  }

 private:
  Box<2> box_;
  double v_max_;
  State start_;
  State goal_;
  double goal_radius_;
};

static_assert(Environment<GeometricMaze>);
static_assert(Environment<DubinsMaze>);
static_assert(Environment<Corridor>);

}  // namespace vmcts::env
