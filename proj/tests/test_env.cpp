#include <cmath>
#include <numbers>
#include <set>

#include <gtest/gtest.h>

#include "vmcts/env/episode.hpp"

using namespace vmcts;
using namespace vmcts::env;

namespace {

MazeSpec open_maze(int n) {
  MazeSpec m = generate_maze(n, 0);
  m.walls.clear();
  return m;
}

}  // namespace

TEST(Maze, GenerationIsDeterministic) {
  for (int n = 2; n <= 6; ++n) {
    EXPECT_EQ(generate_maze(n, 17), generate_maze(n, 17));
    EXPECT_EQ(to_json(generate_maze(n, 17)).dump(), to_json(generate_maze(n, 17)).dump());
  }
  bool differs = false;
  for (std::uint64_t s = 1; s < 10 && !differs; ++s) differs = !(generate_maze(5, 0) == generate_maze(5, s));
  EXPECT_TRUE(differs);
}

TEST(Maze, EveryTileReachableFromStart) {
  for (int n = 2; n <= 8; ++n)
    for (std::uint64_t s = 0; s < 25; ++s) {
      const auto m = generate_maze(n, s);
      for (int d : reachable_tiles(m, 0)) EXPECT_GE(d, 0) << "size " << n << " seed " << s;
    }
}

TEST(Maze, GoalInFarCorner) {
  const auto m = generate_maze(4, 3);
  EXPECT_DOUBLE_EQ(m.goal_center[0], 3.5);
  EXPECT_DOUBLE_EQ(m.goal_center[1], 3.5);
  EXPECT_DOUBLE_EQ(m.start()[0], 0.5);
}

TEST(Maze, JsonRoundTrip) {
  const auto m = generate_maze(5, 11);
  EXPECT_EQ(maze_from_json(to_json(m)), m);
}

TEST(Maze, SegmentIntersection) {
  EXPECT_TRUE(segments_intersect({{0, 0}, {1, 1}}, {{0, 1}, {1, 0}}));
  EXPECT_FALSE(segments_intersect({{0, 0}, {1, 0}}, {{0, 1}, {1, 1}}));
  EXPECT_TRUE(segments_intersect({{0, 0}, {1, 0}}, {{1, 0}, {1, 1}}));  // touching counts
}

TEST(Geometric, FreeStepMovesByVelocity) {
  const GeometricMaze env(open_maze(4));
  const auto o = env.step({1.5, 1.5}, {0.5, -0.25});
  EXPECT_NEAR(o.next_state[0], 2.0, 1e-12);
  EXPECT_NEAR(o.next_state[1], 1.25, 1e-12);
  EXPECT_FALSE(o.terminal);
}

TEST(Geometric, BlockedStepStays) {
  const GeometricMaze env(open_maze(2));
  const auto o = env.step({0.5, 0.5}, {-1.0, 0.0});  // through the outer wall
  EXPECT_EQ(o.next_state, (Vec<2>{0.5, 0.5}));
}

TEST(Geometric, GoalGivesRewardAndTerminates) {
  const GeometricMaze env(open_maze(2));
  const auto o = env.step({0.5, 1.5}, {1.0, 0.0});
  EXPECT_TRUE(o.terminal);
  EXPECT_DOUBLE_EQ(o.reward, 1.0);
}

TEST(Geometric, RejectsOutOfRangeAction) {
  const GeometricMaze env(open_maze(2));
  EXPECT_THROW(env.step({0.5, 0.5}, {1.5, 0.0}), std::invalid_argument);
  EXPECT_THROW(env.step({0.5, 0.5}, {std::nan(""), 0.0}), std::invalid_argument);
}

TEST(Geometric, RandomStepsNeverCrossWalls) {
  Rng rng(5);
  for (std::uint64_t s = 0; s < 10; ++s) {
    const GeometricMaze env(generate_maze(5, s));
    const auto segs = wall_segments(env.spec());
    Vec<2> p = env.start();
    for (int k = 0; k < 500; ++k) {
      const auto o = env.step(p, {rng.uniform(-1, 1), rng.uniform(-1, 1)});
      if (o.next_state != p)
        for (const auto& w : segs) ASSERT_FALSE(segments_intersect({p, o.next_state}, w));
      ASSERT_TRUE(env.state_box().contains(o.next_state));
      p = o.terminal ? env.start() : o.next_state;
    }
  }
}

TEST(Dubins, StraightLine) {
  const DubinsMaze env(open_maze(4));
  const auto o = env.step({1.5, 1.5, 0.0}, {1.0, 0.0});
  EXPECT_NEAR(o.next_state[0], 2.5, 1e-6);
  EXPECT_NEAR(o.next_state[1], 1.5, 1e-6);
  EXPECT_NEAR(o.next_state[2], 0.0, 1e-6);
}

TEST(Dubins, RotationInPlace) {
  const DubinsMaze env(open_maze(4));
  const auto o = env.step({1.5, 1.5, 0.0}, {0.0, 1.0});
  EXPECT_NEAR(o.next_state[0], 1.5, 1e-6);
  EXPECT_NEAR(o.next_state[1], 1.5, 1e-6);
  EXPECT_NEAR(o.next_state[2], std::numbers::pi / 2, 1e-6);
}

TEST(Dubins, ConstantCurvatureArc) {
  const DubinsMaze env(open_maze(4));
  const double w = std::numbers::pi / 2, r = 1.0 / w;
  const auto o = env.step({1.5, 1.5, 0.0}, {1.0, 1.0});
  EXPECT_NEAR(o.next_state[0], 1.5 + r * std::sin(w), 1e-6);
  EXPECT_NEAR(o.next_state[1], 1.5 + r * (1 - std::cos(w)), 1e-6);
  EXPECT_NEAR(o.next_state[2], w, 1e-6);
}

TEST(Dubins, HeadingWraps) {
  const DubinsMaze env(open_maze(4));
  const auto o = env.step({1.5, 1.5, 3.0}, {0.0, 1.0});
  EXPECT_LE(o.next_state[2], std::numbers::pi);
  EXPECT_GT(o.next_state[2], -std::numbers::pi);
  EXPECT_NEAR(o.next_state[2], 3.0 + std::numbers::pi / 2 - 2 * std::numbers::pi, 1e-6);
}

TEST(Dubins, CollisionFreezes) {
  const DubinsMaze env(open_maze(2));
  const Vec<3> s{0.5, 0.5, std::numbers::pi};
  EXPECT_EQ(env.step(s, {1.0, 0.0}).next_state, s);
}

TEST(Episode, ReturnExamples) {
  const GeometricMaze env(open_maze(2));
  // Goal reached on the first step: 1 plus 48 remaining steps.
  auto first = rollout_episode(env, [](const Vec<2>& s, int) { return s[1] < 1 ? Vec<2>{1, 1} : Vec<2>{0, 0}; }, 50);
  EXPECT_DOUBLE_EQ(undiscounted_return(first), 49.0);
  auto never = rollout_episode(env, [](const Vec<2>&, int) { return Vec<2>{0, 0}; }, 50);
  EXPECT_EQ(never.size(), 50u);
  EXPECT_DOUBLE_EQ(undiscounted_return(never), 0.0);
  auto last = rollout_episode(env, [](const Vec<2>&, int t) { return t == 50 ? Vec<2>{1, 1} : Vec<2>{0, 0}; }, 50);
  EXPECT_DOUBLE_EQ(undiscounted_return(last), 1.0);
  EXPECT_DOUBLE_EQ(arrival_return(1, 50), 49.0);
  EXPECT_DOUBLE_EQ(arrival_return(50, 50), 1.0);
}

TEST(Episode, DiscountedReturnPaysBonusPerStep) {
  std::vector<StepOutcome<2>> steps(2);
  steps[1].reward = 1.0;
  steps[1].steps_remaining_bonus = 2.0;
  const double g = 0.9;
  EXPECT_NEAR(discounted_return(steps, g), g + g * g + g * g * g, 1e-12);
}

TEST(Episode, BadPolicyActionThrows) {
  const GeometricMaze env(open_maze(2));
  EXPECT_THROW(rollout_episode(env, [](const Vec<2>&, int) { return Vec<2>{2, 0}; }, 5), std::invalid_argument);
  EXPECT_THROW(rollout_episode(env, [](const Vec<2>&, int) { return Vec<2>{0, 0}; }, 0), std::invalid_argument);
}

TEST(Episode, ReplayPadsWithStay) {
  const GeometricMaze env(open_maze(3));
  const auto steps = replay_plan(env, {{1.0, 0.0}}, 4);
  ASSERT_EQ(steps.size(), 4u);
  EXPECT_EQ(steps.back().next_state, (Vec<2>{1.5, 0.5}));
}
