#include <cmath>
#include <numeric>

#include <gtest/gtest.h>

#include "vmcts/occupancy/reference.hpp"

using namespace vmcts;
using namespace vmcts::occupancy;

namespace {

/// Independent bisection on g(alpha) = 1.
double bisect_alpha(const std::vector<MoveScore>& s, double lambda) {
  double top = -1e300, vsum = 0.0;
  for (const auto& m : s) {
    top = std::max(top, m.weighted());
    vsum += m.volume;
  }
  double lo = top + 1e-300, hi = top + lambda * vsum + 1.0;
  for (int i = 0; i < 400; ++i) {
    const double mid = 0.5 * (lo + hi);
    double g = 0.0;
    for (const auto& m : s) g += lambda * m.volume / (mid - m.weighted());
    (g > 1.0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

std::vector<MoveScore> random_scores(Rng& rng, std::size_t n) {
  std::vector<MoveScore> s(n);
  for (auto& m : s) m = {rng.uniform(-10, 50), rng.uniform(1e-4, 1.0), rng.uniform(0.01, 1.0)};
  return s;
}

}  // namespace

TEST(SolveAlpha, SingleMove) {
  const std::vector<MoveScore> s{{0.0, 1.0, 1.0}};
  EXPECT_NEAR(solve_alpha(s, 1.0).alpha, 1.0, 1e-12);
}

TEST(SolveAlpha, SymmetricPair) {
  const std::vector<MoveScore> s{{0.0, 0.5, 1.0}, {0.0, 0.5, 1.0}};
  EXPECT_NEAR(solve_alpha(s, 1.0).alpha, 1.0, 1e-12);
  const auto d = tree_policy(s, 1.0);
  EXPECT_NEAR(d.probs[0], 0.5, 1e-12);
}

TEST(SolveAlpha, QuadraticClosedForm) {
  // 0.5/a + 0.5/(a - 10) = 1  =>  a^2 - 11 a + 5 = 0.
  const std::vector<MoveScore> s{{0.0, 0.5, 1.0}, {10.0, 0.5, 1.0}};
  const double expect = (11.0 + std::sqrt(101.0)) / 2.0;
  const auto r = solve_alpha(s, 1.0);
  EXPECT_NEAR(r.alpha, expect, 1e-10);
  EXPECT_NEAR(r.alpha, bisect_alpha(s, 1.0), 1e-10);
  const auto d = tree_policy(s, 1.0);
  EXPECT_NEAR(d.probs[0], 0.5 / expect, 1e-10);
  EXPECT_NEAR(d.probs[0], 0.0475, 5e-5);
  EXPECT_NEAR(d.probs[1], 0.9525, 5e-5);
}

TEST(SolveAlpha, RandomInstancesMatchBisection) {
  Rng rng(42);
  for (int k = 0; k < 2000; ++k) {
    const auto s = random_scores(rng, 1 + rng.index(30));
    const double lambda = std::exp(rng.uniform(-8, 3));
    const auto r = solve_alpha(s, lambda);
    double top = -1e300, bottom = 1e300, vsum = 0.0;
    for (const auto& m : s) {
      top = std::max(top, m.weighted());
      bottom = std::min(bottom, m.weighted());
      vsum += m.volume;
    }
    ASSERT_GT(r.alpha, top);
    ASSERT_GE(r.alpha, bottom + lambda * vsum - 1e-9 * (1 + std::abs(r.alpha)));
    ASSERT_LE(r.alpha, top + lambda * vsum + 1e-9 * (1 + std::abs(r.alpha)));
    ASSERT_LE(r.residual, kAlphaTolerance);
    ASSERT_NEAR(r.alpha, bisect_alpha(s, lambda), 1e-8 * (1 + std::abs(r.alpha)));
  }
}

TEST(SolveAlpha, Errors) {
  EXPECT_THROW(solve_alpha(std::vector<MoveScore>{}, 1.0), std::invalid_argument);
  const std::vector<MoveScore> s{{0.0, 1.0, 1.0}};
  EXPECT_THROW(solve_alpha(s, 0.0), std::invalid_argument);
  const std::vector<MoveScore> bad{{std::nan(""), 1.0, 1.0}};
  EXPECT_THROW(solve_alpha(bad, 1.0), std::invalid_argument);
}

TEST(TreePolicy, OnlyStay) {
  const std::vector<MoveScore> s{{3.0, 0.2, 0.7}};
  EXPECT_DOUBLE_EQ(tree_policy(s, 0.5).probs[0], 1.0);
}

TEST(TreePolicy, ShiftCovariance) {
  Rng rng(3);
  for (int k = 0; k < 100; ++k) {
    auto s = random_scores(rng, 5);
    for (auto& m : s) m.weight = 1.0;
    const double lambda = rng.uniform(0.1, 5);
    const auto a = tree_policy(s, lambda);
    for (auto& m : s) m.q += 17.0;
    const auto b = tree_policy(s, lambda);
    for (std::size_t i = 0; i < s.size(); ++i) EXPECT_NEAR(a.probs[i], b.probs[i], 1e-9);
  }
}

TEST(TreePolicy, GreedyAsLambdaVanishes) {
  const std::vector<MoveScore> s{{1.0, 0.3, 1.0}, {2.0, 0.3, 1.0}, {1.5, 0.4, 1.0}};
  EXPECT_GT(tree_policy(s, 1e-7).probs[1], 0.999);
}

TEST(TreePolicy, VolumeProportionalAsLambdaGrows) {
  const std::vector<MoveScore> s{{1.0, 0.1, 1.0}, {5.0, 0.3, 1.0}, {-2.0, 0.6, 1.0}};
  const auto d = tree_policy(s, 1e8);
  EXPECT_NEAR(d.probs[0], 0.1, 1e-6);
  EXPECT_NEAR(d.probs[1], 0.3, 1e-6);
  EXPECT_NEAR(d.probs[2], 0.6, 1e-6);
}

TEST(TreePolicy, SampleAtFollowsCdf) {
  TreeMoveDistribution d{{0.2, 0.5, 0.3}};
  EXPECT_EQ(d.sample_at(0.0), 0u);
  EXPECT_EQ(d.sample_at(0.19), 0u);
  EXPECT_EQ(d.sample_at(0.2), 1u);
  EXPECT_EQ(d.sample_at(0.71), 2u);
  EXPECT_EQ(d.sample_at(0.999999), 2u);
  EXPECT_NEAR(d.total(), 1.0, 1e-15);
}

TEST(ActionRewardVariant, ZeroWeightMatchesPlainPolicy) {
  // w multiplies q as well; q = 0 keeps the plain instance unchanged.
  std::vector<MoveScore> s{{0.0, 0.3, 0.0}, {0.0, 0.7, 0.0}};
  const auto a = tree_policy(s, 2.0);
  const auto b = tree_policy_action_reward_variant(s, 2.0, 1);
  for (std::size_t i = 0; i < 2; ++i) EXPECT_NEAR(a.probs[i], b.probs[i], 1e-12);
}

TEST(ActionRewardVariant, OffsetMatchesBisection) {
  const double w = 0.5, lambda = 1.0;
  const std::vector<MoveScore> s{{1.0, 0.2, w}, {3.0, 0.5, w}, {2.0, 0.3, w}};
  const auto d = tree_policy_action_reward_variant(s, lambda, 2);
  std::vector<MoveScore> shifted = s;
  for (auto& m : shifted) m.volume += w / 3.0;
  const double alpha = bisect_alpha(shifted, lambda);
  double total = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const double p = lambda * shifted[i].volume / (alpha - shifted[i].weighted());
    total += p;
    EXPECT_NEAR(d.probs[i], p, 1e-9);
  }
  EXPECT_NEAR(total, 1.0, 1e-9);
  const std::vector<MoveScore> stay{{0.0, 0.4, w}};
  EXPECT_DOUBLE_EQ(tree_policy_action_reward_variant(stay, lambda, 0).probs[0], 1.0);
}

TEST(DirectOccupancy, SingleNode) {
  const std::vector<NodeTerm> n{{3.0, 0.2}};
  EXPECT_DOUBLE_EQ(direct_occupancy(n, 1.0)[0], 1.0);
}

TEST(DirectOccupancy, ZeroValuesGiveVolumeShares) {
  Rng rng(8);
  std::vector<NodeTerm> n(20);
  double total = 0.0;
  for (auto& t : n) total += (t.volume = rng.uniform(0.01, 1.0));
  for (double lambda : {0.1, 1.0, 100.0}) {
    const auto d = direct_occupancy(n, lambda);
    for (std::size_t i = 0; i < n.size(); ++i) EXPECT_NEAR(d[i], n[i].volume / total, 1e-12);
  }
}

TEST(DirectOccupancy, MatchesConvexSolver) {
  Rng rng(9);
  for (int k = 0; k < 20; ++k) {
    std::vector<double> value(20), volume(20);
    std::vector<NodeTerm> n(20);
    for (std::size_t i = 0; i < 20; ++i) {
      value[i] = rng.uniform(-2, 5);
      volume[i] = rng.uniform(0.01, 1.0);
      n[i] = {value[i], volume[i]};
    }
    const double lambda = rng.uniform(0.05, 3.0);
    const auto d = direct_occupancy(n, lambda);
    const auto pg = reference::projected_gradient_occupancy(value, volume, lambda);
    EXPECT_LE(reference::total_variation(d, pg), 1e-6);
  }
}

TEST(DirectOccupancy, PathProductComposition) {
  Rng rng(10);
  for (int k = 0; k < 100; ++k) {
    const auto t = reference::random_tree(rng, 50);
    const auto d = reference::direct(t);
    const auto c = reference::compose_tree_policy(t);
    ASSERT_LE(reference::total_variation(d, c.occupancy), 1e-8) << "tree " << k << " with " << t.size() << " nodes";
  }
}

TEST(Cbe, KernelAndReward) {
  const Vec<2> s{0.3, -1.0};
  const CbeConfig cfg;
  EXPECT_DOUBLE_EQ(rbf_kernel(s, s, 0.5), 1.0);
  const std::vector<Vec<2>> one{s}, two{s, s};
  EXPECT_DOUBLE_EQ(cbe_reward<2>(one, s, cfg), 1.0);
  EXPECT_NEAR(cbe_reward<2>(two, s, cfg), 1.0 / std::sqrt(2.0), 1e-15);
}

TEST(Cbe, MatchesNaiveKernelSum) {
  Rng rng(11);
  std::vector<Vec<2>> pts(100);
  for (auto& p : pts) p = {rng.uniform(0, 5), rng.uniform(0, 5)};
  const Vec<2> q{2.0, 2.5};
  const CbeConfig cfg{0.7, 1.0};
  double sum = 0.0;
  for (const auto& p : pts) {
    const double dx = p[0] - q[0], dy = p[1] - q[1];
    sum += std::exp(-(dx * dx + dy * dy) / (2 * 0.49));
  }
  EXPECT_NEAR(cbe_reward<2>(pts, q, cfg), 1.0 / std::sqrt(sum), 1e-12);
}

TEST(Puct, Examples) {
  EXPECT_DOUBLE_EQ(puct_score(0.0, 1.0, 4, 2, 1.0), 1.0);
  EXPECT_DOUBLE_EQ(puct_score(0.7, 0.0, 9, 3, 5.0), 0.7);
  EXPECT_NEAR(puct_score(0.3, 0.1, 100, 5, 20.0), 4.3, 1e-12);
  EXPECT_TRUE(std::isinf(puct_score(0.0, 0.5, 3, 0, 1.0)));
}

TEST(Schedule, LambdaDecay) {
  const RegularizationSchedule r{20.0, 0.95};
  EXPECT_DOUBLE_EQ(r.lambda_of(100), 2.0);
  EXPECT_DOUBLE_EQ(r.lambda_of(0), 20.0);
  EXPECT_NEAR(RegularizationSchedule::canonical(0.95).c * 0.05, 1.0, 1e-12);
}
