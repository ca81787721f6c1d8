#include <cmath>

#include <gtest/gtest.h>

#include "vmcts/spatial/kd_tree.hpp"
#include "vmcts/spatial/voronoi.hpp"

using namespace vmcts;
using namespace vmcts::spatial;

namespace {

const Box<2> kUnit{{0.0, 0.0}, {1.0, 1.0}};

KdTree<2> random_tree(Rng& rng, int n, const Box<2>& box = kUnit) {
  KdTree<2> kd(box);
  for (int i = 0; i < n; ++i)
    kd.insert({rng.uniform(box.lo[0], box.hi[0]), rng.uniform(box.lo[1], box.hi[1])}, rng.uniform(-1, 1),
              static_cast<std::uint64_t>(i));
  return kd;
}

}  // namespace

TEST(KdTree, EmptyLocateThrows) {
  KdTree<2> kd(kUnit);
  EXPECT_THROW(kd.locate({0.5, 0.5}), EmptyTreeError);
}

TEST(KdTree, OutsidePointRejected) {
  KdTree<2> kd(kUnit);
  EXPECT_THROW(kd.insert({1.5, 0.5}, 0.0), std::out_of_range);
  EXPECT_THROW(kd.insert({std::nan(""), 0.5}, 0.0), std::out_of_range);
}

TEST(KdTree, SecondInsertSplitsAtMidpoint) {
  KdTree<2> kd(kUnit);
  const auto first = kd.insert({0.3, 0.3}, 0.0, 1);
  EXPECT_DOUBLE_EQ(first.new_volume, 1.0);
  const auto rep = kd.insert({0.7, 0.3}, 0.0, 2);
  const auto& root = kd.node(kd.root());
  EXPECT_EQ(root.split_dim, 0);
  EXPECT_DOUBLE_EQ(root.split_coord, 0.5);
  EXPECT_DOUBLE_EQ(rep.old_volume, 1.0);
  EXPECT_DOUBLE_EQ(rep.new_old_volume, 0.5);
  EXPECT_DOUBLE_EQ(rep.new_volume, 0.5);
  EXPECT_EQ(rep.old_payload, 1u);
  EXPECT_EQ(kd.node(kd.locate({0.3, 0.3})).payload, 1u);
  EXPECT_EQ(kd.node(kd.locate({0.7, 0.3})).payload, 2u);
}

TEST(KdTree, DuplicatePointSplitsLongestSide) {
  KdTree<2> kd(Box<2>{{0, 0}, {2, 1}});
  kd.insert({0.4, 0.4}, 0.0);
  const auto rep = kd.insert({0.4, 0.4}, 0.0);
  EXPECT_EQ(kd.node(kd.root()).split_dim, 0);
  EXPECT_DOUBLE_EQ(kd.node(kd.root()).split_coord, 1.0);
  EXPECT_DOUBLE_EQ(rep.new_old_volume + rep.new_volume, 2.0);
}

TEST(KdTree, LeafVolumesPartitionTheBox) {
  Rng rng(1);
  for (int trial = 0; trial < 20; ++trial) {
    const auto kd = random_tree(rng, 300);
    double sum = 0.0;
    kd.for_each_leaf([&](KdHandle h, const KdNode<2>& n) {
      sum += n.volume();
      EXPECT_TRUE(n.bounds.contains(n.point));
      EXPECT_EQ(kd.locate(n.point), h);
    });
    EXPECT_NEAR(sum, 1.0, 1e-9);
    EXPECT_EQ(kd.leaf_count(), 300u);
  }
}

TEST(KdTree, InsertReportConservesVolume) {
  Rng rng(2);
  KdTree<2> kd(kUnit);
  kd.insert({0.5, 0.5}, 0.0);
  for (int i = 0; i < 200; ++i) {
    const auto rep = kd.insert({rng.uniform(), rng.uniform()}, 0.0);
    EXPECT_NEAR(rep.old_volume, rep.new_old_volume + rep.new_volume, 1e-15);
  }
}

TEST(KdTree, AggregatesEqualSumOverLeaves) {
  Rng rng(3);
  KdTree<2> kd(kUnit);
  for (int i = 0; i < 200; ++i) {
    kd.insert({rng.uniform(), rng.uniform()}, rng.uniform(-1, 1));
    kd.backprop(rng.uniform(-1, 1), {rng.uniform(), rng.uniform()});
  }
  for (KdHandle h = 0; h < kd.node_count(); ++h) {
    const auto& n = kd.node(h);
    if (n.is_leaf()) continue;
    const auto& l = kd.node(n.left);
    const auto& r = kd.node(n.right);
    EXPECT_EQ(n.visit_count, l.visit_count + r.visit_count);
    EXPECT_NEAR(n.value_sum, l.value_sum + r.value_sum, 1e-9);
  }
  EXPECT_EQ(kd.node(kd.root()).visit_count, 400u);
}

TEST(KdTree, ValueUsesHalfDepthAncestor) {
  KdTree<2> kd(kUnit);
  // Points approaching the origin give a chain of splits.
  double x = 0.9;
  for (int i = 0; i < 8; ++i, x *= 0.5) kd.insert({x, x}, static_cast<double>(i));
  KdHandle deep = kNoNode;
  kd.for_each_leaf([&](KdHandle h, const KdNode<2>& n) {
    if (n.depth == 5) deep = h;
  });
  ASSERT_NE(deep, kNoNode);
  KdHandle a = deep;
  while (kd.node(a).depth > 2) a = kd.node(a).parent;
  EXPECT_EQ(kd.node(a).depth, 2u);
  EXPECT_EQ(kd.half_depth_ancestor(deep), a);
  EXPECT_DOUBLE_EQ(kd.value_at(deep), kd.node(a).mean());
  EXPECT_DOUBLE_EQ(kd.value(kd.node(deep).point), kd.node(a).mean());
}

TEST(KdTree, HalfDepthRuleEveryLeaf) {
  Rng rng(4);
  const auto kd = random_tree(rng, 400);
  kd.for_each_leaf([&](KdHandle h, const KdNode<2>& n) {
    const auto a = kd.half_depth_ancestor(h);
    EXPECT_EQ(kd.node(a).depth, n.depth / 2);
    EXPECT_TRUE(kd.node(a).bounds.contains(n.point));
  });
}

TEST(KdTree, RefinementOnlyShrinksRegions) {
  Rng rng(5);
  KdTree<2> kd(kUnit);
  std::vector<Vec<2>> pts;
  std::vector<double> vol;
  for (int i = 0; i < 150; ++i) {
    pts.push_back({rng.uniform(), rng.uniform()});
    kd.insert(pts.back(), 0.0);
    vol.push_back(0.0);
    for (std::size_t k = 0; k < pts.size(); ++k) {
      const double v = kd.node(kd.locate(pts[k])).volume();
      if (k + 1 < pts.size()) EXPECT_LE(v, vol[k] + 1e-15);
      vol[k] = v;
    }
  }
}

TEST(KdTree, JsonHasLeafCountAndBounds) {
  Rng rng(6);
  const auto kd = random_tree(rng, 10);
  const auto j = kd.to_json();
  EXPECT_EQ(j["lo"][0], 0.0);
  EXPECT_EQ(j["visit_count"], 10);
  EXPECT_TRUE(j.contains("split_dim"));
}

TEST(Voronoi, TwoPointsSplitEvenly) {
  const auto v = voronoi_volumes_mc<2>({{0.25, 0.5}, {0.75, 0.5}}, kUnit, 200000, 9);
  EXPECT_NEAR(v[0], 0.5, 0.01);
  EXPECT_NEAR(v[1], 0.5, 0.01);
}

TEST(Voronoi, MatchesGridRasterization) {
  Rng rng(7);
  std::vector<Vec<2>> pts;
  for (int i = 0; i < 8; ++i) pts.push_back({rng.uniform(), rng.uniform()});
  const auto mc = voronoi_volumes_mc<2>(pts, kUnit, 400000, 11);
  // Oracle: nearest point of each cell centre of a 400 x 400 grid.
  const int g = 400;
  std::vector<double> grid(pts.size(), 0.0);
  for (int i = 0; i < g; ++i)
    for (int j = 0; j < g; ++j) {
      const Vec<2> c{(i + 0.5) / g, (j + 0.5) / g};
      std::size_t best = 0;
      for (std::size_t k = 1; k < pts.size(); ++k)
        if (squared_distance(c, pts[k]) < squared_distance(c, pts[best])) best = k;
      grid[best] += 1.0 / (g * g);
    }
  for (std::size_t k = 0; k < pts.size(); ++k) EXPECT_NEAR(mc[k], grid[k], 0.02);
}

TEST(Voronoi, EmptyInputs) {
  EXPECT_TRUE(voronoi_volumes_mc<2>({}, kUnit, 100, 0).empty());
  const auto v = voronoi_volumes_mc<2>({{0.5, 0.5}}, kUnit, 0, 0);
  EXPECT_EQ(v[0], 0.0);
}
