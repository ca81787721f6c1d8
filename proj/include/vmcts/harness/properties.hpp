/**
 * Property suite: the invariants of the spatial index, the occupancy
 * solver, the planners and the environments, run on seeded random inputs
 * and reported as JSON. A failing property carries a counterexample.
 *
 * Report schema ("vmcts-properties/1"):
 *   { "schema": string, "seed": integer, "passed": bool,
 *     "properties": [ { "name": string, "passed": bool, "detail": string,
 *                       "counterexample": object or null } ] }
 */

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include <json.hpp>

#include "vmcts/env/environment.hpp"
#include "vmcts/occupancy/reference.hpp"
#include "vmcts/planner/run.hpp"
#include "vmcts/spatial/kd_tree.hpp"

namespace vmcts::harness {

inline constexpr const char* kPropertySchema = "vmcts-properties/1";

struct PropertyOptions {
  std::uint64_t seed = 0;
  /// Mutation fixture: break the subtree-volume bookkeeping of the planner.
  bool inject_volume_bug = false;
  int random_instances = 2000;
};

struct PropertyResult {
  std::string name;
  bool passed = true;
  std::string detail;
  nlohmann::json counterexample;  // null when passed
};

struct PropertyReport {
  std::uint64_t seed = 0;
  std::vector<PropertyResult> results;

  bool passed() const {
    return std::all_of(results.begin(), results.end(), [](const auto& r) { return r.passed; });
  }
  nlohmann::json to_json() const {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& r : results)
      arr.push_back({{"name", r.name}, {"passed", r.passed}, {"detail", r.detail}, {"counterexample", r.counterexample}});
    return {{"schema", kPropertySchema}, {"seed", seed}, {"passed", passed()}, {"properties", arr}};
  }
};

/// Checks the report layout; returns an empty string when valid.
inline std::string validate_property_report(const nlohmann::json& j) {
  if (!j.is_object()) return "report is not an object";
  if (!j.contains("schema") || j["schema"] != kPropertySchema) return "missing or wrong schema tag";
  if (!j.contains("seed") || !j["seed"].is_number_integer()) return "seed must be an integer";
  if (!j.contains("passed") || !j["passed"].is_boolean()) return "passed must be a boolean";
  if (!j.contains("properties") || !j["properties"].is_array()) return "properties must be an array";
  for (const auto& p : j["properties"]) {
    if (!p.is_object()) return "property entry is not an object";
    if (!p.contains("name") || !p["name"].is_string()) return "property name must be a string";
    if (!p.contains("passed") || !p["passed"].is_boolean()) return "property passed must be a boolean";
    if (!p.contains("detail") || !p["detail"].is_string()) return "property detail must be a string";
    if (!p.contains("counterexample") || !(p["counterexample"].is_null() || p["counterexample"].is_object()))
      return "counterexample must be null or an object";
  }
  return {};
}

namespace props {

inline std::string sci(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2e", x);
  return buf;
}

using Check = std::function<PropertyResult(const PropertyOptions&)>;

inline PropertyResult fail(std::string name, std::string detail, nlohmann::json cex) {
  return {std::move(name), false, std::move(detail), std::move(cex)};
}
inline PropertyResult pass(std::string name, std::string detail) { return {std::move(name), true, std::move(detail), nullptr}; }

inline Vec<2> random_point(Rng& rng) { return {rng.uniform(), rng.uniform()}; }

inline PropertyResult kd_partition(const PropertyOptions& o) {
  Rng rng(mix_seed(o.seed, 1));
  spatial::KdTree<2> kd(Box<2>{{0, 0}, {1, 1}});
  for (int i = 0; i < 1000; ++i) {
    const auto p = random_point(rng);
    kd.insert(p, 0.0, static_cast<std::uint64_t>(i));
    if (kd.locate(p) == spatial::kNoNode || kd.node(kd.locate(p)).point != p)
      return fail("kd.partition_conservation", "inserted point not owned by its leaf", {{"insert", i}, {"point", p}});
  }
  double total = 0.0;
  kd.for_each_leaf([&](auto, const auto& n) { total += n.volume(); });
  if (std::abs(total - 1.0) > 1e-9)
    return fail("kd.partition_conservation", "leaf volumes do not sum to the box", {{"sum", total}});
  return pass("kd.partition_conservation", "1000 inserts, leaf volume sum within 1e-9, every point owned by its leaf");
}

inline PropertyResult kd_aggregates(const PropertyOptions& o) {
  Rng rng(mix_seed(o.seed, 2));
  spatial::KdTree<2> kd(Box<2>{{0, 0}, {1, 1}});
  std::vector<Vec<2>> pts;
  for (int i = 0; i < 500; ++i) {
    if (pts.empty() || rng.bernoulli(0.4)) {
      pts.push_back(random_point(rng));
      kd.insert(pts.back(), rng.uniform(-1, 1));
    } else {
      kd.backprop(rng.uniform(-5, 5), pts[rng.index(pts.size())]);
    }
  }
  for (spatial::KdHandle h = 0; h < kd.node_count(); ++h) {
    const auto& n = kd.node(h);
    if (n.is_leaf()) continue;
    const auto& l = kd.node(n.left);
    const auto& r = kd.node(n.right);
    if (std::abs(n.value_sum - l.value_sum - r.value_sum) > 1e-9 * (1 + std::abs(n.value_sum)) ||
        n.visit_count != l.visit_count + r.visit_count)
      return fail("kd.aggregate_consistency", "interior statistics differ from the sum of its children",
                  {{"node", h}, {"value_sum", n.value_sum}, {"children_sum", l.value_sum + r.value_sum}});
  }
  return pass("kd.aggregate_consistency", "500 interleaved inserts and backprops");
}

inline PropertyResult kd_half_depth(const PropertyOptions& o) {
  Rng rng(mix_seed(o.seed, 3));
  spatial::KdTree<2> kd(Box<2>{{0, 0}, {1, 1}});
  for (int i = 0; i < 400; ++i) kd.insert(random_point(rng), rng.uniform());
  bool ok = true;
  nlohmann::json cex;
  kd.for_each_leaf([&](spatial::KdHandle h, const auto& n) {
    const auto a = kd.half_depth_ancestor(h);
    if (ok && kd.node(a).depth != n.depth / 2) {
      ok = false;
      cex = {{"leaf", h}, {"leaf_depth", n.depth}, {"ancestor_depth", kd.node(a).depth}};
    }
  });
  if (!ok) return fail("kd.half_depth_rule", "ancestor depth differs from floor(depth / 2)", cex);
  return pass("kd.half_depth_rule", "every leaf of a 400-point tree");
}

inline PropertyResult kd_monotone_refinement(const PropertyOptions& o) {
  Rng rng(mix_seed(o.seed, 4));
  spatial::KdTree<2> kd(Box<2>{{0, 0}, {1, 1}});
  for (int i = 0; i < 300; ++i) {
    std::vector<std::pair<spatial::KdHandle, double>> before;
    kd.for_each_leaf([&](auto h, const auto& n) { before.emplace_back(h, n.volume()); });
    const auto rep = kd.insert(random_point(rng), 0.0);
    for (const auto& [h, v] : before) {
      if (h == rep.old_leaf) continue;
      if (kd.node(h).volume() != v)
        return fail("kd.monotone_refinement", "an insert changed a leaf it did not split", {{"insert", i}, {"leaf", h}});
    }
  }
  return pass("kd.monotone_refinement", "300 inserts");
}

inline PropertyResult alpha_solver(const PropertyOptions& o) {
  Rng rng(mix_seed(o.seed, 5));
  double worst = 0.0;
  for (int k = 0; k < o.random_instances; ++k) {
    const int m = 1 + static_cast<int>(rng.index(12));
    std::vector<occupancy::MoveScore> s;
    for (int i = 0; i < m; ++i) s.push_back({rng.uniform(-10, 10), rng.uniform(1e-4, 1.0), rng.uniform(0.01, 1.0)});
    const double lambda = std::pow(10.0, rng.uniform(-4, 1));
    const auto r = occupancy::solve_alpha(s, lambda);
    double wq_max = -INFINITY, wq_min = INFINITY, vsum = 0.0, g = 0.0;
    for (const auto& x : s) {
      wq_max = std::max(wq_max, x.weighted());
      wq_min = std::min(wq_min, x.weighted());
      vsum += x.volume;
    }
    for (const auto& x : s) g += lambda * x.volume / (r.gap + (wq_max - x.weighted()));
    const double slack = 1e-9 * (1.0 + std::abs(wq_max));
    const bool in_bracket = r.alpha >= wq_min + lambda * vsum - slack && r.alpha <= wq_max + lambda * vsum + slack &&
                            r.alpha > wq_max;
    worst = std::max(worst, std::abs(g - 1.0));
    if (!in_bracket || std::abs(g - 1.0) > 1e-10)
      return fail("occupancy.alpha_solver", "alpha outside its bracket or residual above 1e-10",
                  {{"instance", k}, {"alpha", r.alpha}, {"residual", std::abs(g - 1.0)}, {"lambda", lambda}});
  }
  return pass("occupancy.alpha_solver", std::to_string(o.random_instances) + " instances, worst residual " +
                                            sci(worst));
}

inline PropertyResult shift_covariance(const PropertyOptions& o) {
  Rng rng(mix_seed(o.seed, 6));
  for (int k = 0; k < 200; ++k) {
    const int m = 2 + static_cast<int>(rng.index(8));
    std::vector<occupancy::MoveScore> s, t;
    const double shift = rng.uniform(-50, 50);
    for (int i = 0; i < m; ++i) {
      s.push_back({rng.uniform(-5, 5), rng.uniform(0.01, 1), 1.0});
      t.push_back({s.back().q + shift, s.back().volume, 1.0});
    }
    const double lambda = rng.uniform(0.01, 2);
    const auto a = occupancy::solve_alpha(s, lambda), b = occupancy::solve_alpha(t, lambda);
    const auto pa = occupancy::tree_policy(s, lambda), pb = occupancy::tree_policy(t, lambda);
    if (std::abs(b.alpha - a.alpha - shift) > 1e-10 * (1 + std::abs(b.alpha)) ||
        occupancy::reference::total_variation(pa.probs, pb.probs) > 1e-10)
      return fail("occupancy.shift_covariance", "shifting every value moved the distribution",
                  {{"instance", k}, {"shift", shift}, {"alpha_delta", b.alpha - a.alpha}});
  }
  return pass("occupancy.shift_covariance", "200 instances");
}

inline PropertyResult greediness(const PropertyOptions& o) {
  Rng rng(mix_seed(o.seed, 7));
  for (int k = 0; k < 200; ++k) {
    const int m = 2 + static_cast<int>(rng.index(8));
    std::vector<occupancy::MoveScore> s;
    for (int i = 0; i < m; ++i) s.push_back({static_cast<double>(i) + rng.uniform(0, 0.5), rng.uniform(0.01, 1), 1.0});
    const auto p = occupancy::tree_policy(s, 1e-6);
    if (p.probs.back() < 0.99)
      return fail("occupancy.greediness_limit", "argmax move below 0.99 at lambda = 1e-6",
                  {{"instance", k}, {"p_argmax", p.probs.back()}});
  }
  return pass("occupancy.greediness_limit", "200 instances at lambda = 1e-6");
}

inline PropertyResult rrt_limit(const PropertyOptions& o) {
  Rng rng(mix_seed(o.seed, 8));
  for (int k = 0; k < 200; ++k) {
    const int m = 1 + static_cast<int>(rng.index(30));
    std::vector<occupancy::NodeTerm> nodes;
    double vsum = 0.0;
    for (int i = 0; i < m; ++i) {
      nodes.push_back({0.0, rng.uniform(0.01, 1)});
      vsum += nodes.back().volume;
    }
    const auto d = occupancy::direct_occupancy(nodes, rng.uniform(0.01, 10));
    for (int i = 0; i < m; ++i)
      if (std::abs(d[i] - nodes[i].volume / vsum) > 1e-12)
        return fail("occupancy.rrt_limit", "zero values did not give volume proportions",
                    {{"instance", k}, {"node", i}, {"p", d[i]}, {"expected", nodes[i].volume / vsum}});
  }
  return pass("occupancy.rrt_limit", "200 instances");
}

inline PropertyResult path_product(const PropertyOptions& o) {
  Rng rng(mix_seed(o.seed, 9));
  double worst_tv = 0.0, worst_reach = 0.0, worst_pg = 0.0;
  for (int k = 0; k < 100; ++k) {
    const auto t = occupancy::reference::random_tree(rng, 50);
    const auto d = occupancy::reference::direct(t);
    const auto c = occupancy::reference::compose_tree_policy(t);
    std::vector<double> sub(d);
    for (std::size_t i = t.size(); i-- > 1;) sub[t.parent[i]] += sub[i];
    const double tv = occupancy::reference::total_variation(d, c.occupancy);
    double reach = 0.0;
    for (std::size_t i = 0; i < t.size(); ++i) reach = std::max(reach, std::abs(sub[i] - c.reach[i]));
    const auto pg = occupancy::reference::projected_gradient_occupancy(t.value, t.volume, t.lambda);
    const double tv_pg = occupancy::reference::total_variation(d, pg);
    worst_tv = std::max(worst_tv, tv);
    worst_reach = std::max(worst_reach, reach);
    worst_pg = std::max(worst_pg, tv_pg);
    if (tv > 1e-8 || reach > 1e-10 || tv_pg > 1e-6)
      return fail("occupancy.path_product", "composed tree policy, reach identity or convex solver disagree",
                  {{"instance", k}, {"nodes", t.size()}, {"tv_composed", tv}, {"reach_error", reach}, {"tv_solver", tv_pg}});
  }
  return pass("occupancy.path_product", "100 trees; worst tv " + sci(worst_tv) + ", reach error " +
                                            sci(worst_reach) + ", solver tv " + sci(worst_pg));
}

inline PropertyResult volume_conservation(const PropertyOptions& o) {
  const env::GeometricMaze e(env::generate_maze(3, o.seed));
  planner::PlannerConfig cfg;
  cfg.seed = o.seed;
  cfg.rollouts = 0;
  cfg.inject_volume_bug = o.inject_volume_bug;
  planner::VolumeSearch<env::GeometricMaze> s(e, cfg);
  for (int i = 0; i < 300; ++i) {
    s.iterate();
    if (auto f = planner::audit_volumes(s.tree(), s.total_volume()))
      return fail("planner.volume_conservation", "subtree volume differs from the sum of own volumes below it",
                  {{"iteration", i + 1}, {"node", f->node}, {"path", f->path}, {"expected", f->expected},
                   {"actual", f->actual}});
  }
  return pass("planner.volume_conservation", "audited after each of 300 iterations");
}

inline PropertyResult visit_accounting(const PropertyOptions& o) {
  const env::GeometricMaze e(env::generate_maze(3, o.seed));
  planner::PlannerConfig cfg;
  cfg.seed = o.seed;
  cfg.rollouts = 2000;
  planner::VolumeSearch<env::GeometricMaze> s(e, cfg);
  s.run();
  const auto& t = s.tree();
  for (planner::NodeId i = 0; i < t.size(); ++i) {
    if (t.terminal(i)) continue;
    std::uint64_t sum = t[i].expansions;
    for (auto c : t[i].children) sum += t[c].visit_count;
    if (sum != t[i].visit_count)
      return fail("planner.visit_accounting", "visits differ from child visits plus own expansions",
                  {{"node", i}, {"path", t.describe_path(i)}, {"visits", t[i].visit_count}, {"sum", sum}});
  }
  return pass("planner.visit_accounting", "every non-terminal node after 2000 iterations");
}

inline PropertyResult determinism(const PropertyOptions& o) {
  const env::GeometricMaze e(env::generate_maze(3, o.seed));
  for (auto alg : {planner::Algorithm::VolumeMcts, planner::Algorithm::AlphaZero, planner::Algorithm::AlphaZeroCbe,
                   planner::Algorithm::AlphaZeroOpenLoop, planner::Algorithm::VolumeRrtAblation}) {
    planner::PlannerConfig cfg;
    cfg.algorithm = alg;
    cfg.seed = o.seed;
    cfg.rollouts = 1000;
    const auto a = planner::run_planner(e, cfg, {}, 3, false, true);
    const auto b = planner::run_planner(e, cfg, {}, 3, false, true);
    if (a.record.ret != b.record.ret || a.record.expansions_to_goal != b.record.expansions_to_goal || a.tree != b.tree)
      return fail("planner.seed_determinism", "two identical runs differ", {{"algorithm", planner::to_string(alg)}});
  }
  return pass("planner.seed_determinism", "all five algorithms, 1000 rollouts");
}

inline PropertyResult openloop_replay(const PropertyOptions& o) {
  const env::GeometricMaze e(env::generate_maze(3, o.seed));
  planner::PlannerConfig cfg;
  cfg.seed = o.seed;
  cfg.rollouts = 1500;
  planner::VolumeSearch<env::GeometricMaze> s(e, cfg);
  s.run();
  const auto out = planner::execute_plan(e, s.plan(), cfg.horizon);
  if (out.ret != s.tree()[0].max_earned)
    return fail("planner.openloop_replay", "replaying the plan does not earn the tree's best return",
                {{"replayed", out.ret}, {"recorded", s.tree()[0].max_earned}});
  return pass("planner.openloop_replay", "replayed return equals recorded best");
}

inline PropertyResult wall_containment(const PropertyOptions& o) {
  Rng rng(mix_seed(o.seed, 10));
  for (int k = 0; k < 20; ++k) {
    const auto spec = env::generate_maze(2 + static_cast<int>(rng.index(5)), rng.next_u64());
    const env::GeometricMaze e(spec);
    const auto walls = env::wall_segments(spec);
    const double side = spec.size_n * spec.tile_side;
    for (int i = 0; i < 500; ++i) {
      const Vec<2> s{rng.uniform(0, side), rng.uniform(0, side)};
      const Vec<2> a{rng.uniform(-1, 1), rng.uniform(-1, 1)};
      const auto out = e.step(s, a);
      if (out.next_state == s) continue;
      for (const auto& w : walls)
        if (env::segments_intersect({s, out.next_state}, w))
          return fail("env.wall_containment", "a step crossed a wall",
                      {{"maze", env::to_json(spec)}, {"state", s}, {"action", a}});
    }
  }
  return pass("env.wall_containment", "10000 random steps over 20 mazes");
}

inline PropertyResult maze_connectivity(const PropertyOptions& o) {
  Rng rng(mix_seed(o.seed, 11));
  for (int k = 0; k < 100; ++k) {
    const int n = 2 + static_cast<int>(rng.index(9));
    const auto seed = rng.next_u64();
    const auto spec = env::generate_maze(n, seed);
    const auto dist = env::reachable_tiles(spec, 0);
    if (std::any_of(dist.begin(), dist.end(), [](int d) { return d < 0; }))
      return fail("env.maze_connectivity", "a tile is unreachable from the start", {{"size", n}, {"seed", seed}});
  }
  return pass("env.maze_connectivity", "100 random mazes");
}

inline std::vector<Check> all() {
  return {kd_partition,  kd_aggregates,       kd_half_depth,    kd_monotone_refinement, alpha_solver,
          shift_covariance, greediness,       rrt_limit,        path_product,           volume_conservation,
          visit_accounting, determinism,      openloop_replay,  wall_containment,       maze_connectivity};
}

}  // namespace props

inline PropertyReport run_property_suite(const PropertyOptions& options) {
  PropertyReport rep;
  rep.seed = options.seed;
  const auto checks = props::all();
  for (std::size_t k = 0; k < checks.size(); ++k) {
    try {
      rep.results.push_back(checks[k](options));
    } catch (const std::exception& e) {
      rep.results.push_back(props::fail("check_" + std::to_string(k), std::string("threw: ") + e.what(),
                                        nlohmann::json::object()));
    }
  }
  return rep;
}

}  // namespace vmcts::harness
