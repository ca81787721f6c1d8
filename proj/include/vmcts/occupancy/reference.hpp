/**
 * Reference computations used to cross-check the closed forms: random
 * trees, composition of per-node tree policies along paths, and a
 * projected-gradient solver of the regularized objective
 *
 *     maximize  sum_n d(n) V(n) + lambda * sum_n Vol(n) log d(n)
 *     over the probability simplex,
 *
 * whose stationarity condition is the closed form in occupancy.hpp.
 */

#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "vmcts/occupancy/occupancy.hpp"

namespace vmcts::occupancy::reference {

struct RandomTree {
  std::vector<int> parent;  // parent[0] = -1; parent[i] < i
  std::vector<std::vector<int>> children;
  std::vector<double> value;
  std::vector<double> volume;
  double lambda = 1.0;

  std::size_t size() const { return parent.size(); }
};

inline RandomTree random_tree(Rng& rng, int max_nodes = 50) {
  RandomTree t;
  const int n = 1 + static_cast<int>(rng.index(static_cast<std::size_t>(max_nodes)));
  t.parent.assign(static_cast<std::size_t>(n), -1);
  t.children.resize(static_cast<std::size_t>(n));
  for (int i = 1; i < n; ++i) {
    t.parent[i] = static_cast<int>(rng.index(static_cast<std::size_t>(i)));
    t.children[t.parent[i]].push_back(i);
  }
  for (int i = 0; i < n; ++i) {
    t.value.push_back(rng.uniform(-2.0, 5.0));
    t.volume.push_back(rng.uniform(0.01, 1.0));
  }
  t.lambda = rng.uniform(0.05, 3.0);
  return t;
}

inline double total_variation(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += std::abs(a[i] - b[i]);
  return 0.5 * s;
}

inline std::vector<double> direct(const RandomTree& t) {
  std::vector<NodeTerm> nodes;
  for (std::size_t i = 0; i < t.size(); ++i) nodes.push_back({t.value[i], t.volume[i]});
  return direct_occupancy(nodes, t.lambda);
}

struct Composition {
  std::vector<double> occupancy;  // pi(stay | n) * reach(n)
  std::vector<double> reach;      // product of move probabilities from the root
};

/**
 * Descends the tree solving one local tree policy per node. STAY scores the
 * node's own value and volume; a child move scores the subtree's soft value
 * alpha - lambda * SubtreeVol / D(subtree), where D sums the direct
 * occupancy over the subtree. Each local solve runs with weight reach(n).
 */
inline Composition compose_tree_policy(const RandomTree& t) {
  const std::size_t n = t.size();
  std::vector<MoveScore> all;
  for (std::size_t i = 0; i < n; ++i) all.push_back({t.value[i], t.volume[i], 1.0});
  const double alpha = solve_alpha(all, t.lambda).alpha;
  const auto d = direct(t);

  std::vector<double> sub_d(d), sub_vol(t.volume);
  for (std::size_t i = n; i-- > 1;) {
    sub_d[t.parent[i]] += sub_d[i];
    sub_vol[t.parent[i]] += sub_vol[i];
  }

  Composition c;
  c.occupancy.assign(n, 0.0);
  c.reach.assign(n, 0.0);
  c.reach[0] = 1.0;
  for (std::size_t i = 0; i < n; ++i) {  // parents precede children
    std::vector<MoveScore> scores{{t.value[i], t.volume[i], c.reach[i]}};
    for (int ch : t.children[i])
      scores.push_back({alpha - t.lambda * sub_vol[ch] / sub_d[ch], sub_vol[ch], c.reach[i]});
    const auto pol = tree_policy(scores, t.lambda);
    c.occupancy[i] = c.reach[i] * pol.probs[0];
    for (std::size_t k = 0; k < t.children[i].size(); ++k) c.reach[t.children[i][k]] = c.reach[i] * pol.probs[k + 1];
  }
  return c;
}

/**
 * Projection onto {x : sum x = 1, x >= floor} in the metric sum_i h_i x_i^2:
 * x_i = max(z_i - tau / h_i, floor) with tau found by bisection.
 */
inline std::vector<double> project_to_simplex_scaled(const std::vector<double>& z, const std::vector<double>& h,
                                                     double floor) {
  const std::size_t n = z.size();
  auto mass = [&](double tau) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += std::max(z[i] - tau / h[i], floor);
    return s;
  };
  double lo = -1.0, hi = 1.0;
  while (mass(lo) < 1.0) lo *= 2.0;
  while (mass(hi) > 1.0) hi *= 2.0;
  for (int it = 0; it < 200 && hi - lo > 0.0; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid == lo || mid == hi) break;
    (mass(mid) > 1.0 ? lo : hi) = mid;
  }
  const double tau = 0.5 * (lo + hi);
  std::vector<double> x(n);
  for (std::size_t i = 0; i < n; ++i) x[i] = std::max(z[i] - tau / h[i], floor);
  const double s = std::accumulate(x.begin(), x.end(), 0.0);
  for (double& v : x) v /= s;
  return x;
}

/**
 * Projected gradient ascent preconditioned by the diagonal of the negative
 * Hessian, lambda * Vol / d^2 (a projected Newton method). Steps are halved
 * until the iterate stays positive and the objective does not drop; the
 * loop stops once the gradient is constant across coordinates to relative
 * `tol`, the optimality condition at an interior point.
 */
inline std::vector<double> projected_gradient_occupancy(const std::vector<double>& value,
                                                        const std::vector<double>& volume, double lambda,
                                                        int max_iterations = 10000, double tol = 1e-12) {
  const std::size_t n = value.size();
  auto objective = [&](const std::vector<double>& d) {
    double f = 0.0;
    for (std::size_t i = 0; i < n; ++i) f += d[i] * value[i] + lambda * volume[i] * std::log(d[i]);
    return f;
  };
  const double vsum = std::accumulate(volume.begin(), volume.end(), 0.0);
  std::vector<double> d(n), g(n), h(n), z(n);
  for (std::size_t i = 0; i < n; ++i) d[i] = volume[i] / vsum;
  double f = objective(d);
  for (int it = 0; it < max_iterations; ++it) {
    for (std::size_t i = 0; i < n; ++i) {
      g[i] = value[i] + lambda * volume[i] / d[i];
      h[i] = lambda * volume[i] / (d[i] * d[i]);
    }
    const auto [gmin, gmax] = std::minmax_element(g.begin(), g.end());
    if (*gmax - *gmin <= tol * std::max(1.0, std::abs(*gmax))) break;
    bool moved = false;
    for (double step = 1.0; step > 1e-12; step *= 0.5) {
      for (std::size_t i = 0; i < n; ++i) z[i] = d[i] + step * g[i] / h[i];
      auto trial = project_to_simplex_scaled(z, h, 1e-300);
      const double ft = objective(trial);
      if (ft >= f - 1e-15 * std::abs(f)) {
        d = std::move(trial);
        f = ft;
        moved = true;
        break;
      }
    }
    if (!moved) break;
  }
  return d;
}

}  // namespace vmcts::occupancy::reference
