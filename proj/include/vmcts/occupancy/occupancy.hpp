/**
 * Closed-form solutions of the occupancy-regularized return objective.
 *
 * For moves m with value q_m, weight w_m and associated volume v_m the
 * optimal distribution is
 *
 *     p(m) = lambda * v_m / (alpha - w_m * q_m),
 *
 * where alpha is the unique normalizer with alpha > max_m w_m q_m. The solver
 * works in the gap t = alpha - max_m w_m q_m so that tiny lambda does not
 * lose precision against large values.
 */

#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <stdexcept>
#include <vector>

#include "vmcts/common.hpp"

namespace vmcts::occupancy {

struct RegularizationSchedule {
  double c = 20.0;
  double gamma = 0.95;

  double lambda_of(std::uint64_t n) const { return c / std::sqrt(static_cast<double>(std::max<std::uint64_t>(n, 1))); }

  /// Exploration coefficient that makes c * (1 - gamma) = 1.
  static RegularizationSchedule canonical(double gamma) { return {1.0 / (1.0 - gamma), gamma}; }
};

struct MoveScore {
  double q = 0.0;
  double volume = 0.0;
  double weight = 1.0;

  double weighted() const { return weight * q; }
};

struct NormalizationResult {
  double alpha = 0.0;
  double gap = 0.0;  // alpha - max_m w_m q_m, > 0
  double residual = 0.0;
  int iterations = 0;
};

inline constexpr double kAlphaTolerance = 1e-10;

namespace detail {

inline void validate(std::span<const MoveScore> scores, double lambda) {
  if (scores.empty()) throw std::invalid_argument("solve_alpha: no moves");
  if (!(lambda > 0.0) || !std::isfinite(lambda)) throw std::invalid_argument("solve_alpha: lambda must be > 0");
  for (const auto& s : scores) {
    if (!std::isfinite(s.q) || !std::isfinite(s.weight)) throw std::invalid_argument("solve_alpha: non-finite value");
    if (!(s.volume > 0.0) || !std::isfinite(s.volume)) throw std::invalid_argument("solve_alpha: volume must be > 0");
  }
}

}  // namespace detail

/**
 * Bisection-safeguarded Newton on g(t) = sum lambda v_m / (t + d_m) = 1 with
 * d_m = max(wq) - w_m q_m. g is convex and strictly decreasing, and the root
 * is bracketed by
 *   lower: max(min(wq) + lambda*sum(v), max_m(w_m q_m + lambda v_m))
 *   upper: max(wq) + lambda*sum(v).
 */
inline NormalizationResult solve_alpha(std::span<const MoveScore> scores, double lambda) {
  detail::validate(scores, lambda);

  double wq_max = -std::numeric_limits<double>::infinity();
  double wq_min = std::numeric_limits<double>::infinity();
  double vol_sum = 0.0;
  for (const auto& s : scores) {
    wq_max = std::max(wq_max, s.weighted());
    wq_min = std::min(wq_min, s.weighted());
    vol_sum += s.volume;
  }
  const double lv_sum = lambda * vol_sum;

  auto g = [&](double t, double* dg) {
    double sum = 0.0, der = 0.0;
    for (const auto& s : scores) {
      const double den = t + (wq_max - s.weighted());
      const double term = lambda * s.volume / den;
      sum += term;
      der -= term / den;
    }
    if (dg) *dg = der;
    return sum;
  };

  double lo = lv_sum - (wq_max - wq_min);
  for (const auto& s : scores) lo = std::max(lo, lambda * s.volume - (wq_max - s.weighted()));
  double hi = lv_sum;

  NormalizationResult res;
  for (int widen = 0; widen < 4; ++widen) {
    double a = lo, b = hi;
    double t = a;
    int it = 0;
    double phi = 0.0;
    bool done = false;
    while (it < 200) {
      ++it;
      double dg = 0.0;
      phi = g(t, &dg) - 1.0;
      if (std::abs(phi) <= 0.05 * kAlphaTolerance) {
        done = true;
        break;
      }
      if (phi > 0.0)
        a = t;
      else
        b = t;
      double next = t - phi / dg;
      if (!(next > a && next < b) || !std::isfinite(next)) next = 0.5 * (a + b);
      if (next == t || b - a <= 4 * std::numeric_limits<double>::epsilon() * b) {
        t = next;
        phi = g(t, nullptr) - 1.0;
        done = std::abs(phi) <= kAlphaTolerance;
        break;
      }
      t = next;
    }
    res.iterations += it;
    if (done) {
      res.gap = t;
      res.alpha = wq_max + t;
      res.residual = std::abs(phi);
      return res;
    }
    lo = 0.5 * lo;
    hi = 2.0 * hi;
  }
  throw SolverFailure("solve_alpha: no convergence within 200 iterations");
}

/// Probabilities for a solved instance, renormalized to remove the residual.
inline void move_probabilities(std::span<const MoveScore> scores, double lambda, const NormalizationResult& r,
                               std::vector<double>& out) {
  double wq_max = -std::numeric_limits<double>::infinity();
  for (const auto& s : scores) wq_max = std::max(wq_max, s.weighted());
  out.resize(scores.size());
  double total = 0.0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    out[i] = lambda * scores[i].volume / (r.gap + (wq_max - scores[i].weighted()));
    total += out[i];
  }
  for (double& p : out) p /= total;
}

struct TreeMoveDistribution {
  std::vector<double> probs;

  /// Inverse-CDF sampling in move-index order.
  std::size_t sample_at(double u) const {
    double acc = 0.0;
    for (std::size_t i = 0; i < probs.size(); ++i) {
      acc += probs[i];
      if (u < acc) return i;
    }
    return probs.size() - 1;
  }
  std::size_t sample(Rng& rng) const { return sample_at(rng.uniform()); }
  double total() const {
    double s = 0.0;
    for (double p : probs) s += p;
    return s;
  }
};

/// Per-node optimal tree policy over moves (children and STAY).
inline TreeMoveDistribution tree_policy(std::span<const MoveScore> scores, double lambda) {
  const auto r = solve_alpha(scores, lambda);
  TreeMoveDistribution d;
  move_probabilities(scores, lambda, r, d.probs);
  return d;
}

/**
 * Variant for action-dependent rewards: each move's volume is offset by
 * w / (1 + n_children), where w is the node's discounted reach weight.
 */
inline TreeMoveDistribution tree_policy_action_reward_variant(std::span<const MoveScore> scores, double lambda,
                                                              int n_children) {
  std::vector<MoveScore> shifted(scores.begin(), scores.end());
  for (auto& s : shifted) s.volume += s.weight / (1.0 + n_children);
  return tree_policy(shifted, lambda);
}

struct NodeTerm {
  double value = 0.0;   // return-to-go of the node's trajectory
  double volume = 0.0;  // associated volume
};

/// Direct optimal expansion distribution over all nodes of a tree.
inline std::vector<double> direct_occupancy(std::span<const NodeTerm> nodes, double lambda) {
  std::vector<MoveScore> scores;
  scores.reserve(nodes.size());
  for (const auto& n : nodes) scores.push_back({n.value, n.volume, 1.0});
  const auto r = solve_alpha(scores, lambda);
  std::vector<double> out;
  move_probabilities(scores, lambda, r, out);
  return out;
}

// ---------------------------------------------------------------------------
// Count-based exploration

struct CbeConfig {
  double bandwidth = 0.5;
  double coefficient = 20.0;
};

template <std::size_t D>
double rbf_kernel(const Vec<D>& x, const Vec<D>& y, double h) {
  return std::exp(-squared_distance(x, y) / (2.0 * h * h));
}

/// sqrt(1 / sum_i k(s_i, s)) over the tree states.
template <std::size_t D>
double cbe_reward(std::span<const Vec<D>> tree_states, const Vec<D>& s, const CbeConfig& cfg) {
  double sum = 0.0;
  for (const auto& x : tree_states) sum += rbf_kernel(x, s, cfg.bandwidth);
  return std::sqrt(1.0 / sum);
}

// ---------------------------------------------------------------------------

/// AlphaZero selection score; an unvisited action scores +infinity.
inline double puct_score(double q, double prior, std::uint64_t n_parent, std::uint64_t n_action, double c) {
  if (n_action == 0) return std::numeric_limits<double>::infinity();
  return q + c * prior * std::sqrt(static_cast<double>(n_parent)) / static_cast<double>(n_action);
}

}  // namespace vmcts::occupancy
