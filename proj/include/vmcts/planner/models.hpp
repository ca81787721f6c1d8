#pragma once

#include <cmath>
#include <vector>

#include "vmcts/common.hpp"
#include "vmcts/learn/train.hpp"

namespace vmcts::planner {

/**
 * Non-owning view of the value and policy networks used by a search.
 * Missing networks mean the untrained defaults: V = 0 and a uniform
 * policy over the action box. Network inputs are states rescaled from the
 * state box to [-1, 1].
 */
template <std::size_t D, std::size_t A>
struct Models {
  const learn::Mlp* value = nullptr;
  const learn::GaussianPolicy* policy = nullptr;
  Box<D> box{};

  bool trained() const { return value != nullptr || policy != nullptr; }

  std::vector<double> features(const Vec<D>& s) const { return normalize_state(s, box); }

  double value_of(const Vec<D>& s) const {
    if (!value) return 0.0;
    const auto f = features(s);
    return value->forward(f)(0);
  }

  Vec<A> sample_action(const Vec<D>& s, Rng& rng) const {
    Vec<A> a{};
    if (!policy) {
      for (auto& x : a) x = rng.uniform(-1.0, 1.0);
      return a;
    }
    const auto f = features(s);
    const auto v = policy->sample(f, rng);
    for (std::size_t d = 0; d < A; ++d) a[d] = v[d];
    return a;
  }

  /// Prior density of `a`; the uniform default is 2^-A.
  double density(const Vec<D>& s, const Vec<A>& a) const {
    if (!policy) return std::pow(0.5, static_cast<double>(A));
    const auto f = features(s);
    return std::exp(policy->log_density(f, std::vector<double>(a.begin(), a.end())));
  }

  static std::vector<double> normalize_state(const Vec<D>& s, const Box<D>& box) {
    std::vector<double> f(D);
    for (std::size_t d = 0; d < D; ++d) {
      const double side = box.side(d);
      f[d] = side > 0.0 ? 2.0 * (s[d] - box.lo[d]) / side - 1.0 : 0.0;
    }
    return f;
  }
};

}  // namespace vmcts::planner
