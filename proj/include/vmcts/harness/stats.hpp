#pragma once

#include <cmath>
#include <span>
#include <stdexcept>
#include <vector>

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/students_t.hpp>

namespace vmcts::harness {

inline double mean(std::span<const double> xs) {
  if (xs.empty()) return 0.0;
  double s = 0.0;
  for (double x : xs) s += x;
  return s / static_cast<double>(xs.size());
}

/// Sample standard deviation (n - 1 denominator); 0 for fewer than two values.
inline double sample_stddev(std::span<const double> xs) {
  if (xs.size() < 2) return 0.0;
  const double m = mean(xs);
  double s = 0.0;
  for (double x : xs) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(xs.size() - 1));
}

inline double standard_error(std::span<const double> xs) {
  if (xs.empty()) return 0.0;
  return sample_stddev(xs) / std::sqrt(static_cast<double>(xs.size()));
}

/// Upper-tail probability of Pearson's statistic for observed vs expected counts.
inline double chi_square_p(std::span<const double> observed, std::span<const double> expected) {
  if (observed.size() != expected.size() || observed.size() < 2)
    throw std::invalid_argument("chi_square_p: need matching sizes >= 2");
  double stat = 0.0;
  for (std::size_t i = 0; i < observed.size(); ++i) {
    if (!(expected[i] > 0.0)) throw std::invalid_argument("chi_square_p: expected counts must be > 0");
    stat += (observed[i] - expected[i]) * (observed[i] - expected[i]) / expected[i];
  }
  const boost::math::chi_squared dist(static_cast<double>(observed.size() - 1));
  return boost::math::cdf(boost::math::complement(dist, stat));
}

struct TTest {
  double t = 0.0;
  double df = 0.0;
  double p = 1.0;  // one-sided: H1 says the first sample has the larger mean
};

namespace detail {
inline TTest upper_tail(double diff, double se, double df) {
  TTest r;
  r.df = df;
  if (se == 0.0) {
    // Zero spread: the difference is either certain or absent.
    r.t = diff > 0.0 ? INFINITY : (diff < 0.0 ? -INFINITY : 0.0);
    r.p = diff > 0.0 ? 0.0 : (diff < 0.0 ? 1.0 : 0.5);
    return r;
  }
  r.t = diff / se;
  const boost::math::students_t dist(df);
  r.p = boost::math::cdf(boost::math::complement(dist, r.t));
  return r;
}
}  // namespace detail

/// Welch's unequal-variance test of mean(a) > mean(b).
inline TTest welch_greater(std::span<const double> a, std::span<const double> b) {
  if (a.size() < 2 || b.size() < 2) throw std::invalid_argument("welch_greater: need >= 2 samples per group");
  const double va = std::pow(sample_stddev(a), 2) / static_cast<double>(a.size());
  const double vb = std::pow(sample_stddev(b), 2) / static_cast<double>(b.size());
  const double se = std::sqrt(va + vb);
  double df = static_cast<double>(a.size() + b.size() - 2);
  if (va + vb > 0.0)
    df = (va + vb) * (va + vb) /
         (va * va / static_cast<double>(a.size() - 1) + vb * vb / static_cast<double>(b.size() - 1));
  return detail::upper_tail(mean(a) - mean(b), se, df);
}

/// Paired test of mean(a - b) > 0 for matched samples.
inline TTest paired_greater(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size() || a.size() < 2) throw std::invalid_argument("paired_greater: need matched samples >= 2");
  std::vector<double> d(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) d[i] = a[i] - b[i];
  return detail::upper_tail(mean(d), standard_error(d), static_cast<double>(d.size() - 1));
}

}  // namespace vmcts::harness
