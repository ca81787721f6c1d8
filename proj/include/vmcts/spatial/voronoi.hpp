#pragma once

#include <vector>

#include "vmcts/common.hpp"

namespace vmcts::spatial {

/// Monte Carlo Voronoi-cell volumes: uniform samples assigned to the nearest point.
template <std::size_t D>
std::vector<double> voronoi_volumes_mc(const std::vector<Vec<D>>& points, const Box<D>& box, std::size_t n_samples,
                                       std::uint64_t seed) {
  std::vector<double> vol(points.size(), 0.0);
  if (points.empty() || n_samples == 0) return vol;
  Rng rng(seed);
  std::vector<std::size_t> counts(points.size(), 0);
  Vec<D> s;
  for (std::size_t k = 0; k < n_samples; ++k) {
    for (std::size_t d = 0; d < D; ++d) s[d] = rng.uniform(box.lo[d], box.hi[d]);
    std::size_t best = 0;
    double best_d = squared_distance(s, points[0]);
    for (std::size_t i = 1; i < points.size(); ++i) {
      const double dd = squared_distance(s, points[i]);
      if (dd < best_d) {
        best_d = dd;
        best = i;
      }
    }
    ++counts[best];
  }
  const double total = box.volume();
  for (std::size_t i = 0; i < points.size(); ++i)
    vol[i] = total * static_cast<double>(counts[i]) / static_cast<double>(n_samples);
  return vol;
}

}  // namespace vmcts::spatial
