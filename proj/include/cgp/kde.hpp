#pragma once

#include <span>
#include <vector>

namespace cgp {

struct KdeCurve {
  std::vector<double> grid;     // 512 points spanning samples +- 3 bandwidths
  std::vector<double> density;
  double bandwidth = 0.0;
};

// 0.9 * min(sd, iqr / 1.34) * n^{-1/5}; throws on fewer than 2 samples or a
// degenerate (all equal) sample.
double silverman_bandwidth(std::span<const double> samples);

KdeCurve kde(std::span<const double> samples, double bandwidth);
KdeCurve kde(std::span<const double> samples);

// Linearly interpolated quantile (order statistic convention of most
// numerical libraries); q in [0,1].
double quantile(std::span<const double> samples, double q);

double median(std::span<const double> samples);

}  // namespace cgp
