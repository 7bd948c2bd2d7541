#include "cgp/kde.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace cgp {

namespace {
constexpr double kInvSqrt2Pi = 0.3989422804014327;
constexpr int kGridSize = 512;
}  // namespace

double quantile(std::span<const double> samples, double q) {
  if (samples.empty()) throw std::invalid_argument("quantile of empty sample");
  if (!(q >= 0.0 && q <= 1.0)) throw std::invalid_argument("q outside [0,1]");
  std::vector<double> sorted(samples.begin(), samples.end());
  std::sort(sorted.begin(), sorted.end());
  const double pos = q * (sorted.size() - 1);
  const size_t lo = static_cast<size_t>(pos);
  if (lo + 1 >= sorted.size()) return sorted.back();
  const double w = pos - lo;
  return (1.0 - w) * sorted[lo] + w * sorted[lo + 1];
}

double median(std::span<const double> samples) { return quantile(samples, 0.5); }

double silverman_bandwidth(std::span<const double> samples) {
  const size_t n = samples.size();
  if (n < 2) throw std::invalid_argument("bandwidth needs >= 2 samples");
  double mean = 0.0;
  for (double v : samples) mean += v;
  mean /= n;
  double var = 0.0;
  for (double v : samples) var += (v - mean) * (v - mean);
  var /= (n - 1);
  const double sd = std::sqrt(var);
  const double iqr = quantile(samples, 0.75) - quantile(samples, 0.25);
  double spread = std::min(sd, iqr / 1.34);
  if (spread <= 0.0) spread = sd;  // pathological but non-degenerate samples
  if (spread <= 0.0)
    throw std::invalid_argument("degenerate sample: zero spread");
  return 0.9 * spread * std::pow(double(n), -0.2);
}

KdeCurve kde(std::span<const double> samples, double bandwidth) {
  if (samples.size() < 2) throw std::invalid_argument("kde needs >= 2 samples");
  if (!(bandwidth > 0.0)) throw std::invalid_argument("bandwidth must be > 0");
  const auto [min_it, max_it] = std::minmax_element(samples.begin(), samples.end());
  const double lo = *min_it - 3.0 * bandwidth;
  const double hi = *max_it + 3.0 * bandwidth;

  KdeCurve curve;
  curve.bandwidth = bandwidth;
  curve.grid.resize(kGridSize);
  curve.density.resize(kGridSize);
  const double step = (hi - lo) / (kGridSize - 1);
  const double scale = 1.0 / (samples.size() * bandwidth);
  for (int k = 0; k < kGridSize; ++k) {
    const double x = lo + step * k;
    curve.grid[k] = x;
    double sum = 0.0;
    for (double v : samples) {
      const double u = (x - v) / bandwidth;
      sum += std::exp(-0.5 * u * u);
    }
    curve.density[k] = kInvSqrt2Pi * scale * sum;
  }
  return curve;
}

KdeCurve kde(std::span<const double> samples) {
  return kde(samples, silverman_bandwidth(samples));
}

}  // namespace cgp
