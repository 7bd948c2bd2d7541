#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "cgp/kernels.hpp"

namespace cgp {

// Scalar observations y_i = Y(x_i) on [0,1]. Points are stored sorted
// strictly increasing; construction sorts the pairs and rejects duplicates.
class ObservationSet {
 public:
  ObservationSet(std::vector<double> points, std::vector<double> values);

  int size() const { return static_cast<int>(points_.size()); }
  const std::vector<double>& points() const { return points_; }
  const std::vector<double>& values() const { return values_; }
  Eigen::Map<const Eigen::VectorXd> values_vec() const {
    return Eigen::Map<const Eigen::VectorXd>(values_.data(), values_.size());
  }

  static ObservationSet from_csv(const std::filesystem::path& path);
  void to_csv(const std::filesystem::path& path) const;

 private:
  std::vector<double> points_;
  std::vector<double> values_;
};

// Gaussian conditional law at a finite target set.
struct PosteriorGaussian {
  std::vector<double> targets;
  Eigen::VectorXd mean;
  Eigen::MatrixXd covariance;  // symmetrised, diagonal clamped at zero
};

// x_i = i/(n-1) for i = 0..n-1; requires n >= 2.
std::vector<double> equispaced(int n);

// One draw of the centred process at `points`; same (spec, points, seed)
// reproduces bit-identical output.
std::vector<double> simulate_gp(const KernelSpec& spec,
                                std::span<const double> points,
                                std::uint64_t seed);

double log_likelihood(const KernelSpec& spec, const ObservationSet& obs);

PosteriorGaussian posterior(const KernelSpec& spec, const ObservationSet& obs,
                            std::span<const double> targets);

// Innovations W_i = (y_i - E[y_i | y_1..y_{i-1}]) / sd(y_i | y_1..y_{i-1});
// computed as one forward substitution, so sum W_i^2 = y^T R^{-1} y.
Eigen::VectorXd sequential_decomposition(const KernelSpec& spec,
                                         const ObservationSet& obs);

}  // namespace cgp
