#include "cgp/gp.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "cgp/io.hpp"
#include "cgp/rng.hpp"

namespace cgp {

namespace {
constexpr double kLog2Pi = 1.8378770664093453;
}

ObservationSet::ObservationSet(std::vector<double> points,
                               std::vector<double> values) {
  if (points.size() != values.size())
    throw std::invalid_argument("points/values length mismatch");
  if (points.empty()) throw std::invalid_argument("observation set is empty");
  std::vector<size_t> order(points.size());
  std::iota(order.begin(), order.end(), size_t{0});
  std::sort(order.begin(), order.end(),
            [&](size_t a, size_t b) { return points[a] < points[b]; });
  points_.reserve(points.size());
  values_.reserve(points.size());
  for (size_t idx : order) {
    const double x = points[idx];
    if (!(x >= 0.0 && x <= 1.0))
      throw std::invalid_argument("observation point outside [0,1]");
    if (!points_.empty() && !(x > points_.back()))
      throw std::invalid_argument("duplicate observation points");
    points_.push_back(x);
    values_.push_back(values[idx]);
  }
}

ObservationSet ObservationSet::from_csv(const std::filesystem::path& path) {
  const CsvTable table = read_csv(path);
  const int xi = table.column_index("x");
  const int yi = table.column_index("y");
  if (xi < 0 || yi < 0)
    throw std::invalid_argument("observation csv needs x,y columns: " +
                                path.string());
  std::vector<double> xs, ys;
  xs.reserve(table.rows.size());
  ys.reserve(table.rows.size());
  for (const auto& row : table.rows) {
    xs.push_back(row[xi]);
    ys.push_back(row[yi]);
  }
  return ObservationSet(std::move(xs), std::move(ys));
}

void ObservationSet::to_csv(const std::filesystem::path& path) const {
  CsvTable table;
  table.columns = {"x", "y"};
  table.rows.reserve(points_.size());
  for (size_t i = 0; i < points_.size(); ++i)
    table.rows.push_back({points_[i], values_[i]});
  write_csv(path, table);
}

std::vector<double> equispaced(int n) {
  if (n < 2) throw std::invalid_argument("equispaced design needs n >= 2");
  std::vector<double> xs(n);
  for (int i = 0; i < n; ++i) xs[i] = double(i) / (n - 1);
  return xs;
}

std::vector<double> simulate_gp(const KernelSpec& spec,
                                std::span<const double> points,
                                std::uint64_t seed) {
  const CovarianceMatrix cov = covariance_matrix(spec, points);
  Rng rng(seed);
  Eigen::VectorXd z(cov.n);
  for (int i = 0; i < cov.n; ++i) z[i] = rng.normal();
  const Eigen::VectorXd draw = cov.chol * z;
  return std::vector<double>(draw.data(), draw.data() + cov.n);
}

double log_likelihood(const KernelSpec& spec, const ObservationSet& obs) {
  const CovarianceMatrix cov = covariance_matrix(spec, obs.points());
  const double quad = cov.quad_form(obs.values_vec());
  return -0.5 * obs.size() * kLog2Pi - 0.5 * cov.log_det - 0.5 * quad;
}

PosteriorGaussian posterior(const KernelSpec& spec, const ObservationSet& obs,
                            std::span<const double> targets) {
  const CovarianceMatrix cov = covariance_matrix(spec, obs.points());
  const int n = obs.size();
  const int t = static_cast<int>(targets.size());
  if (t == 0) throw std::invalid_argument("posterior needs >= 1 target");

  const KernelSpec latent = spec.without_nugget();
  Eigen::MatrixXd cross(n, t);  // k(x_i, targets_j)
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < t; ++j)
      cross(i, j) = eval_kernel(latent, obs.points()[i] - targets[j]);

  Eigen::MatrixXd prior(t, t);
  for (int i = 0; i < t; ++i) {
    prior(i, i) = latent.sigma2;
    for (int j = i + 1; j < t; ++j) {
      const double value = eval_kernel(latent, targets[i] - targets[j]);
      prior(i, j) = value;
      prior(j, i) = value;
    }
  }

  const Eigen::MatrixXd solved = cov.solve(cross);  // R^{-1} k(., targets)
  PosteriorGaussian post;
  post.targets.assign(targets.begin(), targets.end());
  post.mean = solved.transpose() * obs.values_vec();
  Eigen::MatrixXd reduction = cross.transpose() * solved;
  Eigen::MatrixXd covariance = prior - reduction;
  covariance = 0.5 * (covariance + covariance.transpose()).eval();
  for (int i = 0; i < t; ++i)
    if (covariance(i, i) < 0.0) covariance(i, i) = 0.0;
  post.covariance = std::move(covariance);
  return post;
}

Eigen::VectorXd sequential_decomposition(const KernelSpec& spec,
                                         const ObservationSet& obs) {
  const CovarianceMatrix cov = covariance_matrix(spec, obs.points());
  return cov.forward(obs.values_vec());
}

}  // namespace cgp
