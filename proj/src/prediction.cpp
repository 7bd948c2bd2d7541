#include "cgp/prediction.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "cgp/io.hpp"

namespace cgp {

std::pair<double, double> predict(const KernelSpec& spec,
                                  const ObservationSet& obs, double x0) {
  const double targets[1] = {x0};
  const PosteriorGaussian post = posterior(spec, obs, targets);
  return {post.mean[0], post.covariance(0, 0)};
}

std::vector<PredictionResult> predict_constrained_batch(
    const KernelSpec& spec, const ObservationSet& obs, const KnotModel& knots,
    const ConstraintSpec& constraint, std::span<const double> targets,
    int n_draws, const SamplerConfig& config) {
  if (targets.empty()) throw std::invalid_argument("no prediction targets");
  if (n_draws < 2) throw std::invalid_argument("need n_draws >= 2");

  const PosteriorGaussian post = posterior(spec, obs, knots.knots());
  const ConstrainedSampleSet set =
      constrained_sample(post.mean, post.covariance, constraint, n_draws, config);

  // Both predictors describe the interpolant: the unconstrained reference is
  // the posterior of the same knot interpolant the constrained draws live on,
  // so their difference isolates the effect of conditioning on the event.
  const Eigen::MatrixXd interp = interpolation_matrix(knots, targets);

  std::vector<PredictionResult> results;
  results.reserve(targets.size());
  std::vector<double> values(n_draws);
  std::vector<double> row(knots.size());
  for (std::size_t t = 0; t < targets.size(); ++t) {
    const double x0 = targets[t];
    for (int i = 0; i < n_draws; ++i) {
      for (int j = 0; j < knots.size(); ++j) row[j] = set.samples(i, j);
      values[i] = interpolate(row, knots, x0);
    }
    PredictionResult res;
    res.x0 = x0;
    const Eigen::VectorXd weights = interp.row(Eigen::Index(t));
    res.mean_unconstrained = weights.dot(post.mean);
    res.var_unconstrained = std::max(0.0, weights.dot(post.covariance * weights));

    double mean = 0.0;
    for (double v : values) mean += v;
    mean /= n_draws;
    double var = 0.0;
    for (double v : values) var += (v - mean) * (v - mean);
    var /= (n_draws - 1);
    if (var < 0.0) var = 0.0;

    res.mean_constrained = mean;
    res.var_constrained = var;
    res.mc_draws = n_draws;

    // Batch-means standard error honours Gibbs autocorrelation.
    const int n_batches = std::max(2, int(std::sqrt(double(n_draws))));
    const int batch = n_draws / n_batches;
    double bm_var = 0.0;
    for (int k = 0; k < n_batches; ++k) {
      double bm = 0.0;
      for (int i = 0; i < batch; ++i) bm += values[k * batch + i];
      bm /= batch;
      bm_var += (bm - mean) * (bm - mean);
    }
    bm_var /= (n_batches - 1);
    res.mc_standard_error = std::sqrt(std::max(bm_var, 0.0) / n_batches);
    results.push_back(res);
  }
  return results;
}

PredictionResult predict_constrained(const KernelSpec& spec,
                                     const ObservationSet& obs,
                                     const KnotModel& knots,
                                     const ConstraintSpec& constraint,
                                     double x0, int n_draws,
                                     const SamplerConfig& config) {
  const double targets[1] = {x0};
  return predict_constrained_batch(spec, obs, knots, constraint, targets,
                                   n_draws, config)[0];
}

void export_csv(const std::vector<PredictionResult>& predictions,
                const std::filesystem::path& path) {
  CsvTable table;
  table.columns = {"x0",
                   "mean_unconstrained",
                   "var_unconstrained",
                   "mean_constrained",
                   "var_constrained",
                   "mc_draws",
                   "mc_standard_error"};
  table.rows.reserve(predictions.size());
  for (const PredictionResult& res : predictions)
    table.rows.push_back({res.x0, res.mean_unconstrained, res.var_unconstrained,
                          res.mean_constrained, res.var_constrained,
                          double(res.mc_draws), res.mc_standard_error});
  write_csv(path, table);
}

}  // namespace cgp
