#include "cgp/estimators.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <json.hpp>
#include <limits>
#include <stdexcept>

#include "cgp/errors.hpp"
#include "cgp/io.hpp"
#include "cgp/rng.hpp"
#include "cgp/sampler.hpp"

namespace cgp {

namespace {

constexpr double kLog2Pi = 1.8378770664093453;
constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr std::uint64_t kTagAn = 0xA5;
constexpr std::uint64_t kTagBn = 0xB5;

KernelSpec unit_correlation(const KernelSpec& family, double rho) {
  if (family.nugget != 0.0)
    throw std::invalid_argument(
        "constrained estimation assumes noiseless observations");
  KernelSpec corr = family;
  corr.sigma2 = 1.0;
  corr.rho = rho;
  corr.validate();
  return corr;
}

// Feasible sigma-interval counting: each unit-variance draw is feasible for
// sigma in one interval, so a whole sigma grid is served by one draw set.
// `lam_draws` holds constraint-row images of the draws (n_draws x rows),
// `offset` is the constraint-row image of the mean. Returns per-grid counts.
Eigen::VectorXi count_feasible_over_sigma(const ConstraintSpec& constraint,
                                          const Eigen::MatrixXd& lam_draws,
                                          const Eigen::VectorXd& offset,
                                          const Eigen::VectorXd& sigmas) {
  const int n_draws = static_cast<int>(lam_draws.rows());
  const int n_rows = static_cast<int>(lam_draws.cols());
  const int n_grid = static_cast<int>(sigmas.size());
  std::vector<int> delta(n_grid + 1, 0);

  for (int i = 0; i < n_draws; ++i) {
    double lo = 0.0;
    double hi = kInf;
    bool empty = false;
    for (int r = 0; r < n_rows && !empty; ++r) {
      const double g = lam_draws(i, r);
      const double a = constraint.lower[r] - offset[r];
      const double b = constraint.upper[r] - offset[r];
      if (g == 0.0) {
        if (!(a <= 0.0 && b >= 0.0)) empty = true;
      } else if (g > 0.0) {
        lo = std::max(lo, a / g);
        hi = std::min(hi, b / g);
      } else {
        lo = std::max(lo, b / g);
        hi = std::min(hi, a / g);
      }
      if (lo > hi) empty = true;
    }
    if (empty) continue;
    const double* begin = sigmas.data();
    const double* end = begin + n_grid;
    const int first = static_cast<int>(std::lower_bound(begin, end, lo) - begin);
    const int last = static_cast<int>(std::upper_bound(begin, end, hi) - begin);
    if (first >= last) continue;
    ++delta[first];
    --delta[last];
  }

  Eigen::VectorXi counts(n_grid);
  int running = 0;
  for (int j = 0; j < n_grid; ++j) {
    running += delta[j];
    counts[j] = running;
  }
  return counts;
}

Eigen::MatrixXd standard_normal_matrix(int rows, int cols, std::uint64_t seed) {
  Rng rng(seed);
  Eigen::MatrixXd z(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) z(i, j) = rng.normal();
  return z;
}

Eigen::MatrixXd constraint_row_images(const ConstraintSpec& constraint,
                                      const Eigen::MatrixXd& draws) {
  // draws: n_draws x m  ->  n_draws x rows
  return (constraint.matrix * draws.transpose()).transpose();
}

struct LikelihoodParts {
  double log_det_corr = 0.0;
  double quad = 0.0;  // y^T C^{-1} y at unit variance
  int n = 0;
};

LikelihoodParts likelihood_parts(const KernelSpec& corr,
                                 const ObservationSet& obs) {
  const CovarianceMatrix cov = covariance_matrix(corr, obs.points());
  LikelihoodParts parts;
  parts.log_det_corr = cov.log_det;
  parts.quad = cov.quad_form(obs.values_vec());
  parts.n = obs.size();
  return parts;
}

double gaussian_log_lik(const LikelihoodParts& parts, double sigma2) {
  return -0.5 * parts.n * kLog2Pi - 0.5 * parts.n * std::log(sigma2) -
         0.5 * parts.log_det_corr - 0.5 * parts.quad / sigma2;
}

void validate_sigma2_grid(const Eigen::VectorXd& grid) {
  if (grid.size() < 1) throw std::invalid_argument("sigma2 grid is empty");
  for (int j = 0; j < grid.size(); ++j) {
    if (!(grid[j] > 0.0))
      throw std::invalid_argument("sigma2 grid must be positive");
    if (j > 0 && !(grid[j] > grid[j - 1]))
      throw std::invalid_argument("sigma2 grid must be strictly increasing");
  }
}

// Shared assembly for the fixed-rho estimators; zero columns give the
// unconstrained estimator through the identical code path.
EstimationResult assemble_fixed_rho(const ObservationSet& obs,
                                    const KernelSpec& family, double rho,
                                    const Eigen::VectorXd& sigma2_grid,
                                    const Eigen::VectorXd& an,
                                    const Eigen::VectorXd& bn, int an_draws,
                                    int bn_draws, std::uint64_t seed) {
  validate_sigma2_grid(sigma2_grid);
  const KernelSpec corr = unit_correlation(family, rho);
  const LikelihoodParts parts = likelihood_parts(corr, obs);

  EstimationResult result;
  result.seed = seed;
  result.an_draws = an_draws;
  result.bn_draws = bn_draws;
  result.surface.reserve(sigma2_grid.size());
  for (int j = 0; j < sigma2_grid.size(); ++j) {
    GridPointEval point;
    point.sigma2 = sigma2_grid[j];
    point.rho = rho;
    point.log_lik = gaussian_log_lik(parts, point.sigma2);
    point.an = an[j];
    point.bn = bn[j];
    point.objective = point.log_lik + point.an + point.bn;
    point.excluded = !std::isfinite(point.objective);
    if (point.excluded) ++result.excluded_points;
    result.surface.push_back(point);
  }

  const int best = grid_argmax(result.surface);
  const GridPointEval& top = result.surface[best];
  result.sigma2_hat = top.sigma2;
  result.rho_hat = rho;
  result.microergodic_hat =
      top.sigma2 / std::pow(rho, family.microergodic_exponent());
  for (const GridPointEval& point : result.surface)
    if (!point.excluded && point.objective == top.objective &&
        &point != &result.surface[best])
      ++result.ties;
  if (best == 0 || best + 1 == static_cast<int>(result.surface.size()))
    ++result.boundary_hits;
  return result;
}

nlohmann::ordered_json diagnostics_json(const EstimationResult& result) {
  nlohmann::ordered_json j;
  j["sigma2_hat"] = result.sigma2_hat;
  j["rho_hat"] = result.rho_hat;
  j["microergodic_hat"] = result.microergodic_hat;
  if (result.delta2_hat) j["delta2_hat"] = *result.delta2_hat;
  j["an_draws"] = result.an_draws;
  j["bn_draws"] = result.bn_draws;
  j["seed"] = result.seed;
  j["ties"] = result.ties;
  j["boundary_hits"] = result.boundary_hits;
  j["excluded_points"] = result.excluded_points;
  j["skipped_points"] = result.skipped_points;
  return j;
}

}  // namespace

void EstimationGrid::validate() const {
  validate_sigma2_grid(sigma2_values);
  if (rho_values.size() < 1) throw std::invalid_argument("rho grid is empty");
  for (int i = 0; i < rho_values.size(); ++i) {
    if (!(rho_values[i] > 0.0))
      throw std::invalid_argument("rho grid must be positive");
    if (i > 0 && !(rho_values[i] > rho_values[i - 1]))
      throw std::invalid_argument("rho grid must be strictly increasing");
  }
}

double EstimationGrid::sigma2_at(int rho_idx, int sigma2_idx) const {
  const double base = sigma2_values[sigma2_idx];
  if (!sigma2_scaled_by_rho) return base;
  return std::pow(rho_values[rho_idx], scale_exponent) * base;
}

Eigen::VectorXd EstimationGrid::linspace(double lo, double hi, int count) {
  if (count < 1) throw std::invalid_argument("linspace needs count >= 1");
  Eigen::VectorXd out(count);
  if (count == 1) {
    out[0] = lo;
    return out;
  }
  const double step = (hi - lo) / (count - 1);
  for (int i = 0; i < count; ++i) out[i] = lo + step * i;
  out[count - 1] = hi;
  return out;
}

Eigen::VectorXd EstimationGrid::centered_window(double center,
                                                double rel_halfwidth,
                                                int count) {
  if (!(center > 0.0)) throw std::invalid_argument("window center must be > 0");
  double lo = center * (1.0 - rel_halfwidth);
  const double hi = center * (1.0 + rel_halfwidth);
  if (lo <= 0.0) lo = 1e-3 * center;  // keep the grid inside the valid region
  return linspace(lo, hi, count);
}

EstimationGrid EstimationGrid::variance_grid(double center, double rel_halfwidth,
                                             int count, double rho) {
  EstimationGrid grid;
  grid.sigma2_values = centered_window(center, rel_halfwidth, count);
  grid.rho_values = Eigen::VectorXd::Constant(1, rho);
  grid.validate();
  return grid;
}

EstimationGrid EstimationGrid::joint_grid(double micro_center,
                                          double rel_halfwidth, int n_sigma2,
                                          double rho_lo, double rho_hi,
                                          int n_rho, double exponent) {
  EstimationGrid grid;
  grid.sigma2_values = centered_window(micro_center, rel_halfwidth, n_sigma2);
  grid.rho_values = linspace(rho_lo, rho_hi, n_rho);
  grid.sigma2_scaled_by_rho = true;
  grid.scale_exponent = exponent;
  grid.validate();
  return grid;
}

int grid_argmax(std::span<const GridPointEval> surface) {
  int best = -1;
  for (int i = 0; i < static_cast<int>(surface.size()); ++i) {
    const GridPointEval& point = surface[i];
    if (point.excluded || !std::isfinite(point.objective)) continue;
    if (best < 0) {
      best = i;
      continue;
    }
    const GridPointEval& top = surface[best];
    if (point.objective > top.objective) {
      best = i;
    } else if (point.objective == top.objective) {
      if (point.sigma2 < top.sigma2 ||
          (point.sigma2 == top.sigma2 && point.rho < top.rho) ||
          (point.sigma2 == top.sigma2 && point.rho == top.rho &&
           point.delta2 < top.delta2))
        best = i;
    }
  }
  if (best < 0)
    throw EstimationError("every grid point is excluded or non-finite");
  return best;
}

void EstimationResult::surface_to_csv(const std::filesystem::path& path) const {
  CsvTable table;
  table.columns = {"sigma2", "rho",       "delta2",   "log_lik",
                   "an",     "bn",        "objective", "excluded"};
  table.rows.reserve(surface.size());
  for (const GridPointEval& point : surface)
    table.rows.push_back({point.sigma2, point.rho, point.delta2, point.log_lik,
                          point.an, point.bn, point.objective,
                          point.excluded ? 1.0 : 0.0});
  write_csv(path, table);
}

void EstimationResult::diagnostics_to_json(
    const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out)
    throw std::invalid_argument("cannot write file: " + path.string());
  out << diagnostics_json(*this).dump(2) << '\n';
}

double mle_variance(const ObservationSet& obs, const KernelSpec& correlation) {
  const KernelSpec corr = correlation.with_sigma2(1.0);
  const CovarianceMatrix cov = covariance_matrix(corr, obs.points());
  return cov.quad_form(obs.values_vec()) / obs.size();
}

EstimationResult mle_profile(const ObservationSet& obs, const KernelSpec& family,
                             const Eigen::VectorXd& rho_grid,
                             const ThetaBox& box) {
  if (rho_grid.size() < 1) throw std::invalid_argument("rho grid is empty");
  EstimationResult result;
  result.surface.reserve(rho_grid.size());
  for (int i = 0; i < rho_grid.size(); ++i) {
    const double rho = rho_grid[i];
    try {
      const KernelSpec corr = unit_correlation(family, rho);
      const LikelihoodParts parts = likelihood_parts(corr, obs);
      const double profiled = parts.quad / parts.n;
      double clamped = std::min(std::max(profiled, box.sigma2_lo), box.sigma2_hi);
      if (clamped != profiled) ++result.boundary_hits;
      GridPointEval point;
      point.sigma2 = clamped;
      point.rho = rho;
      point.log_lik = gaussian_log_lik(parts, clamped);
      point.objective = point.log_lik;
      result.surface.push_back(point);
    } catch (const ConditioningError&) {
      ++result.skipped_points;
    }
  }
  if (result.surface.empty())
    throw EstimationError("profile likelihood failed at every rho");

  const int best = grid_argmax(result.surface);
  const GridPointEval& top = result.surface[best];
  result.sigma2_hat = top.sigma2;
  result.rho_hat = top.rho;
  result.microergodic_hat =
      top.sigma2 / std::pow(top.rho, family.microergodic_exponent());
  for (const GridPointEval& point : result.surface)
    if (point.objective == top.objective && &point != &result.surface[best])
      ++result.ties;
  return result;
}

double estimate_An(const KernelSpec& spec, const KnotModel& knots,
                   const ConstraintSpec& constraint, int n_sim,
                   std::uint64_t seed) {
  const CovarianceMatrix cov =
      covariance_matrix(spec.without_nugget(), knots.knots());
  const Eigen::VectorXd mean = Eigen::VectorXd::Zero(knots.size());
  const double p =
      constraint_probability(mean, cov.entries, constraint, n_sim, seed);
  return p >= 1.0 ? 0.0 : p > 0.0 ? -std::log(p) : kInf;
}

double estimate_Bn(const KernelSpec& spec, const ObservationSet& obs,
                   const KnotModel& knots, const ConstraintSpec& constraint,
                   int n_t, std::uint64_t seed) {
  const PosteriorGaussian post =
      posterior(spec.without_nugget(), obs, knots.knots());
  const double p =
      constraint_probability(post.mean, post.covariance, constraint, n_t, seed);
  return p > 0.0 ? std::log(p) : -kInf;
}

MonteCarloColumn an_column(const KernelSpec& family, double rho,
                           const Eigen::VectorXd& sigma2_grid,
                           const KnotModel& knots,
                           const ConstraintSpec& constraint, int n_sim,
                           std::uint64_t seed) {
  validate_sigma2_grid(sigma2_grid);
  if (n_sim < 1) throw std::invalid_argument("n_sim must be >= 1");
  const KernelSpec corr = unit_correlation(family, rho);
  const CovarianceMatrix cov = covariance_matrix(corr, knots.knots());
  const Eigen::MatrixXd factor = psd_factor(cov.entries);
  const Eigen::MatrixXd z = standard_normal_matrix(n_sim, knots.size(), seed);
  const Eigen::MatrixXd lam = constraint_row_images(constraint, z * factor.transpose());

  const Eigen::VectorXd sigmas = sigma2_grid.array().sqrt();
  const Eigen::VectorXd offset = Eigen::VectorXd::Zero(constraint.rows());
  const Eigen::VectorXi counts =
      count_feasible_over_sigma(constraint, lam, offset, sigmas);

  MonteCarloColumn column;
  column.draws = n_sim;
  column.seed = seed;
  column.values.resize(sigma2_grid.size());
  for (int j = 0; j < sigma2_grid.size(); ++j)
    column.values[j] = counts[j] >= n_sim ? 0.0
                       : counts[j] > 0
                           ? -std::log(double(counts[j]) / n_sim)
                           : kInf;
  return column;
}

MonteCarloColumn bn_column(const KernelSpec& family, double rho,
                           const ObservationSet& obs,
                           const Eigen::VectorXd& sigma2_grid,
                           const KnotModel& knots,
                           const ConstraintSpec& constraint, int n_t,
                           std::uint64_t seed) {
  validate_sigma2_grid(sigma2_grid);
  if (n_t < 1) throw std::invalid_argument("n_t must be >= 1");
  const KernelSpec corr = unit_correlation(family, rho);
  const PosteriorGaussian post = posterior(corr, obs, knots.knots());
  const Eigen::MatrixXd factor = psd_factor(post.covariance);
  const Eigen::MatrixXd z = standard_normal_matrix(n_t, knots.size(), seed);
  const Eigen::MatrixXd lam = constraint_row_images(constraint, z * factor.transpose());
  const Eigen::VectorXd offset = constraint.matrix * post.mean;

  const Eigen::VectorXd sigmas = sigma2_grid.array().sqrt();
  const Eigen::VectorXi counts =
      count_feasible_over_sigma(constraint, lam, offset, sigmas);

  MonteCarloColumn column;
  column.draws = n_t;
  column.seed = seed;
  column.values.resize(sigma2_grid.size());
  for (int j = 0; j < sigma2_grid.size(); ++j)
    column.values[j] =
        counts[j] > 0 ? std::log(double(counts[j]) / n_t) : -kInf;
  return column;
}

EstimationResult cmle_fixed_rho(const ObservationSet& obs,
                                const KernelSpec& family, double rho,
                                const Eigen::VectorXd& sigma2_grid,
                                const ConstraintSpec& constraint,
                                const KnotModel& knots, const McConfig& mc,
                                const MonteCarloColumn* an_precomputed) {
  MonteCarloColumn an;
  if (an_precomputed != nullptr) {
    if (an_precomputed->values.size() != sigma2_grid.size())
      throw std::invalid_argument("precomputed A_n column length mismatch");
    an = *an_precomputed;
  } else {
    an = an_column(family, rho, sigma2_grid, knots, constraint, mc.n_sim_an,
                   Rng::derive(mc.seed, kTagAn, 0));
  }
  const MonteCarloColumn bn =
      bn_column(family, rho, obs, sigma2_grid, knots, constraint, mc.n_t,
                Rng::derive(mc.seed, kTagBn, 0));
  return assemble_fixed_rho(obs, family, rho, sigma2_grid, an.values, bn.values,
                            an.draws, bn.draws, mc.seed);
}

EstimationResult mle_grid_fixed_rho(const ObservationSet& obs,
                                    const KernelSpec& family, double rho,
                                    const Eigen::VectorXd& sigma2_grid) {
  const Eigen::VectorXd zero = Eigen::VectorXd::Zero(sigma2_grid.size());
  return assemble_fixed_rho(obs, family, rho, sigma2_grid, zero, zero, 0, 0, 0);
}

namespace {

// Column source for the joint grid: rho index plus the effective sigma2
// column in, A_n/B_n columns out. The unconstrained twin plugs in zeros, so
// both estimators run the identical assembly arithmetic.
using ColumnSource =
    std::function<MonteCarloColumn(int, const Eigen::VectorXd&)>;

EstimationResult assemble_joint(const ObservationSet& obs,
                                const KernelSpec& family,
                                const EstimationGrid& grid,
                                const ColumnSource& an_source,
                                const ColumnSource& bn_source, int an_draws,
                                int bn_draws, std::uint64_t seed) {
  grid.validate();
  EstimationResult result;
  result.seed = seed;
  result.an_draws = an_draws;
  result.bn_draws = bn_draws;
  result.surface.reserve(grid.rho_values.size() * grid.sigma2_values.size());

  for (int i = 0; i < grid.rho_values.size(); ++i) {
    const double rho = grid.rho_values[i];
    Eigen::VectorXd sigma2s(grid.sigma2_values.size());
    for (int j = 0; j < grid.sigma2_values.size(); ++j)
      sigma2s[j] = grid.sigma2_at(i, j);

    try {
      const KernelSpec corr = unit_correlation(family, rho);
      const LikelihoodParts parts = likelihood_parts(corr, obs);
      const MonteCarloColumn an = an_source(i, sigma2s);
      const MonteCarloColumn bn = bn_source(i, sigma2s);
      if (an.values.size() != sigma2s.size() ||
          bn.values.size() != sigma2s.size())
        throw std::invalid_argument("A_n/B_n column length mismatch");
      for (int j = 0; j < sigma2s.size(); ++j) {
        GridPointEval point;
        point.sigma2 = sigma2s[j];
        point.rho = rho;
        point.log_lik = gaussian_log_lik(parts, point.sigma2);
        point.an = an.values[j];
        point.bn = bn.values[j];
        point.objective = point.log_lik + point.an + point.bn;
        point.excluded = !std::isfinite(point.objective);
        if (point.excluded) ++result.excluded_points;
        result.surface.push_back(point);
      }
    } catch (const ConditioningError&) {
      result.skipped_points += static_cast<int>(sigma2s.size());
    }
  }
  if (result.surface.empty())
    throw EstimationError("joint likelihood failed at every rho");

  const int best = grid_argmax(result.surface);
  const GridPointEval& top = result.surface[best];
  result.sigma2_hat = top.sigma2;
  result.rho_hat = top.rho;
  result.microergodic_hat =
      top.sigma2 / std::pow(top.rho, family.microergodic_exponent());
  for (const GridPointEval& point : result.surface)
    if (!point.excluded && point.objective == top.objective &&
        &point != &result.surface[best])
      ++result.ties;
  const int n_sigma2 = static_cast<int>(grid.sigma2_values.size());
  const int local = best % n_sigma2;
  const int rho_idx = best / n_sigma2;
  if (local == 0 || local + 1 == n_sigma2) ++result.boundary_hits;
  if (grid.rho_values.size() > 1 &&
      (rho_idx == 0 || rho_idx + 1 == static_cast<int>(grid.rho_values.size())))
    ++result.boundary_hits;
  return result;
}

MonteCarloColumn zero_column(const Eigen::VectorXd& sigma2s) {
  MonteCarloColumn column;
  column.values = Eigen::VectorXd::Zero(sigma2s.size());
  column.draws = 0;
  return column;
}

}  // namespace

EstimationResult cmle_joint(const ObservationSet& obs, const KernelSpec& family,
                            const EstimationGrid& grid,
                            const ConstraintSpec& constraint,
                            const KnotModel& knots, const McConfig& mc,
                            const std::vector<MonteCarloColumn>* an_precomputed) {
  grid.validate();
  if (an_precomputed != nullptr &&
      static_cast<int>(an_precomputed->size()) != grid.rho_values.size())
    throw std::invalid_argument("precomputed A_n table length mismatch");

  const ColumnSource an_source = [&](int i, const Eigen::VectorXd& sigma2s) {
    if (an_precomputed != nullptr) return (*an_precomputed)[i];
    return an_column(family, grid.rho_values[i], sigma2s, knots, constraint,
                     mc.n_sim_an, Rng::derive(mc.seed, kTagAn, i));
  };
  const ColumnSource bn_source = [&](int i, const Eigen::VectorXd& sigma2s) {
    return bn_column(family, grid.rho_values[i], obs, sigma2s, knots,
                     constraint, mc.n_t, Rng::derive(mc.seed, kTagBn, i));
  };
  return assemble_joint(obs, family, grid, an_source, bn_source, mc.n_sim_an,
                        mc.n_t, mc.seed);
}

EstimationResult mle_grid_joint(const ObservationSet& obs,
                                const KernelSpec& family,
                                const EstimationGrid& grid) {
  const ColumnSource zeros = [](int, const Eigen::VectorXd& sigma2s) {
    return zero_column(sigma2s);
  };
  return assemble_joint(obs, family, grid, zeros, zeros, 0, 0, 0);
}

EstimationResult mle_noisy(const ObservationSet& obs, const KernelSpec& family,
                           const EstimationGrid& grid,
                           const Eigen::VectorXd& delta2_values) {
  if (family.family != KernelFamily::Exponential)
    throw std::invalid_argument("noisy estimation expects the exponential kernel");
  if (family.nugget != 0.0)
    throw std::invalid_argument("noise level is estimated, not fixed");
  grid.validate();
  if (delta2_values.size() < 1)
    throw std::invalid_argument("delta2 grid is empty");
  for (int k = 0; k < delta2_values.size(); ++k) {
    if (!(delta2_values[k] > 0.0))
      throw std::invalid_argument("delta2 grid must be positive");
    if (k > 0 && !(delta2_values[k] > delta2_values[k - 1]))
      throw std::invalid_argument("delta2 grid must be strictly increasing");
  }

  const int n = obs.size();
  EstimationResult result;
  result.surface.reserve(grid.rho_values.size() * grid.sigma2_values.size() *
                         delta2_values.size());

  for (int i = 0; i < grid.rho_values.size(); ++i) {
    const double rho = grid.rho_values[i];
    KernelSpec corr = family;
    corr.sigma2 = 1.0;
    corr.rho = rho;
    Eigen::MatrixXd entries(n, n);
    for (int a = 0; a < n; ++a) {
      entries(a, a) = 1.0;
      for (int b = a + 1; b < n; ++b) {
        const double value =
            eval_kernel(corr, obs.points()[a] - obs.points()[b]);
        entries(a, b) = value;
        entries(b, a) = value;
      }
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(entries);
    if (solver.info() != Eigen::Success) {
      result.skipped_points += static_cast<int>(grid.sigma2_values.size() *
                                                delta2_values.size());
      continue;
    }
    Eigen::VectorXd lambda = solver.eigenvalues().cwiseMax(0.0);
    const Eigen::VectorXd w = solver.eigenvectors().transpose() * obs.values_vec();
    const Eigen::VectorXd w2 = w.array().square();

    for (int j = 0; j < grid.sigma2_values.size(); ++j) {
      const double sigma2 = grid.sigma2_at(i, j);
      for (int k = 0; k < delta2_values.size(); ++k) {
        const double delta2 = delta2_values[k];
        double log_det = 0.0;
        double quad = 0.0;
        for (int a = 0; a < n; ++a) {
          const double eig = sigma2 * lambda[a] + delta2;
          log_det += std::log(eig);
          quad += w2[a] / eig;
        }
        GridPointEval point;
        point.sigma2 = sigma2;
        point.rho = rho;
        point.delta2 = delta2;
        point.log_lik = -0.5 * n * kLog2Pi - 0.5 * log_det - 0.5 * quad;
        point.objective = point.log_lik;
        point.excluded = !std::isfinite(point.objective);
        if (point.excluded) ++result.excluded_points;
        result.surface.push_back(point);
      }
    }
  }
  if (result.surface.empty())
    throw EstimationError("noisy likelihood failed at every rho");

  const int best = grid_argmax(result.surface);
  const GridPointEval& top = result.surface[best];
  result.sigma2_hat = top.sigma2;
  result.rho_hat = top.rho;
  result.delta2_hat = top.delta2;
  result.microergodic_hat = top.sigma2 / top.rho;
  for (const GridPointEval& point : result.surface)
    if (!point.excluded && point.objective == top.objective &&
        &point != &result.surface[best])
      ++result.ties;
  return result;
}

}  // namespace cgp
