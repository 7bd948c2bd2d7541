#include "cgp/sampler.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <algorithm>
#include <boost/math/special_functions/erf.hpp>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "cgp/errors.hpp"
#include "cgp/io.hpp"

namespace cgp {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kSqrt2 = 1.4142135623730951;
constexpr std::uint64_t kChainTag = 0x47696273ULL;  // sampler chain sub-seeds

double normal_cdf(double x) { return 0.5 * boost::math::erfc(-x / kSqrt2); }
double normal_sf(double x) { return 0.5 * boost::math::erfc(x / kSqrt2); }

// Robert's exponential proposal for one-sided far tails [a, b], a >= 0 large.
double tail_rejection(Rng& rng, double a, double b) {
  const double alpha = 0.5 * (a + std::sqrt(a * a + 4.0));
  for (int tries = 0; tries < 10000; ++tries) {
    const double z = a - std::log(rng.uniform()) / alpha;
    if (z > b) continue;
    const double d = z - alpha;
    if (rng.uniform() <= std::exp(-0.5 * d * d)) return z;
  }
  return a;  // interval is pathologically thin; its width is below resolution
}

// Standardised draw on [a, b] with 0 <= a < b (upper tail). Works with
// survival masses so no cancellation occurs for large a.
double upper_tail_draw(Rng& rng, double a, double b) {
  const double sa = normal_sf(a);
  if (sa <= 0.0) return tail_rejection(rng, a, b);
  const double sb = std::isinf(b) ? 0.0 : normal_sf(b);
  double s = sb + (sa - sb) * rng.uniform();
  if (s <= 0.0) s = std::numeric_limits<double>::denorm_min();
  return kSqrt2 * boost::math::erfc_inv(2.0 * s);
}

double standard_truncated_draw(Rng& rng, double a, double b) {
  if (a >= 0.0) return upper_tail_draw(rng, a, b);
  if (b <= 0.0) return -upper_tail_draw(rng, -b, -a);
  // a < 0 < b: split on the realised mass so both halves stay accurate.
  const double pa = normal_cdf(a);
  const double pb = normal_cdf(b);
  const double u = rng.uniform();
  const double p = pa + (pb - pa) * u;
  if (p <= 0.5) {
    const double q = std::max(p, std::numeric_limits<double>::denorm_min());
    return -kSqrt2 * boost::math::erfc_inv(2.0 * q);
  }
  const double sa = normal_sf(a);
  const double sb = normal_sf(b);
  double s = sa - (sa - sb) * u;
  if (s <= 0.0) s = std::numeric_limits<double>::denorm_min();
  return kSqrt2 * boost::math::erfc_inv(2.0 * s);
}

void validate_gaussian_inputs(const Eigen::VectorXd& mean,
                              const Eigen::MatrixXd& covariance,
                              const ConstraintSpec& constraint, int n_draws) {
  if (covariance.rows() != covariance.cols())
    throw std::invalid_argument("covariance must be square");
  if (mean.size() != covariance.rows())
    throw std::invalid_argument("mean/covariance dimension mismatch");
  if (mean.size() != constraint.dimension())
    throw std::invalid_argument("constraint dimension mismatch");
  if (n_draws < 1) throw std::invalid_argument("n_draws must be >= 1");
}

// Feasible starting point by constraint kind; for Convex the knot widths are
// recovered from the divided-difference rows.
Eigen::VectorXd feasible_start(const ConstraintSpec& constraint,
                               const Eigen::VectorXd& mean) {
  const int m = constraint.dimension();
  Eigen::VectorXd candidate = mean;
  switch (constraint.kind) {
    case ConstraintKind::Bounds:
      for (int j = 0; j < m; ++j)
        candidate[j] = std::min(std::max(mean[j], constraint.lower[j]),
                                constraint.upper[j]);
      break;
    case ConstraintKind::Monotone:
      candidate = isotonic_fit(mean, Eigen::VectorXd::Ones(m));
      break;
    case ConstraintKind::Convex: {
      Eigen::VectorXd widths(m - 1);  // divided-difference rows carry 1/h
      for (int r = 0; r < m - 2; ++r)
        widths[r] = 1.0 / constraint.matrix.coeff(r, r);
      widths[m - 2] = 1.0 / constraint.matrix.coeff(m - 3, m - 1);
      Eigen::VectorXd slopes(m - 1);
      for (int j = 0; j + 1 < m; ++j)
        slopes[j] = (mean[j + 1] - mean[j]) / widths[j];
      const Eigen::VectorXd iso = isotonic_fit(slopes, widths);
      candidate[0] = mean[0];
      for (int j = 0; j + 1 < m; ++j)
        candidate[j + 1] = candidate[j] + iso[j] * widths[j];
      break;
    }
  }
  if (is_feasible(constraint, candidate)) return candidate;
  if (is_feasible(constraint, mean)) return mean;
  const Eigen::VectorXd zero = Eigen::VectorXd::Zero(m);
  if (is_feasible(constraint, zero)) return zero;
  throw SamplerError("no feasible starting point for Gibbs sampler", 0.0);
}

Eigen::MatrixXd jittered_cholesky(const Eigen::MatrixXd& covariance) {
  const double scale = std::max(covariance.diagonal().maxCoeff(), 1e-300);
  const std::vector<double> ladder = {0.0, 1e-12 * scale, 1e-10 * scale,
                                      1e-8 * scale};
  for (double jitter : ladder) {
    Eigen::MatrixXd shifted = covariance;
    if (jitter > 0.0) shifted.diagonal().array() += jitter;
    Eigen::LLT<Eigen::MatrixXd> llt(shifted);
    if (llt.info() == Eigen::Success) return llt.matrixL();
  }
  throw ConditioningError("covariance not factorizable for Gibbs sampler",
                          ladder);
}

}  // namespace

double truncated_normal(Rng& rng, double mu, double sd, double lo, double hi) {
  if (!(lo <= hi)) throw std::invalid_argument("truncation interval is empty");
  if (!(sd >= 0.0)) throw std::invalid_argument("sd must be non-negative");
  if (sd == 0.0) return std::min(std::max(mu, lo), hi);
  const double a = (lo - mu) / sd;
  const double b = (hi - mu) / sd;
  double x = standard_truncated_draw(rng, a, b);
  x = std::min(std::max(x, a), b);
  return mu + sd * x;
}

Eigen::MatrixXd psd_factor(const Eigen::MatrixXd& covariance) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(covariance);
  if (solver.info() != Eigen::Success)
    throw ConditioningError("eigendecomposition failed", {});
  Eigen::VectorXd scale = solver.eigenvalues();
  for (int i = 0; i < scale.size(); ++i)
    scale[i] = scale[i] > 0.0 ? std::sqrt(scale[i]) : 0.0;
  return solver.eigenvectors() * scale.asDiagonal();
}

ConstrainedSampleSet rejection_sample(const Eigen::VectorXd& mean,
                                      const Eigen::MatrixXd& covariance,
                                      const ConstraintSpec& constraint,
                                      int n_draws, const SamplerConfig& config) {
  validate_gaussian_inputs(mean, covariance, constraint, n_draws);
  const int m = static_cast<int>(mean.size());
  const Eigen::MatrixXd factor = psd_factor(covariance);
  Rng rng(config.seed);

  ConstrainedSampleSet result;
  result.samples.resize(n_draws, m);
  result.seed_used = config.seed;
  Eigen::VectorXd z(m);
  long accepted = 0;
  long tries = 0;
  while (accepted < n_draws) {
    if (tries >= config.rejection.max_tries)
      throw SamplerError("rejection sampler exhausted max_tries",
                         double(accepted) / double(tries));
    ++tries;
    for (int i = 0; i < m; ++i) z[i] = rng.normal();
    const Eigen::VectorXd x = mean + factor * z;
    if (is_feasible(constraint, x)) {
      result.samples.row(accepted) = x;
      ++accepted;
    }
  }
  result.acceptance_rate = double(accepted) / double(tries);
  return result;
}

ConstrainedSampleSet gibbs_sample(const Eigen::VectorXd& mean,
                                  const Eigen::MatrixXd& covariance,
                                  const ConstraintSpec& constraint, int n_draws,
                                  const SamplerConfig& config) {
  validate_gaussian_inputs(mean, covariance, constraint, n_draws);
  if (config.gibbs.burn_in < 0 || config.gibbs.thinning < 1 ||
      config.gibbs.chain_count < 1)
    throw std::invalid_argument("invalid Gibbs configuration");

  // Whitened parameterisation: x = mean + L w with w ~ N(0, I) truncated to
  // lo' <= (Lambda L) w <= hi'. The coordinate conditionals are unit normals,
  // so mixing does not degrade when the covariance is nearly singular; with
  // vacuous constraints one sweep already gives an independent draw.
  const int m = static_cast<int>(mean.size());
  const Eigen::MatrixXd chol = jittered_cholesky(covariance);
  const Eigen::MatrixXd rows = constraint.matrix * chol;  // r x m
  const Eigen::VectorXd shift = constraint.matrix * mean;
  const Eigen::VectorXd row_lo = constraint.lower - shift;
  const Eigen::VectorXd row_hi = constraint.upper - shift;
  const int r_count = static_cast<int>(rows.rows());

  ConstrainedSampleSet result;
  result.samples.resize(n_draws, m);
  result.seed_used = config.seed;

  const auto lower_tri = chol.triangularView<Eigen::Lower>();

  const int chains = config.gibbs.chain_count;
  int written = 0;
  for (int chain = 0; chain < chains; ++chain) {
    const int quota = n_draws / chains + (chain < n_draws % chains ? 1 : 0);
    if (quota == 0) continue;
    Rng rng(Rng::derive(config.seed, kChainTag, chain));

    const Eigen::VectorXd start = feasible_start(constraint, mean);
    Eigen::VectorXd w = lower_tri.solve(start - mean);
    int kept = 0;
    int sweep = 0;
    while (kept < quota) {
      ++sweep;
      // Fresh row image each sweep stops incremental drift; it also repairs
      // the ulp-level violations a round-tripped start can carry.
      Eigen::VectorXd s = rows * w;
      for (int j = 0; j < m; ++j) {
        double lo = -kInf, hi = kInf;
        for (int r = 0; r < r_count; ++r) {
          const double coef = rows(r, j);
          if (coef == 0.0) continue;
          const double rest = s[r] - coef * w[j];
          const double left = (row_lo[r] - rest) / coef;
          const double right = (row_hi[r] - rest) / coef;
          if (coef > 0.0) {
            lo = std::max(lo, left);
            hi = std::min(hi, right);
          } else {
            lo = std::max(lo, right);
            hi = std::min(hi, left);
          }
        }
        // Keep strictly inside so accumulated rounding cannot leak out.
        const double margin =
            1e-12 * std::max(1.0, std::max(std::abs(lo), std::abs(hi)));
        if (std::isfinite(lo) && std::isfinite(hi) && hi - lo > 4.0 * margin) {
          lo += margin;
          hi -= margin;
        }
        if (!(lo <= hi)) continue;  // numerically pinched; keep w_j

        const double old = w[j];
        const double fresh = truncated_normal(rng, 0.0, 1.0, lo, hi);
        w[j] = fresh;
        for (int r = 0; r < r_count; ++r) s[r] += rows(r, j) * (fresh - old);
      }
      if (sweep <= config.gibbs.burn_in) continue;
      if ((sweep - config.gibbs.burn_in) % config.gibbs.thinning != 0) continue;
      result.samples.row(written + kept) = mean + lower_tri * w;
      ++kept;
    }
    written += quota;
  }

  // Batch-means effective sample size, reported as the worst coordinate.
  const int n = n_draws;
  double min_ess = double(n);
  if (n >= 4) {
    const int n_batches = std::max(2, int(std::sqrt(double(n))));
    const int batch = n / n_batches;
    for (int j = 0; j < m; ++j) {
      const auto col = result.samples.col(j);
      const double mu_j = col.mean();
      const double var_j = (col.array() - mu_j).square().sum() / (n - 1);
      if (var_j <= 0.0) continue;
      double bm_var = 0.0;
      for (int k = 0; k < n_batches; ++k) {
        const double bm = col.segment(k * batch, batch).mean();
        bm_var += (bm - mu_j) * (bm - mu_j);
      }
      bm_var /= (n_batches - 1);
      if (bm_var <= 0.0) continue;
      const double ess = std::min(double(n), var_j * n_batches / bm_var);
      min_ess = std::min(min_ess, std::max(1.0, ess));
    }
  }
  result.effective_sample_estimate = min_ess;
  return result;
}

ConstrainedSampleSet constrained_sample(const Eigen::VectorXd& mean,
                                        const Eigen::MatrixXd& covariance,
                                        const ConstraintSpec& constraint,
                                        int n_draws,
                                        const SamplerConfig& config) {
  if (config.method == SamplerConfig::Method::Rejection)
    return rejection_sample(mean, covariance, constraint, n_draws, config);
  return gibbs_sample(mean, covariance, constraint, n_draws, config);
}

double constraint_probability(const Eigen::VectorXd& mean,
                              const Eigen::MatrixXd& covariance,
                              const ConstraintSpec& constraint, int n_sim,
                              std::uint64_t seed) {
  validate_gaussian_inputs(mean, covariance, constraint, n_sim);
  const int m = static_cast<int>(mean.size());
  const Eigen::MatrixXd factor = psd_factor(covariance);
  Rng rng(seed);
  Eigen::VectorXd z(m);
  long count = 0;
  for (int i = 0; i < n_sim; ++i) {
    for (int k = 0; k < m; ++k) z[k] = rng.normal();
    if (is_feasible(constraint, mean + factor * z)) ++count;
  }
  return double(count) / double(n_sim);
}

void export_csv(const ConstrainedSampleSet& samples,
                const std::filesystem::path& path) {
  CsvTable table;
  const int m = static_cast<int>(samples.samples.cols());
  table.columns.reserve(m);
  for (int j = 0; j < m; ++j) table.columns.push_back("c" + std::to_string(j));
  table.rows.reserve(samples.samples.rows());
  for (int r = 0; r < samples.samples.rows(); ++r) {
    std::vector<double> row(m);
    for (int j = 0; j < m; ++j) row[j] = samples.samples(r, j);
    table.rows.push_back(std::move(row));
  }
  write_csv(path, table);
}

}  // namespace cgp
