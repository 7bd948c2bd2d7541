#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>

#include "cgp/constraints.hpp"
#include "cgp/rng.hpp"

namespace cgp {

struct RejectionConfig {
  long max_tries = 1000000;  // proposals before giving up
};

struct GibbsConfig {
  int burn_in = 500;
  int thinning = 5;
  int chain_count = 1;
};

struct SamplerConfig {
  enum class Method { Rejection, Gibbs };
  Method method = Method::Gibbs;
  RejectionConfig rejection;
  GibbsConfig gibbs;
  std::uint64_t seed = 0;
};

struct ConstrainedSampleSet {
  Eigen::MatrixXd samples;  // n_draws x dimension, every row feasible
  double acceptance_rate = 1.0;        // rejection only
  double effective_sample_estimate = 0.0;  // Gibbs only, min over coordinates
  std::uint64_t seed_used = 0;
};

// Draw from N(mu, sd^2) truncated to [lo, hi]; inverse-CDF through erfc so
// far tails stay finite, with a rejection fallback beyond erfc range.
double truncated_normal(Rng& rng, double mu, double sd, double lo, double hi);

// Accept-reject from the unconstrained Gaussian. Throws SamplerError when
// max_tries proposals cannot fill the request.
ConstrainedSampleSet rejection_sample(const Eigen::VectorXd& mean,
                                      const Eigen::MatrixXd& covariance,
                                      const ConstraintSpec& constraint,
                                      int n_draws, const SamplerConfig& config);

// Coordinate-wise Gibbs on the constrained Gaussian. Burn-in sweeps are
// discarded, then every thinning-th sweep is kept; chains split the request.
ConstrainedSampleSet gibbs_sample(const Eigen::VectorXd& mean,
                                  const Eigen::MatrixXd& covariance,
                                  const ConstraintSpec& constraint, int n_draws,
                                  const SamplerConfig& config);

ConstrainedSampleSet constrained_sample(const Eigen::VectorXd& mean,
                                        const Eigen::MatrixXd& covariance,
                                        const ConstraintSpec& constraint,
                                        int n_draws, const SamplerConfig& config);

// Monte-Carlo P(N(mean, covariance) feasible) from n_sim unconstrained draws.
double constraint_probability(const Eigen::VectorXd& mean,
                              const Eigen::MatrixXd& covariance,
                              const ConstraintSpec& constraint, int n_sim,
                              std::uint64_t seed);

// Square factor F with F F^T = covariance via symmetric eigendecomposition;
// negative eigenvalues are clamped to zero, so semi-definite inputs work.
Eigen::MatrixXd psd_factor(const Eigen::MatrixXd& covariance);

void export_csv(const ConstrainedSampleSet& samples,
                const std::filesystem::path& path);

}  // namespace cgp
