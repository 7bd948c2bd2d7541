#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "cgp/constraints.hpp"
#include "cgp/gp.hpp"
#include "cgp/kernels.hpp"

namespace cgp {

// Compact parameter box used to clamp closed-form maximisers.
struct ThetaBox {
  double sigma2_lo = 1e-8;
  double sigma2_hi = 1e8;
  double rho_lo = 1e-8;
  double rho_hi = 1e8;
};

// Rectangular search grid. When sigma2_scaled_by_rho is set the sigma2 axis
// holds microergodic values and the effective variance at (rho_i, col_j) is
// rho_i^scale_exponent * sigma2_values[j], which keeps the explored
// microergodic range identical across rho.
struct EstimationGrid {
  Eigen::VectorXd sigma2_values;
  Eigen::VectorXd rho_values;
  bool sigma2_scaled_by_rho = false;
  double scale_exponent = 0.0;

  void validate() const;
  double sigma2_at(int rho_idx, int sigma2_idx) const;

  static Eigen::VectorXd linspace(double lo, double hi, int count);
  // Symmetric relative window around `center`, floored at 1e-3 * center when
  // the nominal lower endpoint is not positive.
  static Eigen::VectorXd centered_window(double center, double rel_halfwidth,
                                         int count);
  static EstimationGrid variance_grid(double center, double rel_halfwidth,
                                      int count, double rho);
  static EstimationGrid joint_grid(double micro_center, double rel_halfwidth,
                                   int n_sigma2, double rho_lo, double rho_hi,
                                   int n_rho, double exponent);
};

struct GridPointEval {
  double sigma2 = 0.0;
  double rho = 0.0;
  double delta2 = 0.0;
  double log_lik = 0.0;
  double an = 0.0;        // -log P(feasible), >= 0
  double bn = 0.0;        // log P(feasible | y), <= 0
  double objective = 0.0; // log_lik + an + bn
  bool excluded = false;  // zero Monte-Carlo mass or non-finite objective
};

struct EstimationResult {
  double sigma2_hat = std::numeric_limits<double>::quiet_NaN();
  double rho_hat = std::numeric_limits<double>::quiet_NaN();
  double microergodic_hat = std::numeric_limits<double>::quiet_NaN();
  std::optional<double> delta2_hat;
  std::vector<GridPointEval> surface;
  int an_draws = 0;
  int bn_draws = 0;
  std::uint64_t seed = 0;
  int ties = 0;
  int boundary_hits = 0;
  int excluded_points = 0;
  int skipped_points = 0;

  void surface_to_csv(const std::filesystem::path& path) const;
  void diagnostics_to_json(const std::filesystem::path& path) const;
};

// Index of the highest finite non-excluded objective; ties resolve to the
// smallest sigma2, then rho, then delta2. Throws EstimationError when every
// point is excluded.
int grid_argmax(std::span<const GridPointEval> surface);

// Monte-Carlo column of A_n or B_n values along a sigma2 grid at fixed rho.
// Infinities mark zero-probability estimates.
struct MonteCarloColumn {
  Eigen::VectorXd values;
  int draws = 0;
  std::uint64_t seed = 0;
};

struct McConfig {
  int n_sim_an = 500;
  int n_t = 500;
  std::uint64_t seed = 0;
};

// Closed-form variance maximiser y^T C^{-1} y / n at unit-variance
// correlation; `correlation.sigma2` is ignored.
double mle_variance(const ObservationSet& obs, const KernelSpec& correlation);

// Profile likelihood over a rho grid; the profiled variance is clamped to the
// box before the likelihood is scored.
EstimationResult mle_profile(const ObservationSet& obs, const KernelSpec& family,
                             const Eigen::VectorXd& rho_grid, const ThetaBox& box);

// -log P(Y_m feasible) and log P(Y_m feasible | y) at one parameter point.
double estimate_An(const KernelSpec& spec, const KnotModel& knots,
                   const ConstraintSpec& constraint, int n_sim,
                   std::uint64_t seed);
double estimate_Bn(const KernelSpec& spec, const ObservationSet& obs,
                   const KnotModel& knots, const ConstraintSpec& constraint,
                   int n_t, std::uint64_t seed);

// Shared-draw columns: one set of unit-variance draws serves the whole
// sigma2 grid, so neighbouring grid points see common random numbers.
MonteCarloColumn an_column(const KernelSpec& family, double rho,
                           const Eigen::VectorXd& sigma2_grid,
                           const KnotModel& knots,
                           const ConstraintSpec& constraint, int n_sim,
                           std::uint64_t seed);
MonteCarloColumn bn_column(const KernelSpec& family, double rho,
                           const ObservationSet& obs,
                           const Eigen::VectorXd& sigma2_grid,
                           const KnotModel& knots,
                           const ConstraintSpec& constraint, int n_t,
                           std::uint64_t seed);

// Constrained maximum likelihood over sigma2 at fixed rho. Passing a
// precomputed A_n column (same grid, same constraint) skips re-simulation.
EstimationResult cmle_fixed_rho(const ObservationSet& obs,
                                const KernelSpec& family, double rho,
                                const Eigen::VectorXd& sigma2_grid,
                                const ConstraintSpec& constraint,
                                const KnotModel& knots, const McConfig& mc,
                                const MonteCarloColumn* an_precomputed = nullptr);

// Unconstrained twin of cmle_fixed_rho: identical likelihood code path with
// zero A_n/B_n columns, so vacuous constraints reproduce it bit for bit.
EstimationResult mle_grid_fixed_rho(const ObservationSet& obs,
                                    const KernelSpec& family, double rho,
                                    const Eigen::VectorXd& sigma2_grid);

EstimationResult cmle_joint(const ObservationSet& obs, const KernelSpec& family,
                            const EstimationGrid& grid,
                            const ConstraintSpec& constraint,
                            const KnotModel& knots, const McConfig& mc,
                            const std::vector<MonteCarloColumn>* an_precomputed =
                                nullptr);

EstimationResult mle_grid_joint(const ObservationSet& obs,
                                const KernelSpec& family,
                                const EstimationGrid& grid);

// Exponential kernel plus iid noise: joint grid search over sigma2, rho and
// the noise variance. One symmetric eigendecomposition per rho makes each
// (sigma2, delta2) cell O(n).
EstimationResult mle_noisy(const ObservationSet& obs, const KernelSpec& family,
                           const EstimationGrid& grid,
                           const Eigen::VectorXd& delta2_values);

}  // namespace cgp
