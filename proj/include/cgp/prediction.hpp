#pragma once

#include <filesystem>
#include <span>
#include <utility>
#include <vector>

#include "cgp/constraints.hpp"
#include "cgp/gp.hpp"
#include "cgp/sampler.hpp"

namespace cgp {

struct PredictionResult {
  double x0 = 0.0;
  double mean_unconstrained = 0.0;
  double var_unconstrained = 0.0;
  double mean_constrained = 0.0;
  double var_constrained = 0.0;
  int mc_draws = 0;
  double mc_standard_error = 0.0;  // of mean_constrained, batch means
};

// Kriging mean and variance at one target.
std::pair<double, double> predict(const KernelSpec& spec,
                                  const ObservationSet& obs, double x0);

// Constrained prediction: sample the knot posterior under the constraint,
// evaluate the piecewise-affine draws at each target, report Monte-Carlo
// mean/variance. One sample set serves all targets.
std::vector<PredictionResult> predict_constrained_batch(
    const KernelSpec& spec, const ObservationSet& obs, const KnotModel& knots,
    const ConstraintSpec& constraint, std::span<const double> targets,
    int n_draws, const SamplerConfig& config);

PredictionResult predict_constrained(const KernelSpec& spec,
                                     const ObservationSet& obs,
                                     const KnotModel& knots,
                                     const ConstraintSpec& constraint,
                                     double x0, int n_draws,
                                     const SamplerConfig& config);

void export_csv(const std::vector<PredictionResult>& predictions,
                const std::filesystem::path& path);

}  // namespace cgp
