#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace cgp {

// Cholesky factorisation failed even after the diagonal jitter ladder.
class ConditioningError : public std::runtime_error {
 public:
  ConditioningError(const std::string& what, std::vector<double> ladder)
      : std::runtime_error(what), ladder_(std::move(ladder)) {}

  const std::vector<double>& jitter_ladder() const noexcept { return ladder_; }

 private:
  std::vector<double> ladder_;
};

// Sampler could not produce the requested feasible draws.
class SamplerError : public std::runtime_error {
 public:
  SamplerError(const std::string& what, double acceptance_rate)
      : std::runtime_error(what), rate_(acceptance_rate) {}

  double acceptance_rate() const noexcept { return rate_; }

 private:
  double rate_ = 0.0;
};

// Estimation produced no usable grid point (all excluded or failed).
class EstimationError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Experiment aborted (too many failed replicates, bad configuration state).
class ExperimentError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace cgp
