#pragma once

#include <cstdint>
#include <filesystem>
#include <limits>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "cgp/constraints.hpp"
#include "cgp/kde.hpp"
#include "cgp/kernels.hpp"

namespace cgp {

enum class Scenario {
  VarianceKnownRho,    // variance estimation at known range
  JointMicroergodic,   // joint variance/range grid, microergodic readout
  NoisyExponential,    // exponential kernel plus iid noise
  PredictionComparison // constrained vs unconstrained kriging
};

std::string to_string(Scenario scenario);
Scenario scenario_from_string(const std::string& name);

struct ExperimentConfig {
  Scenario scenario = Scenario::VarianceKnownRho;
  KernelSpec kernel = KernelSpec::matern52(2.0, 0.2);
  ConstraintKind constraint = ConstraintKind::Bounds;
  double lower = -2.5;
  double upper = 2.5;

  int n = 20;           // design size
  int m = 150;          // knot count
  int replicates = 200;
  int n_t = 500;        // B_n draws
  int n_sim_an = 500;   // A_n draws
  int sigma2_grid = 1000;
  double halfwidth_sds = 4.0;  // relative window is halfwidth_sds * sqrt(2/n)
  int rho_grid = 40;
  double rho_min = 0.1;
  double rho_max = 0.3;

  // Noisy-kernel scenario: exponential kernel, box grids.
  double delta2_true = 0.25;
  int delta2_count = 61;
  double delta2_min = 0.05;
  double delta2_max = 0.8;
  int noisy_sigma2_count = 25;
  double noisy_sigma2_min = 0.4;
  double noisy_sigma2_max = 2.5;
  int noisy_rho_count = 21;
  double noisy_rho_min = 0.4;
  double noisy_rho_max = 2.5;

  // Prediction scenario.
  std::vector<double> targets = {0.1, 0.3, 0.5, 0.7, 0.9};
  int pred_draws = 400;

  int burn_in = 500;
  int thinning = 5;
  std::uint64_t seed = 0;
  int threads = 1;
  std::filesystem::path out_dir;  // empty: keep everything in memory

  // `key = value` lines, '#' comments. `scenario` should come first: choosing
  // the noisy scenario resets the kernel to its exponential default, which
  // later keys may then override.
  static ExperimentConfig from_file(const std::filesystem::path& path);
  void set(const std::string& key, const std::string& value);
  std::vector<std::pair<std::string, std::string>> echo() const;
  void validate() const;
};

struct EstimatorSummary {
  std::string name;  // samples.csv column
  double median = 0.0;
  double sd = 0.0;
  double ks = 0.0;      // sup distance to N(0, limit_sd^2); NaN when unused
  double limit_sd = 1.0;
  KdeCurve curve;
  bool degenerate = false;  // too little spread for a density estimate
};

struct ExperimentOutput {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;  // one per replicate, NaN on failure
  std::vector<EstimatorSummary> summaries;
  std::vector<std::string> surface_columns;       // example-surface detail
  std::vector<std::vector<double>> surface_rows;  // from the first replicate
  double limit_sd = std::numeric_limits<double>::quiet_NaN();
  int failures = 0;
  double runtime_seconds = 0.0;
  std::uint64_t master_seed = 0;
  std::vector<std::uint64_t> replicate_seeds;
};

// Deterministic given config.seed; throws ExperimentError when more than 20%
// of replicates fail.
ExperimentOutput run_experiment(const ExperimentConfig& config);

// manifest.json, samples.csv, surface.csv and figure.svg under config.out_dir.
void write_outputs(const ExperimentConfig& config, const ExperimentOutput& output);

// Density figure: one curve per summary plus the limit normal when limit_sd
// is finite, with vertical median markers.
void write_density_figure(const std::filesystem::path& path,
                          const std::vector<EstimatorSummary>& summaries,
                          double limit_sd, const std::string& title);

// sup_x |F_empirical(x) - Phi(x / sd)|.
double ks_distance_to_normal(std::span<const double> samples, double sd);

}  // namespace cgp
