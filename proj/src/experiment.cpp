#include "cgp/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <boost/math/special_functions/erf.hpp>
#include <chrono>
#include <cmath>
#include <fstream>
#include <functional>
#include <json.hpp>
#include <mutex>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "cgp/errors.hpp"
#include "cgp/estimators.hpp"
#include "cgp/gp.hpp"
#include "cgp/io.hpp"
#include "cgp/prediction.hpp"
#include "cgp/rng.hpp"
#include "cgp/sampler.hpp"
#include "cgp/svg.hpp"

namespace cgp {

namespace {

constexpr std::uint64_t kTagTrajectory = 0x7261;
constexpr std::uint64_t kTagReplicate = 0x5eed;
constexpr std::uint64_t kTagAnShared = 0xa11c;
constexpr std::uint64_t kTagPrediction = 0x9ed1;

const double kNaN = std::numeric_limits<double>::quiet_NaN();

double normal_cdf(double x) {
  return 0.5 * boost::math::erfc(-x / 1.4142135623730951);
}

double sample_sd(std::span<const double> values) {
  const size_t n = values.size();
  if (n < 2) return kNaN;
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= n;
  double var = 0.0;
  for (double v : values) var += (v - mean) * (v - mean);
  return std::sqrt(var / (n - 1));
}

void parallel_for(int count, int threads, const std::function<void(int)>& fn) {
  if (threads <= 1) {
    for (int r = 0; r < count; ++r) fn(r);
    return;
  }
  std::atomic<int> next{0};
  auto worker = [&] {
    for (int r = next.fetch_add(1); r < count; r = next.fetch_add(1)) fn(r);
  };
  std::vector<std::thread> pool;
  const int used = std::min(threads, count);
  pool.reserve(used);
  for (int t = 0; t < used; ++t) pool.emplace_back(worker);
  for (auto& th : pool) th.join();
}

EstimatorSummary summarize(const std::string& name,
                           std::span<const double> samples, double limit_sd) {
  EstimatorSummary summary;
  summary.name = name;
  summary.limit_sd = limit_sd;
  summary.median = median(samples);
  summary.sd = sample_sd(samples);
  summary.ks = std::isfinite(limit_sd)
                   ? ks_distance_to_normal(samples, limit_sd)
                   : kNaN;
  try {
    summary.curve = kde(samples);
  } catch (const std::invalid_argument&) {
    summary.degenerate = true;
  }
  return summary;
}

std::vector<double> column_values(const ExperimentOutput& output,
                                  const std::string& name) {
  int idx = -1;
  for (size_t i = 0; i < output.columns.size(); ++i)
    if (output.columns[i] == name) idx = static_cast<int>(i);
  std::vector<double> values;
  values.reserve(output.rows.size());
  for (const auto& row : output.rows)
    if (idx >= 0 && std::isfinite(row[idx])) values.push_back(row[idx]);
  return values;
}

struct Trajectories {
  Eigen::MatrixXd at_design;  // replicates x n
};

// Equispaced knots with the nearest knot snapped onto each design point, so
// observations sit exactly on the interpolant's vertex set. Off-vertex
// designs read a smoothed-out path, which biases the variance quadratic form
// low; snapping removes that while keeping the knot count.
KnotModel design_aligned_knots(int m, const std::vector<double>& design) {
  std::vector<double> knots(m);
  for (int j = 0; j < m; ++j) knots[j] = double(j) / (m - 1);
  if (int(design.size()) <= m)
    for (double x : design) {
      int j = int(std::lround(x * (m - 1)));
      j = std::min(std::max(j, 0), m - 1);
      knots[j] = x;
    }
  return KnotModel(knots);
}

// All constrained scenarios share one Gibbs chain over knot values; rows are
// thinned states mapped through the piecewise-affine interpolant.
Trajectories constrained_trajectories(const ExperimentConfig& config,
                                      const KnotModel& knots,
                                      const ConstraintSpec& constraint,
                                      const std::vector<double>& design) {
  const CovarianceMatrix prior =
      covariance_matrix(config.kernel.without_nugget(), knots.knots());
  SamplerConfig sampler;
  sampler.method = SamplerConfig::Method::Gibbs;
  sampler.gibbs.burn_in = config.burn_in;
  sampler.gibbs.thinning = config.thinning;
  sampler.seed = Rng::derive(config.seed, kTagTrajectory, 0);
  const ConstrainedSampleSet set =
      gibbs_sample(Eigen::VectorXd::Zero(knots.size()), prior.entries,
                   constraint, config.replicates, sampler);
  const Eigen::MatrixXd interp = interpolation_matrix(knots, design);
  Trajectories traj;
  traj.at_design = set.samples * interp.transpose();
  return traj;
}

ConstraintSpec scenario_constraint(const ExperimentConfig& config,
                                   const KnotModel& knots) {
  if (config.constraint == ConstraintKind::Bounds)
    return build_constraints(ConstraintKind::Bounds, knots, config.lower,
                             config.upper);
  return build_constraints(config.constraint, knots);
}

void append_surface(ExperimentOutput& output, const EstimationResult& result) {
  output.surface_columns = {"sigma2", "rho",       "delta2",   "log_lik",
                            "an",     "bn",        "objective", "excluded"};
  output.surface_rows.reserve(result.surface.size());
  for (const GridPointEval& point : result.surface)
    output.surface_rows.push_back({point.sigma2, point.rho, point.delta2,
                                   point.log_lik, point.an, point.bn,
                                   point.objective, point.excluded ? 1.0 : 0.0});
}

void check_failures(const ExperimentConfig& config, ExperimentOutput& output) {
  if (output.failures * 5 > config.replicates)
    throw ExperimentError("more than 20% of replicates failed");
}

void run_variance(const ExperimentConfig& config, ExperimentOutput& output) {
  const double sigma2_0 = config.kernel.sigma2;
  const double rho_0 = config.kernel.rho;
  const double root_n = std::sqrt(double(config.n));

  const std::vector<double> design = equispaced(config.n);
  const KnotModel knots = design_aligned_knots(config.m, design);
  const ConstraintSpec constraint = scenario_constraint(config, knots);
  const Trajectories traj =
      constrained_trajectories(config, knots, constraint, design);

  const EstimationGrid grid = EstimationGrid::variance_grid(
      sigma2_0, config.halfwidth_sds * std::sqrt(2.0 / config.n),
      config.sigma2_grid, rho_0);
  const MonteCarloColumn an_shared = an_column(
      config.kernel, rho_0, grid.sigma2_values, knots, constraint,
      config.n_sim_an, Rng::derive(config.seed, kTagAnShared, 0));

  output.columns = {"mle", "cmle", "mle_std", "cmle_std"};
  output.rows.assign(config.replicates, std::vector<double>(4, kNaN));

  std::atomic<int> failures{0};
  std::optional<EstimationResult> first;
  std::mutex first_mutex;
  parallel_for(config.replicates, config.threads, [&](int r) {
    try {
      std::vector<double> y(config.n);
      for (int i = 0; i < config.n; ++i) y[i] = traj.at_design(r, i);
      const ObservationSet obs(design, y);
      const double mle = mle_variance(obs, config.kernel.with_rho(rho_0));
      McConfig mc;
      mc.n_sim_an = config.n_sim_an;
      mc.n_t = config.n_t;
      mc.seed = output.replicate_seeds[r];
      const EstimationResult cmle =
          cmle_fixed_rho(obs, config.kernel, rho_0, grid.sigma2_values,
                         constraint, knots, mc, &an_shared);
      output.rows[r] = {mle, cmle.sigma2_hat, root_n * (mle - sigma2_0),
                        root_n * (cmle.sigma2_hat - sigma2_0)};
      if (r == 0) {
        std::lock_guard<std::mutex> lock(first_mutex);
        first = cmle;
      }
    } catch (const std::exception&) {
      ++failures;
    }
  });
  output.failures = failures;
  check_failures(config, output);

  output.limit_sd = std::sqrt(2.0) * sigma2_0;
  output.summaries.push_back(
      summarize("mle_std", column_values(output, "mle_std"), output.limit_sd));
  output.summaries.push_back(summarize(
      "cmle_std", column_values(output, "cmle_std"), output.limit_sd));
  if (first) append_surface(output, *first);
}

void run_joint(const ExperimentConfig& config, ExperimentOutput& output) {
  const double micro_0 = microergodic(config.kernel);
  const double exponent = config.kernel.microergodic_exponent();
  const double root_n = std::sqrt(double(config.n));

  const std::vector<double> design = equispaced(config.n);
  const KnotModel knots = design_aligned_knots(config.m, design);
  const ConstraintSpec constraint = scenario_constraint(config, knots);
  const Trajectories traj =
      constrained_trajectories(config, knots, constraint, design);

  const EstimationGrid grid = EstimationGrid::joint_grid(
      micro_0, config.halfwidth_sds * std::sqrt(2.0 / config.n),
      config.sigma2_grid, config.rho_min, config.rho_max, config.rho_grid,
      exponent);

  // A_n never sees the data, so one column per rho serves every replicate.
  std::vector<MonteCarloColumn> an_table;
  an_table.reserve(grid.rho_values.size());
  for (int i = 0; i < grid.rho_values.size(); ++i) {
    Eigen::VectorXd sigma2s(grid.sigma2_values.size());
    for (int j = 0; j < grid.sigma2_values.size(); ++j)
      sigma2s[j] = grid.sigma2_at(i, j);
    an_table.push_back(an_column(config.kernel, grid.rho_values[i], sigma2s,
                                 knots, constraint, config.n_sim_an,
                                 Rng::derive(config.seed, kTagAnShared, i)));
  }

  ThetaBox box;
  box.rho_lo = config.rho_min;
  box.rho_hi = config.rho_max;

  output.columns = {"micro_mle", "micro_cmle", "micro_mle_std",
                    "micro_cmle_std"};
  output.rows.assign(config.replicates, std::vector<double>(4, kNaN));

  std::atomic<int> failures{0};
  std::optional<EstimationResult> first;
  std::mutex first_mutex;
  parallel_for(config.replicates, config.threads, [&](int r) {
    try {
      std::vector<double> y(config.n);
      for (int i = 0; i < config.n; ++i) y[i] = traj.at_design(r, i);
      const ObservationSet obs(design, y);
      const EstimationResult mle =
          mle_profile(obs, config.kernel, grid.rho_values, box);
      McConfig mc;
      mc.n_sim_an = config.n_sim_an;
      mc.n_t = config.n_t;
      mc.seed = output.replicate_seeds[r];
      const EstimationResult cmle =
          cmle_joint(obs, config.kernel, grid, constraint, knots, mc, &an_table);
      output.rows[r] = {mle.microergodic_hat, cmle.microergodic_hat,
                        root_n * (mle.microergodic_hat - micro_0),
                        root_n * (cmle.microergodic_hat - micro_0)};
      if (r == 0) {
        std::lock_guard<std::mutex> lock(first_mutex);
        first = cmle;
      }
    } catch (const std::exception&) {
      ++failures;
    }
  });
  output.failures = failures;
  check_failures(config, output);

  output.limit_sd = std::sqrt(2.0) * micro_0;
  output.summaries.push_back(summarize(
      "micro_mle_std", column_values(output, "micro_mle_std"), output.limit_sd));
  output.summaries.push_back(summarize("micro_cmle_std",
                                       column_values(output, "micro_cmle_std"),
                                       output.limit_sd));
  if (first) append_surface(output, *first);
}

void run_noisy(const ExperimentConfig& config, ExperimentOutput& output) {
  const double sigma2_0 = config.kernel.sigma2;
  const double rho_0 = config.kernel.rho;
  const double delta2_0 = config.delta2_true;
  const double micro_0 = sigma2_0 / rho_0;
  const double root_n = std::sqrt(double(config.n));
  const double quarter_n = std::pow(double(config.n), 0.25);

  EstimationGrid grid;
  grid.sigma2_values = EstimationGrid::linspace(
      config.noisy_sigma2_min, config.noisy_sigma2_max, config.noisy_sigma2_count);
  grid.rho_values = EstimationGrid::linspace(
      config.noisy_rho_min, config.noisy_rho_max, config.noisy_rho_count);
  grid.validate();
  const Eigen::VectorXd delta2s = EstimationGrid::linspace(
      config.delta2_min, config.delta2_max, config.delta2_count);

  KernelSpec sim_spec = config.kernel;
  sim_spec.nugget = delta2_0;
  const std::vector<double> design = equispaced(config.n);

  output.columns = {"sigma2", "rho",        "delta2",
                    "micro",  "delta2_std", "micro_q"};
  output.rows.assign(config.replicates, std::vector<double>(6, kNaN));

  std::atomic<int> failures{0};
  std::optional<EstimationResult> first;
  std::mutex first_mutex;
  parallel_for(config.replicates, config.threads, [&](int r) {
    try {
      const std::vector<double> y = simulate_gp(
          sim_spec, design, Rng::derive(config.seed, kTagTrajectory, r));
      const ObservationSet obs(design, y);
      const EstimationResult est =
          mle_noisy(obs, config.kernel, grid, delta2s);
      const double micro = est.microergodic_hat;
      output.rows[r] = {est.sigma2_hat,
                        est.rho_hat,
                        *est.delta2_hat,
                        micro,
                        root_n * (*est.delta2_hat - delta2_0),
                        quarter_n * (micro - micro_0)};
      if (r == 0) {
        std::lock_guard<std::mutex> lock(first_mutex);
        first = est;
      }
    } catch (const std::exception&) {
      ++failures;
    }
  });
  output.failures = failures;
  check_failures(config, output);

  output.limit_sd = std::sqrt(2.0) * delta2_0;
  output.summaries.push_back(summarize(
      "delta2_std", column_values(output, "delta2_std"), output.limit_sd));
  const double micro_limit_sd = std::sqrt(
      4.0 * std::sqrt(2.0) * std::sqrt(delta2_0) * std::pow(micro_0, 1.5));
  output.summaries.push_back(
      summarize("micro_q", column_values(output, "micro_q"), micro_limit_sd));
  if (first) append_surface(output, *first);
}

void run_prediction(const ExperimentConfig& config, ExperimentOutput& output) {
  const std::vector<double> design = equispaced(config.n);
  const KnotModel knots = design_aligned_knots(config.m, design);
  const ConstraintSpec constraint = scenario_constraint(config, knots);
  const Trajectories traj =
      constrained_trajectories(config, knots, constraint, design);

  const int n_targets = static_cast<int>(config.targets.size());
  output.columns.clear();
  for (double x0 : config.targets) output.columns.push_back("ratio_" + format_double(x0));
  for (double x0 : config.targets) output.columns.push_back("yc_" + format_double(x0));
  for (double x0 : config.targets) output.columns.push_back("inband_" + format_double(x0));
  output.rows.assign(config.replicates,
                     std::vector<double>(3 * n_targets, kNaN));

  std::atomic<int> failures{0};
  std::mutex first_mutex;
  bool first_written = false;
  parallel_for(config.replicates, config.threads, [&](int r) {
    try {
      std::vector<double> y(config.n);
      for (int i = 0; i < config.n; ++i) y[i] = traj.at_design(r, i);
      const ObservationSet obs(design, y);
      SamplerConfig sampler;
      sampler.method = SamplerConfig::Method::Gibbs;
      sampler.gibbs.burn_in = config.burn_in;
      sampler.gibbs.thinning = config.thinning;
      sampler.seed = Rng::derive(output.replicate_seeds[r], kTagPrediction, 0);
      const std::vector<PredictionResult> preds = predict_constrained_batch(
          config.kernel, obs, knots, constraint, config.targets,
          config.pred_draws, sampler);
      std::vector<double> row(3 * n_targets, kNaN);
      for (int t = 0; t < n_targets; ++t) {
        const PredictionResult& p = preds[t];
        const double sd_unc = std::sqrt(std::max(p.var_unconstrained, 0.0));
        row[t] = sd_unc > 0.0
                     ? std::abs(p.mean_unconstrained - p.mean_constrained) / sd_unc
                     : 0.0;
        row[n_targets + t] = p.mean_constrained;
        double inband = 1.0;
        if (config.constraint == ConstraintKind::Bounds)
          inband = (p.mean_constrained >= config.lower &&
                    p.mean_constrained <= config.upper)
                       ? 1.0
                       : 0.0;
        row[2 * n_targets + t] = inband;
      }
      output.rows[r] = std::move(row);
      if (r == 0) {
        std::lock_guard<std::mutex> lock(first_mutex);
        if (!first_written) {
          first_written = true;
          output.surface_columns = {"x0",
                                    "mean_unconstrained",
                                    "var_unconstrained",
                                    "mean_constrained",
                                    "var_constrained",
                                    "mc_standard_error"};
          for (const PredictionResult& p : preds)
            output.surface_rows.push_back(
                {p.x0, p.mean_unconstrained, p.var_unconstrained,
                 p.mean_constrained, p.var_constrained, p.mc_standard_error});
        }
      }
    } catch (const std::exception&) {
      ++failures;
    }
  });
  output.failures = failures;
  check_failures(config, output);

  output.limit_sd = kNaN;
  for (int t = 0; t < n_targets; ++t)
    output.summaries.push_back(summarize(
        output.columns[t], column_values(output, output.columns[t]), kNaN));
}

}  // namespace

std::string to_string(Scenario scenario) {
  switch (scenario) {
    case Scenario::VarianceKnownRho: return "variance";
    case Scenario::JointMicroergodic: return "joint";
    case Scenario::NoisyExponential: return "noisy";
    case Scenario::PredictionComparison: return "prediction";
  }
  return "unknown";
}

Scenario scenario_from_string(const std::string& name) {
  if (name == "variance") return Scenario::VarianceKnownRho;
  if (name == "joint") return Scenario::JointMicroergodic;
  if (name == "noisy") return Scenario::NoisyExponential;
  if (name == "prediction") return Scenario::PredictionComparison;
  throw std::invalid_argument("unknown scenario: " + name);
}

double ks_distance_to_normal(std::span<const double> samples, double sd) {
  if (samples.empty()) throw std::invalid_argument("ks of empty sample");
  if (!(sd > 0.0)) throw std::invalid_argument("limit sd must be positive");
  std::vector<double> sorted(samples.begin(), samples.end());
  std::sort(sorted.begin(), sorted.end());
  const double n = double(sorted.size());
  double dist = 0.0;
  for (size_t i = 0; i < sorted.size(); ++i) {
    const double f = normal_cdf(sorted[i] / sd);
    dist = std::max(dist, std::abs((double(i) + 1.0) / n - f));
    dist = std::max(dist, std::abs(f - double(i) / n));
  }
  return dist;
}

ExperimentConfig ExperimentConfig::from_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open config: " + path.string());
  ExperimentConfig config;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const auto strip = [](std::string text) {
      const auto begin = text.find_first_not_of(" \t\r");
      if (begin == std::string::npos) return std::string();
      const auto end = text.find_last_not_of(" \t\r");
      return text.substr(begin, end - begin + 1);
    };
    const std::string content = strip(line);
    if (content.empty()) continue;
    const auto eq = content.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("config line " + std::to_string(line_no) +
                                  " is not key = value");
    config.set(strip(content.substr(0, eq)), strip(content.substr(eq + 1)));
  }
  return config;
}

void ExperimentConfig::set(const std::string& key, const std::string& value) {
  const auto as_int = [&](int lo) {
    const double parsed = parse_double(value);
    const int v = static_cast<int>(parsed);
    if (double(v) != parsed || v < lo)
      throw std::invalid_argument("bad integer for " + key + ": " + value);
    return v;
  };
  const auto as_double = [&] { return parse_double(value); };

  if (key == "scenario") {
    scenario = scenario_from_string(value);
    // Scenario switch installs that scenario's default kernel; later keys
    // may still override it.
    if (scenario == Scenario::NoisyExponential)
      kernel = KernelSpec::exponential(1.0, 1.0);
    else
      kernel = KernelSpec::matern52(2.0, 0.2);
  } else if (key == "family") {
    kernel.family = kernel_family_from_string(value);
  } else if (key == "sigma2") {
    kernel.sigma2 = as_double();
  } else if (key == "rho") {
    kernel.rho = as_double();
  } else if (key == "nugget") {
    kernel.nugget = as_double();
  } else if (key == "nu") {
    kernel.nu = as_double();
  } else if (key == "s") {
    kernel.s = as_double();
  } else if (key == "mu") {
    kernel.mu = as_double();
  } else if (key == "constraint") {
    constraint = constraint_kind_from_string(value);
  } else if (key == "lower") {
    lower = as_double();
  } else if (key == "upper") {
    upper = as_double();
  } else if (key == "n") {
    n = as_int(2);
  } else if (key == "m") {
    m = as_int(2);
  } else if (key == "replicates") {
    replicates = as_int(1);
  } else if (key == "n_t") {
    n_t = as_int(1);
  } else if (key == "n_sim_an") {
    n_sim_an = as_int(1);
  } else if (key == "sigma2_grid") {
    sigma2_grid = as_int(1);
  } else if (key == "halfwidth_sds") {
    halfwidth_sds = as_double();
  } else if (key == "rho_grid") {
    rho_grid = as_int(1);
  } else if (key == "rho_min") {
    rho_min = as_double();
  } else if (key == "rho_max") {
    rho_max = as_double();
  } else if (key == "delta2_true") {
    delta2_true = as_double();
  } else if (key == "delta2_count") {
    delta2_count = as_int(1);
  } else if (key == "delta2_min") {
    delta2_min = as_double();
  } else if (key == "delta2_max") {
    delta2_max = as_double();
  } else if (key == "noisy_sigma2_count") {
    noisy_sigma2_count = as_int(1);
  } else if (key == "noisy_sigma2_min") {
    noisy_sigma2_min = as_double();
  } else if (key == "noisy_sigma2_max") {
    noisy_sigma2_max = as_double();
  } else if (key == "noisy_rho_count") {
    noisy_rho_count = as_int(1);
  } else if (key == "noisy_rho_min") {
    noisy_rho_min = as_double();
  } else if (key == "noisy_rho_max") {
    noisy_rho_max = as_double();
  } else if (key == "targets") {
    targets.clear();
    std::stringstream stream(value);
    std::string cell;
    while (std::getline(stream, cell, ',')) targets.push_back(parse_double(cell));
    if (targets.empty())
      throw std::invalid_argument("targets list is empty");
  } else if (key == "pred_draws") {
    pred_draws = as_int(2);
  } else if (key == "burn_in") {
    burn_in = as_int(0);
  } else if (key == "thinning") {
    thinning = as_int(1);
  } else if (key == "seed") {
    seed = std::stoull(value);
  } else if (key == "threads") {
    threads = as_int(1);
  } else if (key == "out") {
    out_dir = value;
  } else {
    throw std::invalid_argument("unknown config key: " + key);
  }
}

std::vector<std::pair<std::string, std::string>> ExperimentConfig::echo() const {
  std::vector<std::pair<std::string, std::string>> entries;
  entries.emplace_back("scenario", to_string(scenario));
  entries.emplace_back("family", to_string(kernel.family));
  entries.emplace_back("sigma2", format_double(kernel.sigma2));
  entries.emplace_back("rho", format_double(kernel.rho));
  entries.emplace_back("nugget", format_double(kernel.nugget));
  entries.emplace_back("nu", format_double(kernel.nu));
  entries.emplace_back("s", format_double(kernel.s));
  entries.emplace_back("mu", format_double(kernel.mu));
  entries.emplace_back("constraint", to_string(constraint));
  entries.emplace_back("lower", format_double(lower));
  entries.emplace_back("upper", format_double(upper));
  entries.emplace_back("n", std::to_string(n));
  entries.emplace_back("m", std::to_string(m));
  entries.emplace_back("replicates", std::to_string(replicates));
  entries.emplace_back("n_t", std::to_string(n_t));
  entries.emplace_back("n_sim_an", std::to_string(n_sim_an));
  entries.emplace_back("sigma2_grid", std::to_string(sigma2_grid));
  entries.emplace_back("halfwidth_sds", format_double(halfwidth_sds));
  entries.emplace_back("rho_grid", std::to_string(rho_grid));
  entries.emplace_back("rho_min", format_double(rho_min));
  entries.emplace_back("rho_max", format_double(rho_max));
  entries.emplace_back("delta2_true", format_double(delta2_true));
  entries.emplace_back("delta2_count", std::to_string(delta2_count));
  entries.emplace_back("delta2_min", format_double(delta2_min));
  entries.emplace_back("delta2_max", format_double(delta2_max));
  entries.emplace_back("noisy_sigma2_count", std::to_string(noisy_sigma2_count));
  entries.emplace_back("noisy_sigma2_min", format_double(noisy_sigma2_min));
  entries.emplace_back("noisy_sigma2_max", format_double(noisy_sigma2_max));
  entries.emplace_back("noisy_rho_count", std::to_string(noisy_rho_count));
  entries.emplace_back("noisy_rho_min", format_double(noisy_rho_min));
  entries.emplace_back("noisy_rho_max", format_double(noisy_rho_max));
  std::string target_list;
  for (size_t i = 0; i < targets.size(); ++i) {
    if (i) target_list += ',';
    target_list += format_double(targets[i]);
  }
  entries.emplace_back("targets", target_list);
  entries.emplace_back("pred_draws", std::to_string(pred_draws));
  entries.emplace_back("burn_in", std::to_string(burn_in));
  entries.emplace_back("thinning", std::to_string(thinning));
  entries.emplace_back("seed", std::to_string(seed));
  entries.emplace_back("threads", std::to_string(threads));
  return entries;
}

void ExperimentConfig::validate() const {
  kernel.validate();
  if (n < 2) throw std::invalid_argument("n must be >= 2");
  if (m < 2) throw std::invalid_argument("m must be >= 2");
  if (replicates < 1) throw std::invalid_argument("replicates must be >= 1");
  if (burn_in < 0 || thinning < 1 || threads < 1)
    throw std::invalid_argument("bad sampler/thread configuration");
  if (kernel.nugget != 0.0)
    throw std::invalid_argument(
        "experiment kernels are noiseless; the noisy scenario draws its "
        "noise level from delta2_true");
  if (scenario == Scenario::NoisyExponential) {
    if (kernel.family != KernelFamily::Exponential)
      throw std::invalid_argument("noisy scenario needs the exponential kernel");
    if (!(delta2_true > 0.0))
      throw std::invalid_argument("delta2_true must be positive");
  }
  if (constraint == ConstraintKind::Bounds && !(lower < upper))
    throw std::invalid_argument("bounds require lower < upper");
  if (scenario == Scenario::PredictionComparison) {
    if (targets.empty()) throw std::invalid_argument("no prediction targets");
    for (double x0 : targets)
      if (!(x0 >= 0.0 && x0 <= 1.0))
        throw std::invalid_argument("targets must lie in [0,1]");
    if (pred_draws < 2) throw std::invalid_argument("pred_draws must be >= 2");
  }
}

ExperimentOutput run_experiment(const ExperimentConfig& config) {
  config.validate();
  const auto start = std::chrono::steady_clock::now();

  ExperimentOutput output;
  output.master_seed = config.seed;
  output.replicate_seeds.resize(config.replicates);
  for (int r = 0; r < config.replicates; ++r)
    output.replicate_seeds[r] = Rng::derive(config.seed, kTagReplicate, r);

  switch (config.scenario) {
    case Scenario::VarianceKnownRho: run_variance(config, output); break;
    case Scenario::JointMicroergodic: run_joint(config, output); break;
    case Scenario::NoisyExponential: run_noisy(config, output); break;
    case Scenario::PredictionComparison: run_prediction(config, output); break;
  }

  output.runtime_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
          .count();
  return output;
}

void write_density_figure(const std::filesystem::path& path,
                          const std::vector<EstimatorSummary>& summaries,
                          double limit_sd, const std::string& title) {
  static const char* kColors[] = {"#2ca02c", "#1f77b4", "#9467bd", "#8c564b",
                                  "#e377c2", "#7f7f7f"};
  static const char* kDashes[] = {"7,4", "2,3", "5,2,2,2", "9,3", "4,4", "1,3"};

  std::vector<SvgSeries> series;
  std::vector<SvgMarker> markers;

  if (std::isfinite(limit_sd) && limit_sd > 0.0) {
    double lo = -4.0 * limit_sd, hi = 4.0 * limit_sd;
    for (const EstimatorSummary& s : summaries)
      if (!s.degenerate && !s.curve.grid.empty()) {
        lo = std::min(lo, s.curve.grid.front());
        hi = std::max(hi, s.curve.grid.back());
      }
    SvgSeries limit;
    limit.color = "#d62728";
    limit.label = "limit";
    const int points = 512;
    limit.x.resize(points);
    limit.y.resize(points);
    for (int k = 0; k < points; ++k) {
      const double x = lo + (hi - lo) * k / (points - 1);
      limit.x[k] = x;
      limit.y[k] = std::exp(-0.5 * (x / limit_sd) * (x / limit_sd)) /
                   (limit_sd * 2.5066282746310002);
    }
    series.push_back(std::move(limit));
    markers.push_back({0.0, "#d62728", "limit center"});
  }

  int idx = 0;
  for (const EstimatorSummary& s : summaries) {
    const char* color = kColors[idx % 6];
    const char* dash = kDashes[idx % 6];
    ++idx;
    if (!s.degenerate && !s.curve.grid.empty()) {
      SvgSeries line;
      line.x = s.curve.grid;
      line.y = s.curve.density;
      line.color = color;
      line.dash = dash;
      line.label = s.name;
      series.push_back(std::move(line));
    }
    markers.push_back({s.median, color, s.name + " median"});
  }

  if (series.empty()) {
    SvgSeries flat;
    flat.x = {0.0, 1.0};
    flat.y = {0.0, 0.0};
    flat.label = "degenerate";
    series.push_back(std::move(flat));
  }
  write_line_chart(path, series, markers, title, "standardized error",
                   "density");
}

void write_outputs(const ExperimentConfig& config,
                   const ExperimentOutput& output) {
  if (config.out_dir.empty())
    throw std::invalid_argument("experiment output directory is not set");
  std::filesystem::create_directories(config.out_dir);

  CsvTable samples;
  samples.columns.push_back("replicate");
  for (const std::string& name : output.columns) samples.columns.push_back(name);
  samples.rows.reserve(output.rows.size());
  for (size_t r = 0; r < output.rows.size(); ++r) {
    std::vector<double> row;
    row.reserve(output.rows[r].size() + 1);
    row.push_back(double(r));
    for (double v : output.rows[r]) row.push_back(v);
    samples.rows.push_back(std::move(row));
  }
  write_csv(config.out_dir / "samples.csv", samples);

  CsvTable surface;
  surface.columns = output.surface_columns.empty()
                        ? std::vector<std::string>{"empty"}
                        : output.surface_columns;
  surface.rows = output.surface_rows;
  write_csv(config.out_dir / "surface.csv", surface);

  write_density_figure(config.out_dir / "figure.svg", output.summaries,
                       output.limit_sd,
                       to_string(config.scenario) + " estimator densities");

  nlohmann::ordered_json manifest;
  manifest["artifact"] = "cgp";
  manifest["format_version"] = 1;
  manifest["scenario"] = to_string(config.scenario);
  nlohmann::ordered_json config_json;
  for (const auto& [key, value] : config.echo()) config_json[key] = value;
  manifest["config"] = config_json;
  manifest["master_seed"] = output.master_seed;
  manifest["replicate_seeds"] = output.replicate_seeds;
  manifest["failures"] = output.failures;
  manifest["limit_sd"] = output.limit_sd;
  nlohmann::ordered_json summary_json = nlohmann::ordered_json::array();
  for (const EstimatorSummary& s : output.summaries) {
    nlohmann::ordered_json item;
    item["name"] = s.name;
    item["median"] = s.median;
    item["sd"] = s.sd;
    item["ks"] = s.ks;
    item["limit_sd"] = s.limit_sd;
    item["bandwidth"] = s.curve.bandwidth;
    item["degenerate"] = s.degenerate;
    summary_json.push_back(item);
  }
  manifest["summaries"] = summary_json;
  nlohmann::ordered_json choices;
  choices["kde_bandwidth"] = "silverman";
  choices["failed_replicates"] =
      "recorded as nan rows, excluded from summaries, abort above 20%";
  choices["trajectories"] = "single gibbs chain, burn-in then thinned";
  manifest["choices"] = choices;
  manifest["runtime_seconds"] = output.runtime_seconds;

  std::ofstream out(config.out_dir / "manifest.json");
  if (!out)
    throw std::invalid_argument("cannot write manifest.json in " +
                                config.out_dir.string());
  out << manifest.dump(2) << '\n';
}

}  // namespace cgp
