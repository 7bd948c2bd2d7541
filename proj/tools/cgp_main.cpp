// Command line front end: simulate, estimate, predict, experiment, report.
//
// Exit codes: 0 success, 1 usage error, 2 data/validation error,
// 3 numerical failure (conditioning, sampler, estimation, experiment).

#include <CLI11.hpp>
#include <Eigen/Dense>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "cgp/constraints.hpp"
#include "cgp/errors.hpp"
#include "cgp/estimators.hpp"
#include "cgp/experiment.hpp"
#include "cgp/gp.hpp"
#include "cgp/io.hpp"
#include "cgp/kde.hpp"
#include "cgp/kernels.hpp"
#include "cgp/prediction.hpp"
#include "cgp/rng.hpp"
#include "cgp/sampler.hpp"
#include "cgp/svg.hpp"

namespace {

struct KernelFlags {
  std::string family = "matern52";
  double sigma2 = 1.0;
  double rho = 0.2;
  double nu = 2.5;
  double s = 1.0;
  double mu = 2.0;
  double nugget = 0.0;
};

void add_kernel_flags(CLI::App* cmd, KernelFlags& flags) {
  cmd->add_option("--family", flags.family,
                  "matern52 | matern | wendland | exponential")
      ->capture_default_str();
  cmd->add_option("--sigma2", flags.sigma2, "variance")->capture_default_str();
  cmd->add_option("--rho", flags.rho, "correlation length")
      ->capture_default_str();
  cmd->add_option("--nu", flags.nu, "matern smoothness")->capture_default_str();
  cmd->add_option("--s", flags.s, "wendland smoothness")->capture_default_str();
  cmd->add_option("--mu", flags.mu, "wendland tail exponent")
      ->capture_default_str();
  cmd->add_option("--nugget", flags.nugget, "additive noise variance")
      ->capture_default_str();
}

cgp::KernelSpec make_kernel(const KernelFlags& flags) {
  cgp::KernelSpec spec;
  spec.family = cgp::kernel_family_from_string(flags.family);
  spec.sigma2 = flags.sigma2;
  spec.rho = flags.rho;
  spec.nu = flags.nu;
  spec.s = flags.s;
  spec.mu = flags.mu;
  spec.nugget = flags.nugget;
  spec.validate();
  return spec;
}

struct ConstraintFlags {
  std::string kind = "none";
  double lower = -std::numeric_limits<double>::infinity();
  double upper = std::numeric_limits<double>::infinity();
  int m = 150;
};

void add_constraint_flags(CLI::App* cmd, ConstraintFlags& flags) {
  cmd->add_option("--constraint", flags.kind,
                  "none | bounds | monotone | convex")
      ->capture_default_str();
  cmd->add_option("--lower", flags.lower, "lower bound (bounds constraint)");
  cmd->add_option("--upper", flags.upper, "upper bound (bounds constraint)");
  cmd->add_option("--m", flags.m, "knot count")->capture_default_str();
}

std::optional<cgp::ConstraintSpec> make_constraint(const ConstraintFlags& flags,
                                                   const cgp::KnotModel& knots) {
  if (flags.kind == "none") return std::nullopt;
  const cgp::ConstraintKind kind = cgp::constraint_kind_from_string(flags.kind);
  if (kind == cgp::ConstraintKind::Bounds)
    return cgp::build_constraints(kind, knots, flags.lower, flags.upper);
  return cgp::build_constraints(kind, knots);
}

std::vector<double> parse_list(const std::string& text) {
  std::vector<double> values;
  std::stringstream stream(text);
  std::string cell;
  while (std::getline(stream, cell, ',')) values.push_back(cgp::parse_double(cell));
  return values;
}

nlohmann::ordered_json result_json(const cgp::EstimationResult& result) {
  nlohmann::ordered_json out;
  out["sigma2_hat"] = result.sigma2_hat;
  out["rho_hat"] = result.rho_hat;
  if (result.delta2_hat) out["delta2_hat"] = *result.delta2_hat;
  out["microergodic_hat"] = result.microergodic_hat;
  out["grid_points"] = result.surface.size();
  out["excluded_points"] = result.excluded_points;
  out["skipped_points"] = result.skipped_points;
  out["ties"] = result.ties;
  out["boundary_hits"] = result.boundary_hits;
  out["an_draws"] = result.an_draws;
  out["bn_draws"] = result.bn_draws;
  out["seed"] = result.seed;
  return out;
}

int run_simulate(const KernelFlags& kernel_flags,
                 const ConstraintFlags& constraint_flags, int n,
                 int trajectories, std::uint64_t seed, int burn_in,
                 int thinning, const std::string& out_path) {
  const cgp::KernelSpec spec = make_kernel(kernel_flags);
  const std::vector<double> design = cgp::equispaced(n);

  cgp::CsvTable table;
  table.columns.push_back("x");
  if (trajectories == 1) {
    table.columns.push_back("y");
  } else {
    for (int t = 0; t < trajectories; ++t)
      table.columns.push_back("y" + std::to_string(t + 1));
  }
  table.rows.assign(n, std::vector<double>(1 + trajectories, 0.0));
  for (int i = 0; i < n; ++i) table.rows[i][0] = design[i];

  if (constraint_flags.kind == "none") {
    for (int t = 0; t < trajectories; ++t) {
      const std::vector<double> y =
          cgp::simulate_gp(spec, design, cgp::Rng::derive(seed, 0x51u, t));
      for (int i = 0; i < n; ++i) table.rows[i][1 + t] = y[i];
    }
  } else {
    const cgp::KnotModel knots = cgp::KnotModel::equispaced(constraint_flags.m);
    const auto constraint = make_constraint(constraint_flags, knots);
    const cgp::CovarianceMatrix prior =
        cgp::covariance_matrix(spec.without_nugget(), knots.knots());
    cgp::SamplerConfig sampler;
    sampler.method = cgp::SamplerConfig::Method::Gibbs;
    sampler.gibbs.burn_in = burn_in;
    sampler.gibbs.thinning = thinning;
    sampler.seed = seed;
    const cgp::ConstrainedSampleSet set =
        cgp::gibbs_sample(Eigen::VectorXd::Zero(knots.size()), prior.entries,
                          *constraint, trajectories, sampler);
    const Eigen::MatrixXd interp = cgp::interpolation_matrix(knots, design);
    const Eigen::MatrixXd at_design = set.samples * interp.transpose();
    for (int t = 0; t < trajectories; ++t)
      for (int i = 0; i < n; ++i) table.rows[i][1 + t] = at_design(t, i);
  }

  cgp::write_csv(out_path, table);
  std::cout << "wrote " << out_path << " (" << n << " points, " << trajectories
            << (trajectories == 1 ? " trajectory)" : " trajectories)")
            << std::endl;
  return 0;
}

int run_estimate(const std::string& data_path, const std::string& mode,
                 const KernelFlags& kernel_flags,
                 const ConstraintFlags& constraint_flags, double rho,
                 double sigma2_center, double halfwidth, int sigma2_count,
                 double rho_min, double rho_max, int rho_count,
                 double delta2_min, double delta2_max, int delta2_count,
                 int n_sim, int n_t, std::uint64_t seed,
                 const std::string& surface_path,
                 const std::string& diagnostics_path) {
  const cgp::ObservationSet obs = cgp::ObservationSet::from_csv(data_path);
  const cgp::KernelSpec family = make_kernel(kernel_flags);
  const int n = obs.size();

  const auto finish = [&](const cgp::EstimationResult& result) {
    if (!surface_path.empty()) result.surface_to_csv(surface_path);
    if (!diagnostics_path.empty()) result.diagnostics_to_json(diagnostics_path);
    std::cout << result_json(result).dump(2) << std::endl;
    return 0;
  };

  if (mode == "variance") {
    if (constraint_flags.kind != "none")
      throw std::invalid_argument(
          "variance mode is the closed-form unconstrained fit; use "
          "--mode fixed-rho for constrained estimation");
    cgp::EstimationResult result;
    result.sigma2_hat = cgp::mle_variance(obs, family.with_rho(rho));
    result.rho_hat = rho;
    result.microergodic_hat =
        result.sigma2_hat / std::pow(rho, family.microergodic_exponent());
    return finish(result);
  }

  const double center =
      sigma2_center > 0.0 ? sigma2_center
                          : cgp::mle_variance(obs, family.with_rho(rho));
  const double rel_halfwidth =
      halfwidth > 0.0 ? halfwidth : 4.0 * std::sqrt(2.0 / n);

  if (mode == "fixed-rho") {
    const Eigen::VectorXd sigma2s =
        cgp::EstimationGrid::centered_window(center, rel_halfwidth, sigma2_count);
    if (constraint_flags.kind == "none")
      return finish(cgp::mle_grid_fixed_rho(obs, family, rho, sigma2s));
    const cgp::KnotModel knots = cgp::KnotModel::equispaced(constraint_flags.m);
    const auto constraint = make_constraint(constraint_flags, knots);
    cgp::McConfig mc;
    mc.n_sim_an = n_sim;
    mc.n_t = n_t;
    mc.seed = seed;
    return finish(cgp::cmle_fixed_rho(obs, family, rho, sigma2s, *constraint,
                                      knots, mc));
  }

  if (mode == "joint") {
    const double exponent = family.microergodic_exponent();
    const double rho_mid = 0.5 * (rho_min + rho_max);
    const double micro_center =
        sigma2_center > 0.0
            ? sigma2_center / std::pow(rho_mid, exponent)
            : cgp::mle_variance(obs, family.with_rho(rho_mid)) /
                  std::pow(rho_mid, exponent);
    const cgp::EstimationGrid grid = cgp::EstimationGrid::joint_grid(
        micro_center, rel_halfwidth, sigma2_count, rho_min, rho_max, rho_count,
        exponent);
    if (constraint_flags.kind == "none")
      return finish(cgp::mle_grid_joint(obs, family, grid));
    const cgp::KnotModel knots = cgp::KnotModel::equispaced(constraint_flags.m);
    const auto constraint = make_constraint(constraint_flags, knots);
    cgp::McConfig mc;
    mc.n_sim_an = n_sim;
    mc.n_t = n_t;
    mc.seed = seed;
    return finish(cgp::cmle_joint(obs, family, grid, *constraint, knots, mc));
  }

  if (mode == "noisy") {
    if (constraint_flags.kind != "none")
      throw std::invalid_argument("noisy mode is unconstrained");
    cgp::EstimationGrid grid;
    grid.sigma2_values =
        cgp::EstimationGrid::centered_window(center, rel_halfwidth, sigma2_count);
    grid.rho_values = cgp::EstimationGrid::linspace(rho_min, rho_max, rho_count);
    grid.validate();
    const Eigen::VectorXd delta2s =
        cgp::EstimationGrid::linspace(delta2_min, delta2_max, delta2_count);
    return finish(cgp::mle_noisy(obs, family, grid, delta2s));
  }

  throw std::invalid_argument("unknown estimate mode: " + mode);
}

int run_predict(const std::string& data_path, const KernelFlags& kernel_flags,
                const ConstraintFlags& constraint_flags,
                const std::string& targets_text, int draws,
                const std::string& method, int burn_in, int thinning,
                std::uint64_t seed, const std::string& out_path) {
  const cgp::ObservationSet obs = cgp::ObservationSet::from_csv(data_path);
  const cgp::KernelSpec spec = make_kernel(kernel_flags);
  const std::vector<double> targets = parse_list(targets_text);
  if (targets.empty()) throw std::invalid_argument("no prediction targets");

  if (constraint_flags.kind == "none")
    throw std::invalid_argument(
        "predict needs a constraint; unconstrained kriging is included in "
        "every constrained prediction row");

  const cgp::KnotModel knots = cgp::KnotModel::equispaced(constraint_flags.m);
  const auto constraint = make_constraint(constraint_flags, knots);
  cgp::SamplerConfig sampler;
  sampler.method = method == "rejection" ? cgp::SamplerConfig::Method::Rejection
                                         : cgp::SamplerConfig::Method::Gibbs;
  sampler.gibbs.burn_in = burn_in;
  sampler.gibbs.thinning = thinning;
  sampler.seed = seed;
  const std::vector<cgp::PredictionResult> predictions =
      cgp::predict_constrained_batch(spec, obs, knots, *constraint, targets,
                                     draws, sampler);
  cgp::export_csv(predictions, out_path);

  nlohmann::ordered_json summary = nlohmann::ordered_json::array();
  for (const cgp::PredictionResult& p : predictions) {
    nlohmann::ordered_json item;
    item["x0"] = p.x0;
    item["mean_unconstrained"] = p.mean_unconstrained;
    item["mean_constrained"] = p.mean_constrained;
    item["var_unconstrained"] = p.var_unconstrained;
    item["var_constrained"] = p.var_constrained;
    item["mc_standard_error"] = p.mc_standard_error;
    summary.push_back(item);
  }
  std::cout << summary.dump(2) << std::endl;
  return 0;
}

int run_experiment_cmd(const std::string& config_path,
                       const std::vector<std::string>& overrides,
                       const std::string& scenario_override,
                       std::optional<std::uint64_t> seed_override,
                       const std::string& out_override, int threads_override) {
  cgp::ExperimentConfig config;
  if (!config_path.empty())
    config = cgp::ExperimentConfig::from_file(config_path);
  if (!scenario_override.empty()) config.set("scenario", scenario_override);
  for (const std::string& entry : overrides) {
    const auto eq = entry.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("--set expects key=value, got: " + entry);
    config.set(entry.substr(0, eq), entry.substr(eq + 1));
  }
  if (seed_override) config.seed = *seed_override;
  if (!out_override.empty()) config.out_dir = out_override;
  if (threads_override > 0) config.threads = threads_override;
  if (config.out_dir.empty())
    throw std::invalid_argument("no output directory: pass --out or set out=");
  config.validate();
  if (config.m <= config.n)
    std::cerr << "warning: knot count m = " << config.m
              << " does not exceed design size n = " << config.n << std::endl;

  const cgp::ExperimentOutput output = cgp::run_experiment(config);
  cgp::write_outputs(config, output);

  nlohmann::ordered_json brief;
  brief["scenario"] = cgp::to_string(config.scenario);
  brief["replicates"] = config.replicates;
  brief["failures"] = output.failures;
  brief["limit_sd"] = output.limit_sd;
  nlohmann::ordered_json summaries = nlohmann::ordered_json::array();
  for (const cgp::EstimatorSummary& s : output.summaries) {
    nlohmann::ordered_json item;
    item["name"] = s.name;
    item["median"] = s.median;
    item["sd"] = s.sd;
    item["ks"] = s.ks;
    summaries.push_back(item);
  }
  brief["summaries"] = summaries;
  brief["runtime_seconds"] = output.runtime_seconds;
  brief["out"] = config.out_dir.string();
  std::cout << brief.dump(2) << std::endl;
  return 0;
}

int run_report(const std::string& samples_path, const std::string& manifest_path,
               double limit_sd, const std::string& columns_text,
               const std::string& title, const std::string& out_path) {
  const cgp::CsvTable table = cgp::read_csv(samples_path);

  double sd = limit_sd;
  if (!(sd > 0.0)) {
    std::filesystem::path manifest = manifest_path;
    if (manifest.empty()) {
      manifest = std::filesystem::path(samples_path).parent_path() /
                 "manifest.json";
      if (!std::filesystem::exists(manifest)) manifest.clear();
    }
    if (!manifest.empty()) {
      std::ifstream in(manifest);
      if (!in)
        throw std::invalid_argument("cannot open manifest: " + manifest.string());
      const nlohmann::json parsed = nlohmann::json::parse(in);
      if (parsed.contains("limit_sd") && parsed["limit_sd"].is_number())
        sd = parsed["limit_sd"].get<double>();
    }
  }

  std::vector<std::string> names;
  if (!columns_text.empty()) {
    std::stringstream stream(columns_text);
    std::string cell;
    while (std::getline(stream, cell, ',')) names.push_back(cell);
  } else {
    for (const std::string& column : table.columns)
      if (column.size() > 4 && column.substr(column.size() - 4) == "_std")
        names.push_back(column);
  }
  if (names.empty())
    throw std::invalid_argument(
        "no *_std columns found; pass --columns to choose samples");

  std::vector<cgp::EstimatorSummary> summaries;
  for (const std::string& name : names) {
    const int idx = table.column_index(name);
    if (idx < 0)
      throw std::invalid_argument("column not found in samples: " + name);
    std::vector<double> values;
    values.reserve(table.rows.size());
    for (const auto& row : table.rows)
      if (std::isfinite(row[idx])) values.push_back(row[idx]);
    if (values.empty())
      throw std::invalid_argument("column is empty: " + name);
    cgp::EstimatorSummary summary;
    summary.name = name;
    summary.median = cgp::median(values);
    summary.limit_sd = sd;
    summary.ks = sd > 0.0 ? cgp::ks_distance_to_normal(values, sd)
                          : std::numeric_limits<double>::quiet_NaN();
    try {
      summary.curve = cgp::kde(values);
    } catch (const std::invalid_argument&) {
      summary.degenerate = true;
    }
    summaries.push_back(std::move(summary));
  }

  cgp::write_density_figure(out_path, summaries,
                            sd > 0.0 ? sd
                                     : std::numeric_limits<double>::quiet_NaN(),
                            title);
  std::cout << "wrote " << out_path << std::endl;
  return 0;
}

int dispatch(int argc, char** argv) {
  CLI::App app{"constrained Gaussian process estimation toolkit"};
  app.require_subcommand(1);

  // simulate
  auto* simulate = app.add_subcommand(
      "simulate", "draw trajectories at an equispaced design, write CSV");
  KernelFlags sim_kernel;
  ConstraintFlags sim_constraint;
  int sim_n = 50, sim_trajectories = 1, sim_burn_in = 500, sim_thinning = 5;
  std::uint64_t sim_seed = 0;
  std::string sim_out = "observations.csv";
  add_kernel_flags(simulate, sim_kernel);
  add_constraint_flags(simulate, sim_constraint);
  simulate->add_option("--n", sim_n, "design size")->capture_default_str();
  simulate->add_option("--trajectories", sim_trajectories, "draw count")
      ->capture_default_str();
  simulate->add_option("--burn-in", sim_burn_in, "Gibbs burn-in")
      ->capture_default_str();
  simulate->add_option("--thinning", sim_thinning, "Gibbs thinning")
      ->capture_default_str();
  simulate->add_option("--seed", sim_seed, "RNG seed")->capture_default_str();
  simulate->add_option("--out", sim_out, "output CSV")->capture_default_str();

  // estimate
  auto* estimate = app.add_subcommand(
      "estimate", "MLE / constrained MLE on a CSV dataset");
  KernelFlags est_kernel;
  ConstraintFlags est_constraint;
  std::string est_data, est_mode = "fixed-rho";
  double est_rho = 0.2, est_center = 0.0, est_halfwidth = 0.0;
  int est_sigma2_count = 1000;
  double est_rho_min = 0.1, est_rho_max = 0.3;
  int est_rho_count = 40;
  double est_delta2_min = 0.05, est_delta2_max = 0.8;
  int est_delta2_count = 61, est_n_sim = 500, est_n_t = 500;
  std::uint64_t est_seed = 0;
  std::string est_surface, est_diagnostics;
  estimate->add_option("--data", est_data, "CSV with x,y columns")->required();
  estimate->add_option("--mode", est_mode,
                       "variance | fixed-rho | joint | noisy")
      ->capture_default_str();
  add_kernel_flags(estimate, est_kernel);
  add_constraint_flags(estimate, est_constraint);
  estimate->add_option("--at-rho", est_rho, "fixed correlation length")
      ->capture_default_str();
  estimate->add_option("--sigma2-center", est_center,
                       "variance grid center (default: profile fit)");
  estimate->add_option("--halfwidth", est_halfwidth,
                       "relative grid halfwidth (default 4*sqrt(2/n))");
  estimate->add_option("--sigma2-count", est_sigma2_count, "variance grid size")
      ->capture_default_str();
  estimate->add_option("--rho-min", est_rho_min, "range grid lower end")
      ->capture_default_str();
  estimate->add_option("--rho-max", est_rho_max, "range grid upper end")
      ->capture_default_str();
  estimate->add_option("--rho-count", est_rho_count, "range grid size")
      ->capture_default_str();
  estimate->add_option("--delta2-min", est_delta2_min, "noise grid lower end")
      ->capture_default_str();
  estimate->add_option("--delta2-max", est_delta2_max, "noise grid upper end")
      ->capture_default_str();
  estimate->add_option("--delta2-count", est_delta2_count, "noise grid size")
      ->capture_default_str();
  estimate->add_option("--n-sim", est_n_sim, "prior feasibility draws")
      ->capture_default_str();
  estimate->add_option("--n-t", est_n_t, "posterior feasibility draws")
      ->capture_default_str();
  estimate->add_option("--seed", est_seed, "Monte Carlo seed")
      ->capture_default_str();
  estimate->add_option("--surface", est_surface, "write objective surface CSV");
  estimate->add_option("--diagnostics", est_diagnostics,
                       "write diagnostics JSON");

  // predict
  auto* predict = app.add_subcommand(
      "predict", "constrained kriging at target locations");
  KernelFlags pred_kernel;
  ConstraintFlags pred_constraint;
  std::string pred_data, pred_targets = "0.1,0.3,0.5,0.7,0.9";
  std::string pred_method = "gibbs", pred_out = "predictions.csv";
  int pred_draws = 400, pred_burn_in = 500, pred_thinning = 5;
  std::uint64_t pred_seed = 0;
  predict->add_option("--data", pred_data, "CSV with x,y columns")->required();
  add_kernel_flags(predict, pred_kernel);
  add_constraint_flags(predict, pred_constraint);
  predict->add_option("--targets", pred_targets, "comma-separated x0 list")
      ->capture_default_str();
  predict->add_option("--draws", pred_draws, "posterior draws")
      ->capture_default_str();
  predict->add_option("--method", pred_method, "gibbs | rejection")
      ->capture_default_str();
  predict->add_option("--burn-in", pred_burn_in, "Gibbs burn-in")
      ->capture_default_str();
  predict->add_option("--thinning", pred_thinning, "Gibbs thinning")
      ->capture_default_str();
  predict->add_option("--seed", pred_seed, "RNG seed")->capture_default_str();
  predict->add_option("--out", pred_out, "output CSV")->capture_default_str();

  // experiment
  auto* experiment = app.add_subcommand(
      "experiment", "run a seeded replication study from a config file");
  std::string exp_config, exp_scenario, exp_out;
  std::vector<std::string> exp_sets;
  std::uint64_t exp_seed = 0;
  bool exp_seed_given = false;
  int exp_threads = 0;
  experiment->add_option("--config", exp_config, "key = value config file");
  experiment->add_option("--scenario", exp_scenario,
                         "variance | joint | noisy | prediction");
  experiment
      ->add_option("--set", exp_sets, "override a config key (key=value)")
      ->take_all();
  experiment->add_option("--seed", exp_seed, "master seed override")
      ->each([&](const std::string&) { exp_seed_given = true; });
  experiment->add_option("--out", exp_out, "output directory override");
  experiment->add_option("--threads", exp_threads, "worker thread override");

  // report
  auto* report = app.add_subcommand(
      "report", "density figure from an experiment samples.csv");
  std::string rep_samples, rep_manifest, rep_columns, rep_title =
      "estimator densities";
  std::string rep_out = "figure.svg";
  double rep_limit_sd = 0.0;
  report->add_option("--samples", rep_samples, "samples.csv path")->required();
  report->add_option("--manifest", rep_manifest,
                     "manifest.json (default: sibling of samples)");
  report->add_option("--limit-sd", rep_limit_sd,
                     "limit normal sd (default: manifest limit_sd)");
  report->add_option("--columns", rep_columns,
                     "comma-separated sample columns (default: *_std)");
  report->add_option("--title", rep_title, "figure title")
      ->capture_default_str();
  report->add_option("--out", rep_out, "output SVG")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  if (simulate->parsed())
    return run_simulate(sim_kernel, sim_constraint, sim_n, sim_trajectories,
                        sim_seed, sim_burn_in, sim_thinning, sim_out);
  if (estimate->parsed())
    return run_estimate(est_data, est_mode, est_kernel, est_constraint, est_rho,
                        est_center, est_halfwidth, est_sigma2_count, est_rho_min,
                        est_rho_max, est_rho_count, est_delta2_min,
                        est_delta2_max, est_delta2_count, est_n_sim, est_n_t,
                        est_seed, est_surface, est_diagnostics);
  if (predict->parsed())
    return run_predict(pred_data, pred_kernel, pred_constraint, pred_targets,
                       pred_draws, pred_method, pred_burn_in, pred_thinning,
                       pred_seed, pred_out);
  if (experiment->parsed())
    return run_experiment_cmd(exp_config, exp_sets, exp_scenario,
                              exp_seed_given
                                  ? std::optional<std::uint64_t>(exp_seed)
                                  : std::nullopt,
                              exp_out, exp_threads);
  if (report->parsed())
    return run_report(rep_samples, rep_manifest, rep_limit_sd, rep_columns,
                      rep_title, rep_out);
  return 1;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return dispatch(argc, argv);
  } catch (const cgp::ConditioningError& e) {
    std::cerr << "numerical failure: " << e.what() << std::endl;
    return 3;
  } catch (const cgp::SamplerError& e) {
    std::cerr << "numerical failure: " << e.what() << std::endl;
    return 3;
  } catch (const cgp::EstimationError& e) {
    std::cerr << "numerical failure: " << e.what() << std::endl;
    return 3;
  } catch (const cgp::ExperimentError& e) {
    std::cerr << "numerical failure: " << e.what() << std::endl;
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << std::endl;
    return 2;
  }
}
