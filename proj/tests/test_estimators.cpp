#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <vector>

#include "cgp/constraints.hpp"
#include "cgp/errors.hpp"
#include "cgp/estimators.hpp"
#include "cgp/gp.hpp"
#include "cgp/kde.hpp"
#include "cgp/kernels.hpp"
#include "cgp/rng.hpp"
#include "cgp/sampler.hpp"
#include "doctest.h"

using namespace cgp;

namespace {

constexpr double kLn2 = 0.69314718055994530942;
constexpr double kInf = std::numeric_limits<double>::infinity();

ConstraintSpec vacuous_bounds(const KnotModel& knots) {
  return build_constraints(ConstraintKind::Bounds, knots, -1e9, 1e9);
}

// One feasible trajectory of the knot interpolant, read at the design.
std::vector<double> constrained_data(const KernelSpec& spec,
                                     const KnotModel& knots,
                                     const ConstraintSpec& constraint,
                                     const std::vector<double>& design,
                                     std::uint64_t seed) {
  const CovarianceMatrix prior = covariance_matrix(spec, knots.knots());
  SamplerConfig config;
  config.seed = seed;
  config.gibbs.burn_in = 400;
  config.gibbs.thinning = 1;
  const ConstrainedSampleSet set =
      gibbs_sample(Eigen::VectorXd::Zero(knots.size()), prior.entries,
                   constraint, 1, config);
  std::vector<double> knot_values(knots.size());
  for (int j = 0; j < knots.size(); ++j) knot_values[j] = set.samples(0, j);
  std::vector<double> y(design.size());
  for (std::size_t i = 0; i < design.size(); ++i)
    y[i] = interpolate(knot_values, knots, design[i]);
  return y;
}

}  // namespace

TEST_CASE("variance mle closed forms") {
  const KernelSpec corr = KernelSpec::exponential(1.0, 1.0);
  CHECK(mle_variance(ObservationSet({0.5}, {2.0}), corr) ==
        doctest::Approx(4.0).epsilon(1e-14));
  CHECK(mle_variance(ObservationSet(equispaced(6), std::vector<double>(6, 0.0)),
                     corr) == 0.0);
}

TEST_CASE("variance mle matches a dense-inverse oracle") {
  const KernelSpec spec = KernelSpec::matern52(1.0, 0.2);
  const std::vector<double> points = {0.0, 0.5, 1.0};
  const ObservationSet obs(points, {1.0, -1.0, 0.5});

  const CovarianceMatrix unit = covariance_matrix(spec, points);
  const Eigen::VectorXd y = obs.values_vec();
  const double direct = y.dot(unit.entries.inverse() * y) / 3.0;
  CHECK(mle_variance(obs, spec) == doctest::Approx(direct).epsilon(1e-10));
}

TEST_CASE("variance mle ignores the correlation spec's variance") {
  const ObservationSet obs(equispaced(10), simulate_gp(KernelSpec::matern52(2.0, 0.2),
                                                       equispaced(10), 5));
  const double at_unit = mle_variance(obs, KernelSpec::matern52(1.0, 0.2));
  const double at_seven = mle_variance(obs, KernelSpec::matern52(7.0, 0.2));
  CHECK(at_unit == at_seven);
}

TEST_CASE("centered window floors small-n grids at a positive value") {
  const Eigen::VectorXd wide = EstimationGrid::centered_window(2.0, 1.5, 100);
  CHECK(wide.minCoeff() == doctest::Approx(0.002).epsilon(1e-12));
  CHECK(wide.maxCoeff() == doctest::Approx(5.0).epsilon(1e-12));

  const Eigen::VectorXd narrow = EstimationGrid::centered_window(2.0, 0.25, 100);
  CHECK(narrow.minCoeff() == doctest::Approx(1.5).epsilon(1e-12));
  CHECK(narrow.maxCoeff() == doctest::Approx(2.5).epsilon(1e-12));
  for (int i = 1; i < 100; ++i) CHECK(narrow[i] > narrow[i - 1]);
}

TEST_CASE("joint grids explore the same microergodic range at every rho") {
  const EstimationGrid grid =
      EstimationGrid::joint_grid(6250.0, 0.8, 11, 0.1, 0.3, 5, 5.0);
  grid.validate();
  for (int i = 0; i < grid.rho_values.size(); ++i)
    for (int j = 0; j < grid.sigma2_values.size(); ++j) {
      const double micro = grid.sigma2_at(i, j) /
                           std::pow(grid.rho_values[i], 5.0);
      CHECK(micro == doctest::Approx(grid.sigma2_values[j]).epsilon(1e-12));
    }
}

TEST_CASE("grid argmax breaks ties toward the smallest parameters") {
  std::vector<GridPointEval> surface(4);
  surface[0] = {2.0, 0.2, 0.0, -5.0, 0.0, 0.0, -5.0, false};
  surface[1] = {1.0, 0.2, 0.0, -5.0, 0.0, 0.0, -5.0, false};
  surface[2] = {1.0, 0.1, 0.0, -5.0, 0.0, 0.0, -5.0, false};
  surface[3] = {3.0, 0.3, 0.0, -9.0, 0.0, 0.0, -9.0, false};
  CHECK(grid_argmax(surface) == 2);

  // Shifting the whole surface never moves the argmax.
  for (GridPointEval& point : surface) point.objective += 123.456;
  CHECK(grid_argmax(surface) == 2);

  for (GridPointEval& point : surface) point.excluded = true;
  CHECK_THROWS_AS(grid_argmax(surface), EstimationError);
}

TEST_CASE("vacuous feasibility penalty is exactly positive zero") {
  const KnotModel knots = KnotModel::equispaced(10);
  const KernelSpec spec = KernelSpec::matern52(2.0, 0.2);
  const double an = estimate_An(spec, knots, vacuous_bounds(knots), 200, 1);
  CHECK(an == 0.0);
  CHECK(!std::signbit(an));
}

TEST_CASE("two-knot monotone penalty is log two at any scale") {
  // The slope sign is scale-free, so the estimate is one coin flip per draw.
  const KnotModel knots({0.0, 1.0});
  const ConstraintSpec monotone =
      build_constraints(ConstraintKind::Monotone, knots);
  for (double rho : {0.05, 0.5, 5.0}) {
    const KernelSpec spec = KernelSpec::matern52(3.7, rho);
    const double an = estimate_An(spec, knots, monotone, 40000, 2);
    CHECK(std::abs(an - kLn2) < 0.03);
  }
}

TEST_CASE("near-flat kernel gives the half-space penalty for one-sided bounds") {
  // rho huge: the two knot values collapse to one standard normal.
  const KnotModel knots({0.0, 1.0});
  const ConstraintSpec half =
      build_constraints(ConstraintKind::Bounds, knots, 0.0, kInf);
  const KernelSpec spec = KernelSpec::matern52(1.0, 1e6);
  const double an = estimate_An(spec, knots, half, 40000, 3);
  CHECK(std::abs(an - kLn2) < 0.03);
}

TEST_CASE("shared-draw penalty column is constant under scale-free constraints") {
  const KnotModel knots({0.0, 1.0});
  const ConstraintSpec monotone =
      build_constraints(ConstraintKind::Monotone, knots);
  const Eigen::VectorXd sigma2_grid = EstimationGrid::linspace(0.5, 4.0, 7);
  const MonteCarloColumn column = an_column(
      KernelSpec::matern52(1.0, 0.3), 0.3, sigma2_grid, knots, monotone, 5000, 4);
  REQUIRE(column.values.size() == 7);
  for (int j = 1; j < 7; ++j) CHECK(column.values[j] == column.values[0]);
  CHECK(std::abs(column.values[0] - kLn2) < 0.05);
}

TEST_CASE("bounded-band penalty grows with the variance") {
  const KnotModel knots = KnotModel::equispaced(5);
  const ConstraintSpec band =
      build_constraints(ConstraintKind::Bounds, knots, -1.0, 1.0);
  const Eigen::VectorXd sigma2_grid = EstimationGrid::linspace(0.25, 4.0, 5);
  const MonteCarloColumn column = an_column(
      KernelSpec::matern52(1.0, 0.3), 0.3, sigma2_grid, knots, band, 20000, 5);
  for (int j = 1; j < 5; ++j) CHECK(column.values[j] >= column.values[j - 1]);
  CHECK(column.values[0] > 0.0);
}

TEST_CASE("conditional feasibility reward is never positive") {
  const KnotModel knots = KnotModel::equispaced(12);
  const KernelSpec spec = KernelSpec::matern52(2.0, 0.2);
  const ConstraintSpec band =
      build_constraints(ConstraintKind::Bounds, knots, -2.5, 2.5);
  const std::vector<double> design = equispaced(8);
  const std::vector<double> y =
      constrained_data(spec, knots, band, design, 6);
  const ObservationSet obs(design, y);
  const double bn = estimate_Bn(spec, obs, knots, band, 400, 7);
  CHECK(bn <= 0.0);
  CHECK(std::isfinite(bn));
}

TEST_CASE("vacuous conditional reward is exactly positive zero") {
  const KnotModel knots = KnotModel::equispaced(8);
  const KernelSpec spec = KernelSpec::matern52(2.0, 0.2);
  const ObservationSet obs({0.25, 0.75}, {0.5, -0.5});
  const double bn = estimate_Bn(spec, obs, knots, vacuous_bounds(knots), 300, 8);
  CHECK(bn == 0.0);
  CHECK(!std::signbit(bn));

  // Huge margins with near-zero scale behave like the sure event.
  const KernelSpec tiny = KernelSpec::matern52(1e-10, 0.2);
  const ConstraintSpec wide =
      build_constraints(ConstraintKind::Bounds, knots, -1e6, 1e6);
  CHECK(estimate_Bn(tiny, obs, knots, wide, 300, 9) == 0.0);
}

TEST_CASE("isolated-knot posterior gives the quarter-plane reward") {
  // Wendland with range 0.01 decorrelates the three knots; conditioning on
  // y = 0 at the middle knot pins it, leaving two independent half-space
  // events of probability 1/2 each.
  const KnotModel knots({0.0, 0.5, 1.0});
  const KernelSpec spec = KernelSpec::wendland(1.0, 2.5, 1.0, 0.01);
  const ObservationSet obs({0.5}, {0.0});
  const ConstraintSpec half =
      build_constraints(ConstraintKind::Bounds, knots, 0.0, kInf);
  const double bn = estimate_Bn(spec, obs, knots, half, 40000, 10);
  CHECK(std::abs(bn - std::log(0.25)) < 0.05);
}

TEST_CASE("conditional reward median shrinks as the design fills in") {
  const KernelSpec spec = KernelSpec::matern52(2.0, 0.2);
  const KnotModel knots = KnotModel::equispaced(40);
  const ConstraintSpec band =
      build_constraints(ConstraintKind::Bounds, knots, -2.0, 2.0);

  std::vector<double> medians;
  std::vector<std::vector<double>> trajectories(50);
  for (int s = 0; s < 50; ++s) {
    std::vector<double> knot_values(knots.size());
    const CovarianceMatrix prior = covariance_matrix(spec, knots.knots());
    SamplerConfig config;
    config.seed = 100 + s;
    config.gibbs.burn_in = 300;
    config.gibbs.thinning = 1;
    const ConstrainedSampleSet set =
        gibbs_sample(Eigen::VectorXd::Zero(knots.size()), prior.entries, band,
                     1, config);
    trajectories[s].resize(knots.size());
    for (int j = 0; j < knots.size(); ++j) trajectories[s][j] = set.samples(0, j);
  }

  for (int n : {10, 40, 160}) {
    const std::vector<double> design = equispaced(n);
    std::vector<double> magnitudes;
    for (int s = 0; s < 50; ++s) {
      std::vector<double> y(design.size());
      for (std::size_t i = 0; i < design.size(); ++i)
        y[i] = interpolate(trajectories[s], knots, design[i]);
      const ObservationSet obs(design, y);
      const double bn = estimate_Bn(spec, obs, knots, band, 300, 200 + s);
      magnitudes.push_back(std::abs(bn));
    }
    medians.push_back(median(magnitudes));
  }
  CHECK(medians[1] <= medians[0] + 1e-12);
  CHECK(medians[2] <= medians[1] + 1e-12);
}

TEST_CASE("vacuous constrained estimator reproduces the plain grid argmax") {
  const KernelSpec family = KernelSpec::matern52(2.0, 0.2);
  const std::vector<double> design = equispaced(15);
  const KnotModel knots = KnotModel::equispaced(40);
  const Eigen::VectorXd sigma2_grid = EstimationGrid::linspace(0.5, 4.0, 200);

  for (int seed = 0; seed < 5; ++seed) {
    const ObservationSet obs(design, simulate_gp(family, design, 300 + seed));
    McConfig mc;
    mc.n_sim_an = 100;
    mc.n_t = 100;
    mc.seed = 400 + seed;
    const EstimationResult constrained =
        cmle_fixed_rho(obs, family, 0.2, sigma2_grid, vacuous_bounds(knots),
                       knots, mc);
    const EstimationResult plain =
        mle_grid_fixed_rho(obs, family, 0.2, sigma2_grid);
    CHECK(constrained.sigma2_hat == plain.sigma2_hat);
    REQUIRE(constrained.surface.size() == plain.surface.size());
    for (std::size_t j = 0; j < plain.surface.size(); ++j)
      CHECK(constrained.surface[j].objective == plain.surface[j].objective);
  }
}

TEST_CASE("single-point grid is returned verbatim") {
  const KernelSpec family = KernelSpec::matern52(2.0, 0.2);
  const ObservationSet obs(equispaced(8),
                           simulate_gp(family, equispaced(8), 11));
  Eigen::VectorXd grid(1);
  grid << 1.7;
  CHECK(mle_grid_fixed_rho(obs, family, 0.2, grid).sigma2_hat == 1.7);
}

TEST_CASE("precomputed penalty columns are honoured bit for bit") {
  const KernelSpec family = KernelSpec::matern52(2.0, 0.2);
  const std::vector<double> design = equispaced(12);
  const KnotModel knots = KnotModel::equispaced(30);
  const ConstraintSpec band =
      build_constraints(ConstraintKind::Bounds, knots, -2.5, 2.5);
  const Eigen::VectorXd sigma2_grid = EstimationGrid::linspace(1.0, 3.0, 40);
  const std::vector<double> y =
      constrained_data(family, knots, band, design, 12);
  const ObservationSet obs(design, y);

  const MonteCarloColumn shared =
      an_column(family, 0.2, sigma2_grid, knots, band, 500, 777);
  McConfig mc;
  mc.n_sim_an = 500;
  mc.n_t = 200;
  mc.seed = 888;  // deliberately different from the column's seed
  const EstimationResult result =
      cmle_fixed_rho(obs, family, 0.2, sigma2_grid, band, knots, mc, &shared);
  REQUIRE(int(result.surface.size()) == sigma2_grid.size());
  for (int j = 0; j < sigma2_grid.size(); ++j)
    CHECK(result.surface[j].an == shared.values[j]);
}

TEST_CASE("an impossible constraint band excludes the whole surface") {
  const KernelSpec family = KernelSpec::matern52(2.0, 0.2);
  const std::vector<double> design = equispaced(8);
  const KnotModel knots = KnotModel::equispaced(20);
  const ConstraintSpec sliver =
      build_constraints(ConstraintKind::Bounds, knots, -1e-12, 1e-12);
  const Eigen::VectorXd sigma2_grid = EstimationGrid::linspace(1.0, 3.0, 10);
  const ObservationSet obs(design, simulate_gp(family, design, 13));

  McConfig mc;
  mc.n_sim_an = 200;
  mc.n_t = 100;
  mc.seed = 14;
  CHECK_THROWS_AS(
      cmle_fixed_rho(obs, family, 0.2, sigma2_grid, sliver, knots, mc),
      EstimationError);
}

TEST_CASE("profile likelihood on a singleton grid reduces to the variance mle") {
  const KernelSpec family = KernelSpec::matern52(1.0, 0.2);
  const ObservationSet obs(equispaced(20),
                           simulate_gp(KernelSpec::matern52(2.0, 0.2),
                                       equispaced(20), 15));
  Eigen::VectorXd rho_grid(1);
  rho_grid << 0.2;
  ThetaBox box;
  const EstimationResult result = mle_profile(obs, family, rho_grid, box);
  const double direct = mle_variance(obs, family);
  CHECK(result.sigma2_hat == doctest::Approx(direct).epsilon(1e-12));
  CHECK(result.rho_hat == 0.2);
  CHECK(result.microergodic_hat ==
        doctest::Approx(direct / std::pow(0.2, 5.0)).epsilon(1e-12));
}

TEST_CASE("profiled variance over rho^5 is non-increasing in rho") {
  const KernelSpec family = KernelSpec::matern52(1.0, 0.2);
  const Eigen::VectorXd rho_grid = EstimationGrid::linspace(0.1, 0.3, 20);
  for (int seed = 0; seed < 3; ++seed) {
    const std::vector<double> design = equispaced(40);
    const ObservationSet obs(
        design, simulate_gp(KernelSpec::matern52(2.0, 0.2), design, 500 + seed));
    double previous = kInf;
    for (int i = 0; i < rho_grid.size(); ++i) {
      const double profiled =
          mle_variance(obs, family.with_rho(rho_grid[i])) /
          std::pow(rho_grid[i], 5.0);
      CHECK(profiled <= previous * (1.0 + 1e-8));
      previous = profiled;
    }
  }
}

TEST_CASE("vacuous joint estimator reproduces the plain joint argmax") {
  const KernelSpec family = KernelSpec::matern52(2.0, 0.2);
  const std::vector<double> design = equispaced(15);
  const KnotModel knots = KnotModel::equispaced(30);
  const ObservationSet obs(design, simulate_gp(family, design, 16));
  const EstimationGrid grid =
      EstimationGrid::joint_grid(6250.0, 0.8, 15, 0.15, 0.25, 7, 5.0);

  McConfig mc;
  mc.n_sim_an = 100;
  mc.n_t = 100;
  mc.seed = 17;
  const EstimationResult constrained =
      cmle_joint(obs, family, grid, vacuous_bounds(knots), knots, mc);
  const EstimationResult plain = mle_grid_joint(obs, family, grid);
  CHECK(constrained.sigma2_hat == plain.sigma2_hat);
  CHECK(constrained.rho_hat == plain.rho_hat);
  CHECK(constrained.microergodic_hat == plain.microergodic_hat);
}

TEST_CASE("estimation is reproducible bit for bit") {
  const KernelSpec family = KernelSpec::matern52(2.0, 0.2);
  const std::vector<double> design = equispaced(10);
  const KnotModel knots = KnotModel::equispaced(25);
  const ConstraintSpec band =
      build_constraints(ConstraintKind::Bounds, knots, -2.5, 2.5);
  const Eigen::VectorXd sigma2_grid = EstimationGrid::linspace(1.0, 3.0, 30);
  const std::vector<double> y = constrained_data(family, knots, band, design, 18);
  const ObservationSet obs(design, y);

  McConfig mc;
  mc.n_sim_an = 150;
  mc.n_t = 150;
  mc.seed = 19;
  const EstimationResult a =
      cmle_fixed_rho(obs, family, 0.2, sigma2_grid, band, knots, mc);
  const EstimationResult b =
      cmle_fixed_rho(obs, family, 0.2, sigma2_grid, band, knots, mc);
  CHECK(a.sigma2_hat == b.sigma2_hat);
  REQUIRE(a.surface.size() == b.surface.size());
  for (std::size_t j = 0; j < a.surface.size(); ++j) {
    CHECK(a.surface[j].an == b.surface[j].an);
    CHECK(a.surface[j].bn == b.surface[j].bn);
    CHECK(a.surface[j].objective == b.surface[j].objective);
  }
}

TEST_CASE("noisy estimator pins a zero noise level to the grid floor") {
  const KernelSpec family = KernelSpec::exponential(1.0, 0.5);
  const std::vector<double> design = equispaced(60);
  const ObservationSet obs(design, simulate_gp(family, design, 20));

  EstimationGrid grid;
  grid.sigma2_values = EstimationGrid::linspace(0.5, 2.0, 12);
  grid.rho_values = EstimationGrid::linspace(0.25, 1.0, 8);
  Eigen::VectorXd delta2(5);
  delta2 << 1e-6, 0.05, 0.1, 0.2, 0.4;
  const EstimationResult result = mle_noisy(obs, family, grid, delta2);
  REQUIRE(result.delta2_hat.has_value());
  CHECK(*result.delta2_hat == 1e-6);
  CHECK(result.microergodic_hat ==
        doctest::Approx(result.sigma2_hat / result.rho_hat).epsilon(1e-14));
}

TEST_CASE("noisy surface cells match the direct nugget likelihood") {
  const KernelSpec family = KernelSpec::exponential(1.0, 0.5);
  const std::vector<double> design = equispaced(12);
  std::vector<double> y = simulate_gp(family, design, 21);
  Rng rng(22);
  for (double& v : y) v += 0.3 * rng.normal();
  const ObservationSet obs(design, y);

  EstimationGrid grid;
  grid.sigma2_values = EstimationGrid::linspace(0.8, 1.6, 3);
  grid.rho_values = EstimationGrid::linspace(0.4, 0.8, 2);
  Eigen::VectorXd delta2(2);
  delta2 << 0.05, 0.15;
  const EstimationResult result = mle_noisy(obs, family, grid, delta2);
  REQUIRE(result.surface.size() == 12);
  for (const GridPointEval& point : result.surface) {
    const KernelSpec cell = KernelSpec::exponential(point.sigma2, point.rho,
                                                    point.delta2);
    CHECK(point.log_lik ==
          doctest::Approx(log_likelihood(cell, obs)).epsilon(1e-8));
  }
}

TEST_CASE("argmax on the grid edge is flagged as a boundary hit") {
  const KernelSpec family = KernelSpec::matern52(2.0, 0.2);
  const ObservationSet obs(equispaced(10),
                           simulate_gp(family, equispaced(10), 23));
  // Grid far below the data's scale: the top edge wins.
  const Eigen::VectorXd grid = EstimationGrid::linspace(0.001, 0.002, 5);
  const EstimationResult result = mle_grid_fixed_rho(obs, family, 0.2, grid);
  CHECK(result.boundary_hits >= 1);
  CHECK(result.sigma2_hat == 0.002);
}

TEST_CASE("surface and diagnostics exports are readable files") {
  const KernelSpec family = KernelSpec::matern52(2.0, 0.2);
  const ObservationSet obs(equispaced(10),
                           simulate_gp(family, equispaced(10), 24));
  const EstimationResult result = mle_grid_fixed_rho(
      obs, family, 0.2, EstimationGrid::linspace(1.0, 3.0, 20));

  const auto dir = std::filesystem::temp_directory_path();
  const auto surface_path = dir / "cgp_surface_test.csv";
  const auto diag_path = dir / "cgp_diag_test.json";
  result.surface_to_csv(surface_path);
  result.diagnostics_to_json(diag_path);
  CHECK(std::filesystem::file_size(surface_path) > 0);

  std::ifstream diag(diag_path);
  std::string text((std::istreambuf_iterator<char>(diag)),
                   std::istreambuf_iterator<char>());
  CHECK(text.find("sigma2_hat") != std::string::npos);
  CHECK(text.find("boundary_hits") != std::string::npos);
  std::filesystem::remove(surface_path);
  std::filesystem::remove(diag_path);
}

TEST_CASE("grid validation rejects malformed grids") {
  EstimationGrid grid;
  CHECK_THROWS_AS(grid.validate(), std::invalid_argument);
  grid.sigma2_values = EstimationGrid::linspace(1.0, 2.0, 5);
  grid.rho_values = Eigen::VectorXd::Zero(0);
  CHECK_THROWS_AS(grid.validate(), std::invalid_argument);
  grid.rho_values = EstimationGrid::linspace(0.1, 0.3, 4);
  CHECK_NOTHROW(grid.validate());
  grid.sigma2_values[2] = -1.0;
  CHECK_THROWS_AS(grid.validate(), std::invalid_argument);
}
