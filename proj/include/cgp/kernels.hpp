#pragma once

#include <Eigen/Dense>
#include <span>
#include <string>

namespace cgp {

enum class KernelFamily { Matern, Matern52, Wendland, Exponential };

std::string to_string(KernelFamily family);
KernelFamily kernel_family_from_string(const std::string& name);

// Stationary covariance on the line: k(t) = sigma2 * corr(t / scale) plus a
// nugget added on matrix diagonals only. `nu` applies to Matern, (s, mu) to
// Wendland; the others ignore them.
struct KernelSpec {
  KernelFamily family = KernelFamily::Matern52;
  double sigma2 = 1.0;
  double rho = 1.0;
  double nugget = 0.0;
  double nu = 2.5;
  double s = 1.0;
  double mu = 2.0;

  static KernelSpec matern52(double sigma2, double rho, double nugget = 0.0);
  static KernelSpec matern(double nu, double sigma2, double rho, double nugget = 0.0);
  static KernelSpec wendland(double s, double mu, double sigma2, double rho,
                             double nugget = 0.0);
  static KernelSpec exponential(double sigma2, double rho, double nugget = 0.0);

  // Throws std::invalid_argument on non-positive sigma2/rho, negative nugget,
  // Matern nu outside (0, 10], or Wendland (s, mu) outside the valid region
  // mu >= (d + 1) / 2 + s for d = dim.
  void validate(int dim = 1) const;

  // Exponent e such that sigma2 / rho^e is the microergodic parameter.
  double microergodic_exponent() const;

  KernelSpec with_sigma2(double value) const;
  KernelSpec with_rho(double value) const;
  KernelSpec without_nugget() const;
};

// Covariance between two points at distance |lag|; excludes the nugget.
double eval_kernel(const KernelSpec& spec, double lag);

// sigma2 / rho^e for the family's exponent e.
double microergodic(const KernelSpec& spec);

// Dense covariance matrix with its Cholesky factor. `jitter_applied` is the
// absolute diagonal shift the factorisation needed (0 in the common case).
struct CovarianceMatrix {
  Eigen::MatrixXd entries;
  Eigen::MatrixXd chol;  // lower triangular, factors entries + jitter * I
  double log_det = 0.0;
  double jitter_applied = 0.0;
  int n = 0;

  Eigen::VectorXd solve(const Eigen::VectorXd& rhs) const;
  Eigen::MatrixXd solve(const Eigen::MatrixXd& rhs) const;
  // Forward substitution L^{-1} rhs.
  Eigen::VectorXd forward(const Eigen::VectorXd& rhs) const;
  // y^T K^{-1} y through the factor.
  double quad_form(const Eigen::VectorXd& y) const;
};

// Builds the matrix k(|x_i - x_j|) + nugget * I and factors it, escalating a
// jitter ladder {1e-12, 1e-10, 1e-8} * sigma2 before giving up with
// ConditioningError. Points must be pairwise distinct when nugget = 0.
CovarianceMatrix covariance_matrix(const KernelSpec& spec,
                                   std::span<const double> points);

}  // namespace cgp
