#include "cgp/kernels.hpp"

#include <Eigen/Cholesky>
#include <boost/math/quadrature/tanh_sinh.hpp>
#include <boost/math/special_functions/bessel.hpp>
#include <boost/math/special_functions/beta.hpp>
#include <boost/math/special_functions/gamma.hpp>
#include <cmath>
#include <map>
#include <mutex>
#include <stdexcept>
#include <vector>

#include "cgp/errors.hpp"

namespace cgp {

namespace {

constexpr double kSqrt5 = 2.2360679774997896;

double matern52_corr(double u) {
  // u = sqrt(5) * lag / rho
  return (1.0 + u + u * u / 3.0) * std::exp(-u);
}

double matern_corr(double nu, double u) {
  if (u < 1e-100) return 1.0;
  const double scale =
      std::exp2(1.0 - nu) / boost::math::tgamma(nu);  // 2^{1-nu} / Gamma(nu)
  return scale * std::pow(u, nu) * boost::math::cyl_bessel_k(nu, u);
}

// phi_{s,mu}(t) = B(2s, mu+1)^{-1} Int_t^1 u (u^2 - t^2)^{s-1} (1-u)^mu du.
// Substituting w = u^2 - t^2 gives
//   (1/2) Int_0^{1-t^2} w^{s-1} ((1 - t^2 - w) / (1 + sqrt(w + t^2)))^mu dw,
// whose endpoint singularities are pure powers with no cancellation, so
// tanh_sinh reaches full precision even for s < 1.
double wendland_corr(double s, double mu, double t) {
  if (t >= 1.0) return 0.0;
  if (t <= 0.0) {
    // Int_0^1 u^{2s-1} (1-u)^mu du is the normaliser itself.
    return 1.0;
  }
  const double b = (1.0 - t) * (1.0 + t);
  boost::math::quadrature::tanh_sinh<double> integrator;
  const auto f = [&](double w) {
    const double u = std::sqrt(w + t * t);
    const double one_minus_u = std::max(0.0, (b - w) / (1.0 + u));
    return 0.5 * std::pow(w, s - 1.0) * std::pow(one_minus_u, mu);
  };
  const double raw = integrator.integrate(f, 0.0, b, 1e-12);
  return raw / boost::math::beta(2.0 * s, mu + 1.0);
}

// Monotone cubic Hermite table of phi on [0,1]; Fritsch-Carlson tangents keep
// the interpolant decreasing like the exact correlation.
class WendlandTable {
 public:
  WendlandTable(double s, double mu) {
    const int n = 2049;
    x_.resize(n);
    y_.resize(n);
    m_.resize(n);
    for (int i = 0; i < n; ++i) {
      x_[i] = double(i) / (n - 1);
      y_[i] = wendland_corr(s, mu, x_[i]);
    }
    y_[n - 1] = 0.0;
    const double h = x_[1] - x_[0];
    std::vector<double> d(n - 1);
    for (int i = 0; i + 1 < n; ++i) d[i] = (y_[i + 1] - y_[i]) / h;
    m_[0] = d[0];
    m_[n - 1] = d[n - 2];
    for (int i = 1; i + 1 < n; ++i) m_[i] = 0.5 * (d[i - 1] + d[i]);
    for (int i = 0; i + 1 < n; ++i) {
      if (d[i] == 0.0) {
        m_[i] = 0.0;
        m_[i + 1] = 0.0;
        continue;
      }
      const double a = m_[i] / d[i];
      const double b = m_[i + 1] / d[i];
      const double r = a * a + b * b;
      if (r > 9.0) {
        const double tau = 3.0 / std::sqrt(r);
        m_[i] = tau * a * d[i];
        m_[i + 1] = tau * b * d[i];
      }
    }
  }

  double eval(double t) const {
    if (t >= 1.0) return 0.0;
    if (t <= 0.0) return y_[0];
    const int n = static_cast<int>(x_.size());
    const double h = x_[1] - x_[0];
    int i = static_cast<int>(t / h);
    if (i >= n - 1) i = n - 2;
    const double u = (t - x_[i]) / h;
    const double u2 = u * u;
    const double u3 = u2 * u;
    const double h00 = 2 * u3 - 3 * u2 + 1;
    const double h10 = u3 - 2 * u2 + u;
    const double h01 = -2 * u3 + 3 * u2;
    const double h11 = u3 - u2;
    return h00 * y_[i] + h10 * h * m_[i] + h01 * y_[i + 1] + h11 * h * m_[i + 1];
  }

 private:
  std::vector<double> x_, y_, m_;
};

const WendlandTable& wendland_table(double s, double mu) {
  static std::mutex mutex;
  static std::map<std::pair<double, double>, WendlandTable> cache;
  std::lock_guard<std::mutex> lock(mutex);
  auto it = cache.find({s, mu});
  if (it == cache.end())
    it = cache.emplace(std::make_pair(s, mu), WendlandTable(s, mu)).first;
  return it->second;
}

double correlation_for_matrix(const KernelSpec& spec, double lag) {
  const double t = std::abs(lag) / spec.rho;
  switch (spec.family) {
    case KernelFamily::Matern52:
      return matern52_corr(kSqrt5 * t);
    case KernelFamily::Matern:
      return matern_corr(spec.nu, t);
    case KernelFamily::Exponential:
      return std::exp(-t);
    case KernelFamily::Wendland:
      return wendland_table(spec.s, spec.mu).eval(t);
  }
  return 0.0;
}

}  // namespace

std::string to_string(KernelFamily family) {
  switch (family) {
    case KernelFamily::Matern: return "matern";
    case KernelFamily::Matern52: return "matern52";
    case KernelFamily::Wendland: return "wendland";
    case KernelFamily::Exponential: return "exponential";
  }
  return "unknown";
}

KernelFamily kernel_family_from_string(const std::string& name) {
  if (name == "matern") return KernelFamily::Matern;
  if (name == "matern52") return KernelFamily::Matern52;
  if (name == "wendland") return KernelFamily::Wendland;
  if (name == "exponential") return KernelFamily::Exponential;
  throw std::invalid_argument("unknown kernel family: " + name);
}

KernelSpec KernelSpec::matern52(double sigma2, double rho, double nugget) {
  KernelSpec spec;
  spec.family = KernelFamily::Matern52;
  spec.sigma2 = sigma2;
  spec.rho = rho;
  spec.nugget = nugget;
  spec.validate();
  return spec;
}

KernelSpec KernelSpec::matern(double nu, double sigma2, double rho, double nugget) {
  KernelSpec spec;
  spec.family = KernelFamily::Matern;
  spec.nu = nu;
  spec.sigma2 = sigma2;
  spec.rho = rho;
  spec.nugget = nugget;
  spec.validate();
  return spec;
}

KernelSpec KernelSpec::wendland(double s, double mu, double sigma2, double rho,
                                double nugget) {
  KernelSpec spec;
  spec.family = KernelFamily::Wendland;
  spec.s = s;
  spec.mu = mu;
  spec.sigma2 = sigma2;
  spec.rho = rho;
  spec.nugget = nugget;
  spec.validate();
  return spec;
}

KernelSpec KernelSpec::exponential(double sigma2, double rho, double nugget) {
  KernelSpec spec;
  spec.family = KernelFamily::Exponential;
  spec.sigma2 = sigma2;
  spec.rho = rho;
  spec.nugget = nugget;
  spec.validate();
  return spec;
}

void KernelSpec::validate(int dim) const {
  if (!(sigma2 > 0.0)) throw std::invalid_argument("sigma2 must be positive");
  if (!(rho > 0.0)) throw std::invalid_argument("rho must be positive");
  if (!(nugget >= 0.0)) throw std::invalid_argument("nugget must be non-negative");
  if (family == KernelFamily::Matern) {
    if (!(nu > 0.0) || nu > 10.0)
      throw std::invalid_argument("matern nu must lie in (0, 10]");
  }
  if (family == KernelFamily::Wendland) {
    if (!(s > 0.0)) throw std::invalid_argument("wendland s must be positive");
    if (!(mu >= 0.5 * (dim + 1) + s))
      throw std::invalid_argument("wendland requires mu >= (d+1)/2 + s");
  }
}

double KernelSpec::microergodic_exponent() const {
  switch (family) {
    case KernelFamily::Matern: return 2.0 * nu;
    case KernelFamily::Matern52: return 5.0;
    case KernelFamily::Wendland: return 1.0 + 2.0 * s;
    case KernelFamily::Exponential: return 1.0;
  }
  return 1.0;
}

KernelSpec KernelSpec::with_sigma2(double value) const {
  KernelSpec spec = *this;
  spec.sigma2 = value;
  return spec;
}

KernelSpec KernelSpec::with_rho(double value) const {
  KernelSpec spec = *this;
  spec.rho = value;
  return spec;
}

KernelSpec KernelSpec::without_nugget() const {
  KernelSpec spec = *this;
  spec.nugget = 0.0;
  return spec;
}

double eval_kernel(const KernelSpec& spec, double lag) {
  const double t = std::abs(lag) / spec.rho;
  switch (spec.family) {
    case KernelFamily::Matern52:
      return spec.sigma2 * matern52_corr(kSqrt5 * t);
    case KernelFamily::Matern:
      return spec.sigma2 * matern_corr(spec.nu, t);
    case KernelFamily::Exponential:
      return spec.sigma2 * std::exp(-t);
    case KernelFamily::Wendland:
      return spec.sigma2 * wendland_corr(spec.s, spec.mu, t);
  }
  return 0.0;
}

double microergodic(const KernelSpec& spec) {
  return spec.sigma2 / std::pow(spec.rho, spec.microergodic_exponent());
}

Eigen::VectorXd CovarianceMatrix::solve(const Eigen::VectorXd& rhs) const {
  Eigen::VectorXd w = chol.triangularView<Eigen::Lower>().solve(rhs);
  return chol.transpose().triangularView<Eigen::Upper>().solve(w);
}

Eigen::MatrixXd CovarianceMatrix::solve(const Eigen::MatrixXd& rhs) const {
  Eigen::MatrixXd w = chol.triangularView<Eigen::Lower>().solve(rhs);
  return chol.transpose().triangularView<Eigen::Upper>().solve(w);
}

Eigen::VectorXd CovarianceMatrix::forward(const Eigen::VectorXd& rhs) const {
  return chol.triangularView<Eigen::Lower>().solve(rhs);
}

double CovarianceMatrix::quad_form(const Eigen::VectorXd& y) const {
  return forward(y).squaredNorm();
}

CovarianceMatrix covariance_matrix(const KernelSpec& spec,
                                   std::span<const double> points) {
  spec.validate();
  const int n = static_cast<int>(points.size());
  if (n < 1) throw std::invalid_argument("covariance_matrix needs >= 1 point");

  CovarianceMatrix result;
  result.n = n;
  result.entries.resize(n, n);
  for (int i = 0; i < n; ++i) {
    result.entries(i, i) = spec.sigma2 + spec.nugget;
    for (int j = i + 1; j < n; ++j) {
      const double value =
          spec.sigma2 * correlation_for_matrix(spec, points[i] - points[j]);
      result.entries(i, j) = value;
      result.entries(j, i) = value;
    }
  }

  const std::vector<double> ladder = {0.0, 1e-12 * spec.sigma2,
                                      1e-10 * spec.sigma2, 1e-8 * spec.sigma2};
  for (double jitter : ladder) {
    Eigen::MatrixXd shifted = result.entries;
    if (jitter > 0.0) shifted.diagonal().array() += jitter;
    Eigen::LLT<Eigen::MatrixXd> llt(shifted);
    if (llt.info() == Eigen::Success) {
      result.chol = llt.matrixL();
      result.jitter_applied = jitter;
      result.log_det = 2.0 * result.chol.diagonal().array().log().sum();
      return result;
    }
  }
  throw ConditioningError("covariance matrix is not positive definite after jitter",
                          ladder);
}

}  // namespace cgp
