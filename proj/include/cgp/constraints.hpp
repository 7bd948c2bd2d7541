#pragma once

#include <Eigen/Dense>
#include <Eigen/SparseCore>
#include <limits>
#include <span>
#include <string>
#include <vector>

namespace cgp {

// Knot grid of the piecewise-affine surrogate. Knots are strictly increasing,
// include both 0 and 1, and there are at least two of them.
class KnotModel {
 public:
  explicit KnotModel(std::vector<double> knots);
  static KnotModel equispaced(int m);

  int size() const { return static_cast<int>(knots_.size()); }
  const std::vector<double>& knots() const { return knots_; }

 private:
  std::vector<double> knots_;
};

// Default knot count used when a caller does not choose one.
inline constexpr int kDefaultKnotCount = 300;

// Piecewise-affine evaluation at x in [0,1]; exact at knots.
double interpolate(std::span<const double> knot_values, const KnotModel& knots,
                   double x);

// Row r maps knot values to the interpolant at xs[r]; rows have at most two
// non-zeros and sum to one.
Eigen::MatrixXd interpolation_matrix(const KnotModel& knots,
                                     std::span<const double> xs);

enum class ConstraintKind { Bounds, Monotone, Convex };

std::string to_string(ConstraintKind kind);
ConstraintKind constraint_kind_from_string(const std::string& name);

// Linear description of the feasible set: lower <= matrix * c <= upper,
// all inequalities weak. Infinities mark one-sided rows.
struct ConstraintSpec {
  ConstraintKind kind = ConstraintKind::Bounds;
  Eigen::SparseMatrix<double> matrix;  // rows x m
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;

  int dimension() const { return static_cast<int>(matrix.cols()); }
  int rows() const { return static_cast<int>(matrix.rows()); }
};

// Bounds: identity rows with [lower, upper]. Monotone: consecutive
// differences >= 0 (m-1 rows). Convex: divided second differences >= 0
// (m-2 rows); lower/upper are ignored for the latter two.
ConstraintSpec build_constraints(
    ConstraintKind kind, const KnotModel& knots,
    double lower = -std::numeric_limits<double>::infinity(),
    double upper = std::numeric_limits<double>::infinity());

bool is_feasible(const ConstraintSpec& constraint,
                 const Eigen::VectorXd& knot_values);

// Weighted L2 projection onto non-decreasing sequences (pool adjacent
// violators).
Eigen::VectorXd isotonic_fit(const Eigen::VectorXd& values,
                             const Eigen::VectorXd& weights);

// Nearest-point style repair used to start samplers: clamping for Bounds,
// pool-adjacent-violators on values for Monotone and on slopes for Convex.
// Output is always feasible; feasible input comes back unchanged.
Eigen::VectorXd feasible_projection(const ConstraintSpec& constraint,
                                    const KnotModel& knots,
                                    const Eigen::VectorXd& values);

}  // namespace cgp
