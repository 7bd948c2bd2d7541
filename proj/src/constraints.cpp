#include "cgp/constraints.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace cgp {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}  // namespace

Eigen::VectorXd isotonic_fit(const Eigen::VectorXd& values,
                             const Eigen::VectorXd& weights) {
  struct Block {
    double mean;
    double weight;
    int count;
  };
  std::vector<Block> blocks;
  blocks.reserve(values.size());
  for (int i = 0; i < values.size(); ++i) {
    Block current{values[i], weights[i], 1};
    while (!blocks.empty() && blocks.back().mean > current.mean) {
      const Block& prev = blocks.back();
      const double total = prev.weight + current.weight;
      current.mean = (prev.mean * prev.weight + current.mean * current.weight) / total;
      current.weight = total;
      current.count += prev.count;
      blocks.pop_back();
    }
    blocks.push_back(current);
  }
  Eigen::VectorXd out(values.size());
  int pos = 0;
  for (const Block& block : blocks)
    for (int k = 0; k < block.count; ++k) out[pos++] = block.mean;
  return out;
}

KnotModel::KnotModel(std::vector<double> knots) : knots_(std::move(knots)) {
  if (knots_.size() < 2) throw std::invalid_argument("knot model needs m >= 2");
  for (size_t i = 1; i < knots_.size(); ++i)
    if (!(knots_[i] > knots_[i - 1]))
      throw std::invalid_argument("knots must be strictly increasing");
  if (knots_.front() != 0.0 || knots_.back() != 1.0)
    throw std::invalid_argument("knots must include 0 and 1");
}

KnotModel KnotModel::equispaced(int m) {
  if (m < 2) throw std::invalid_argument("knot model needs m >= 2");
  std::vector<double> knots(m);
  for (int j = 0; j < m; ++j) knots[j] = double(j) / (m - 1);
  knots.front() = 0.0;
  knots.back() = 1.0;
  return KnotModel(std::move(knots));
}

double interpolate(std::span<const double> knot_values, const KnotModel& knots,
                   double x) {
  const auto& t = knots.knots();
  if (knot_values.size() != t.size())
    throw std::invalid_argument("knot value count mismatch");
  if (!(x >= 0.0 && x <= 1.0))
    throw std::domain_error("interpolation point outside [0,1]");
  const auto it = std::upper_bound(t.begin(), t.end(), x);
  if (it == t.end()) return knot_values.back();  // x == 1
  const int hi = static_cast<int>(it - t.begin());
  if (hi == 0) return knot_values.front();  // x == 0 guarded by domain check
  const int lo = hi - 1;
  if (x == t[lo]) return knot_values[lo];
  const double w = (x - t[lo]) / (t[hi] - t[lo]);
  return (1.0 - w) * knot_values[lo] + w * knot_values[hi];
}

Eigen::MatrixXd interpolation_matrix(const KnotModel& knots,
                                     std::span<const double> xs) {
  const auto& t = knots.knots();
  Eigen::MatrixXd mat = Eigen::MatrixXd::Zero(xs.size(), t.size());
  for (size_t r = 0; r < xs.size(); ++r) {
    const double x = xs[r];
    if (!(x >= 0.0 && x <= 1.0))
      throw std::domain_error("interpolation point outside [0,1]");
    const auto it = std::upper_bound(t.begin(), t.end(), x);
    if (it == t.end()) {
      mat(r, t.size() - 1) = 1.0;
      continue;
    }
    const int hi = static_cast<int>(it - t.begin());
    const int lo = hi - 1;
    if (x == t[lo]) {
      mat(r, lo) = 1.0;
      continue;
    }
    const double w = (x - t[lo]) / (t[hi] - t[lo]);
    mat(r, lo) = 1.0 - w;
    mat(r, hi) = w;
  }
  return mat;
}

std::string to_string(ConstraintKind kind) {
  switch (kind) {
    case ConstraintKind::Bounds: return "bounds";
    case ConstraintKind::Monotone: return "monotone";
    case ConstraintKind::Convex: return "convex";
  }
  return "unknown";
}

ConstraintKind constraint_kind_from_string(const std::string& name) {
  if (name == "bounds") return ConstraintKind::Bounds;
  if (name == "monotone") return ConstraintKind::Monotone;
  if (name == "convex") return ConstraintKind::Convex;
  throw std::invalid_argument("unknown constraint kind: " + name);
}

ConstraintSpec build_constraints(ConstraintKind kind, const KnotModel& knots,
                                 double lower, double upper) {
  const int m = knots.size();
  ConstraintSpec spec;
  spec.kind = kind;
  std::vector<Eigen::Triplet<double>> triplets;

  switch (kind) {
    case ConstraintKind::Bounds: {
      if (!(lower < upper))
        throw std::invalid_argument("bounds require lower < upper");
      spec.matrix.resize(m, m);
      for (int j = 0; j < m; ++j) triplets.emplace_back(j, j, 1.0);
      spec.lower = Eigen::VectorXd::Constant(m, lower);
      spec.upper = Eigen::VectorXd::Constant(m, upper);
      break;
    }
    case ConstraintKind::Monotone: {
      spec.matrix.resize(m - 1, m);
      for (int j = 0; j + 1 < m; ++j) {
        triplets.emplace_back(j, j, -1.0);
        triplets.emplace_back(j, j + 1, 1.0);
      }
      spec.lower = Eigen::VectorXd::Zero(m - 1);
      spec.upper = Eigen::VectorXd::Constant(m - 1, kInf);
      break;
    }
    case ConstraintKind::Convex: {
      if (m < 3)
        throw std::invalid_argument("convexity needs at least 3 knots");
      spec.matrix.resize(m - 2, m);
      const auto& t = knots.knots();
      for (int j = 1; j + 1 < m; ++j) {
        const double h_prev = t[j] - t[j - 1];
        const double h_next = t[j + 1] - t[j];
        // slope(j) - slope(j-1) >= 0 in divided-difference form
        triplets.emplace_back(j - 1, j - 1, 1.0 / h_prev);
        triplets.emplace_back(j - 1, j, -(1.0 / h_prev + 1.0 / h_next));
        triplets.emplace_back(j - 1, j + 1, 1.0 / h_next);
      }
      spec.lower = Eigen::VectorXd::Zero(m - 2);
      spec.upper = Eigen::VectorXd::Constant(m - 2, kInf);
      break;
    }
  }
  spec.matrix.setFromTriplets(triplets.begin(), triplets.end());
  return spec;
}

bool is_feasible(const ConstraintSpec& constraint,
                 const Eigen::VectorXd& knot_values) {
  if (knot_values.size() != constraint.dimension())
    throw std::invalid_argument("knot value dimension mismatch");
  const Eigen::VectorXd v = constraint.matrix * knot_values;
  const auto finite_abs = [](double x) {
    return std::isfinite(x) ? std::abs(x) : 0.0;
  };
  for (int r = 0; r < v.size(); ++r) {
    // Projections and convex combinations of feasible points sit exactly on
    // the boundary, so roundoff must not be allowed to flip the verdict.
    const double slack =
        1e-12 * std::max({1.0, finite_abs(constraint.lower[r]),
                          finite_abs(constraint.upper[r]), finite_abs(v[r])});
    if (!(v[r] >= constraint.lower[r] - slack &&
          v[r] <= constraint.upper[r] + slack))
      return false;
  }
  return true;
}

Eigen::VectorXd feasible_projection(const ConstraintSpec& constraint,
                                    const KnotModel& knots,
                                    const Eigen::VectorXd& values) {
  if (values.size() != constraint.dimension())
    throw std::invalid_argument("knot value dimension mismatch");
  if (is_feasible(constraint, values)) return values;

  const int m = static_cast<int>(values.size());
  switch (constraint.kind) {
    case ConstraintKind::Bounds: {
      Eigen::VectorXd out(m);
      for (int j = 0; j < m; ++j)
        out[j] = std::min(std::max(values[j], constraint.lower[j]),
                          constraint.upper[j]);
      return out;
    }
    case ConstraintKind::Monotone:
      return isotonic_fit(values, Eigen::VectorXd::Ones(m));
    case ConstraintKind::Convex: {
      const auto& t = knots.knots();
      Eigen::VectorXd slopes(m - 1), widths(m - 1);
      for (int j = 0; j + 1 < m; ++j) {
        widths[j] = t[j + 1] - t[j];
        slopes[j] = (values[j + 1] - values[j]) / widths[j];
      }
      const Eigen::VectorXd iso = isotonic_fit(slopes, widths);
      Eigen::VectorXd out(m);
      out[0] = values[0];
      for (int j = 0; j + 1 < m; ++j) out[j + 1] = out[j] + iso[j] * widths[j];
      return out;
    }
  }
  return values;
}

}  // namespace cgp
