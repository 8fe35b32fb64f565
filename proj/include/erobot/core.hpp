#pragma once

#include <Eigen/Dense>

#include <optional>

#include "erobot/errors.hpp"

namespace erobot {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// A finite set of points in R^d, stored one point per row.
class PointCloud {
 public:
  explicit PointCloud(Matrix points);

  Eigen::Index size() const { return points_.rows(); }
  Eigen::Index dim() const { return points_.cols(); }
  const Matrix& points() const { return points_; }
  auto point(Eigen::Index i) const { return points_.row(i); }

  bool operator==(const PointCloud& other) const {
    return points_.rows() == other.points_.rows() &&
           points_.cols() == other.points_.cols() && points_ == other.points_;
  }

 private:
  Matrix points_;
};

/// Weighted point cloud with weights on the probability simplex.
///
/// Weights within 1e-9 of summing to one are renormalized on construction;
/// a larger deviation is rejected. Zero-weight atoms are kept so that atom
/// indices stay aligned with the caller's data.
class DiscreteMeasure {
 public:
  DiscreteMeasure(PointCloud cloud, Vector weights);

  const PointCloud& cloud() const { return cloud_; }
  const Vector& weights() const { return weights_; }
  Eigen::Index size() const { return cloud_.size(); }
  Eigen::Index dim() const { return cloud_.dim(); }

 private:
  PointCloud cloud_;
  Vector weights_;
};

/// Pairwise ground costs. `lambda` is set once the matrix has been truncated
/// at 2*lambda.
struct CostMatrix {
  Matrix entries;
  std::optional<double> lambda;

  Eigen::Index rows() const { return entries.rows(); }
  Eigen::Index cols() const { return entries.cols(); }
  bool truncated() const { return lambda.has_value(); }
};

/// Truncated Laplacian (Gibbs) kernel exp(-c_lambda / epsilon).
struct KernelMatrix {
  Matrix entries;
  double epsilon = 0.0;
  double lambda = 0.0;
};

/// Euclidean distances between every row of `x` and every row of `y`.
CostMatrix pairwise_cost(const PointCloud& x, const PointCloud& y);

/// Replaces each entry by min(entry, 2 * lambda).
///
/// The threshold is 2*lambda, not lambda: this is the robust cost
/// min(d(x, y), 2*lambda).
CostMatrix truncate(const CostMatrix& cost, double lambda);

/// Shorthand for truncate(pairwise_cost(x, y), lambda).
CostMatrix truncated_cost(const PointCloud& x, const PointCloud& y, double lambda);

KernelMatrix gibbs_kernel(const CostMatrix& cost, double epsilon);

DiscreteMeasure uniform_measure(const PointCloud& cloud);

// Shared argument checks.
void require_positive(double value, const char* name);
void require_same_dim(Eigen::Index a, Eigen::Index b, const char* what);

}  // namespace erobot
