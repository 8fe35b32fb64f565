#include "erobot/core.hpp"

#include <cmath>
#include <string>

namespace erobot {

void require_positive(double value, const char* name) {
  if (!(value > 0.0) || !std::isfinite(value)) {
    throw std::invalid_argument(std::string(name) + " must be a positive finite number, got " +
                                std::to_string(value));
  }
}

void require_same_dim(Eigen::Index a, Eigen::Index b, const char* what) {
  if (a != b) {
    throw std::invalid_argument(std::string(what) + ": dimension mismatch (" + std::to_string(a) +
                                " vs " + std::to_string(b) + ")");
  }
}

PointCloud::PointCloud(Matrix points) : points_(std::move(points)) {
  if (points_.rows() < 1) throw std::invalid_argument("point cloud must contain at least one point");
  if (points_.cols() < 1) throw std::invalid_argument("point cloud dimension must be at least 1");
  if (!points_.allFinite()) throw std::invalid_argument("point cloud contains non-finite coordinates");
}

DiscreteMeasure::DiscreteMeasure(PointCloud cloud, Vector weights)
    : cloud_(std::move(cloud)), weights_(std::move(weights)) {
  if (weights_.size() != cloud_.size()) {
    throw std::invalid_argument("weight vector length " + std::to_string(weights_.size()) +
                                " does not match cloud size " + std::to_string(cloud_.size()));
  }
  if (!weights_.allFinite() || (weights_.array() < 0.0).any()) {
    throw std::invalid_argument("weights must be finite and non-negative");
  }
  const double total = weights_.sum();
  if (std::abs(total - 1.0) > 1e-9) {
    throw std::invalid_argument("weights sum to " + std::to_string(total) + ", expected 1");
  }
  weights_ /= total;
}

CostMatrix pairwise_cost(const PointCloud& x, const PointCloud& y) {
  require_same_dim(x.dim(), y.dim(), "pairwise_cost");
  const Matrix& xs = x.points();
  const Matrix& ys = y.points();
  Matrix d(xs.rows(), ys.rows());
  for (Eigen::Index j = 0; j < ys.rows(); ++j) {
    d.col(j) = (xs.rowwise() - ys.row(j)).rowwise().squaredNorm().cwiseSqrt();
  }
  return CostMatrix{std::move(d), std::nullopt};
}

CostMatrix truncate(const CostMatrix& cost, double lambda) {
  require_positive(lambda, "lambda");
  return CostMatrix{cost.entries.cwiseMin(2.0 * lambda), lambda};
}

CostMatrix truncated_cost(const PointCloud& x, const PointCloud& y, double lambda) {
  return truncate(pairwise_cost(x, y), lambda);
}

KernelMatrix gibbs_kernel(const CostMatrix& cost, double epsilon) {
  require_positive(epsilon, "epsilon");
  if (!cost.truncated()) {
    throw std::invalid_argument("gibbs_kernel requires a truncated cost matrix (call truncate first)");
  }
  return KernelMatrix{(-cost.entries.array() / epsilon).exp().matrix(), epsilon, *cost.lambda};
}

DiscreteMeasure uniform_measure(const PointCloud& cloud) {
  const auto n = cloud.size();
  return DiscreteMeasure(cloud, Vector::Constant(n, 1.0 / static_cast<double>(n)));
}

}  // namespace erobot
