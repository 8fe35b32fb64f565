#include "erobot/barycenter.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "detail/lse.hpp"

namespace erobot {

void BarycenterProblem::validate() const {
  if (inputs.empty()) throw std::invalid_argument("barycenter needs at least one input measure");
  const PointCloud& grid = inputs.front().cloud();
  for (std::size_t m = 1; m < inputs.size(); ++m) {
    if (!(inputs[m].cloud() == grid)) {
      throw std::invalid_argument("barycenter input " + std::to_string(m) +
                                  " is not on the same grid as input 0");
    }
  }
  if (alphas.size() != static_cast<Eigen::Index>(inputs.size())) {
    throw std::invalid_argument("barycenter: " + std::to_string(alphas.size()) + " weights for " +
                                std::to_string(inputs.size()) + " inputs");
  }
  if (!alphas.allFinite() || (alphas.array() < 0.0).any()) {
    throw std::invalid_argument("barycenter weights must be finite and non-negative");
  }
  if (std::abs(alphas.sum() - 1.0) > 1e-12) {
    throw std::invalid_argument("barycenter weights must sum to 1");
  }
  require_positive(epsilon, "epsilon");
  require_positive(lambda, "lambda");
  require_positive(tol, "tol");
  if (max_iter <= 0) throw std::invalid_argument("max_iter must be positive");
}

namespace {

struct IbpState {
  Vector bary;
  int iterations = 0;
  double change = std::numeric_limits<double>::infinity();
};

IbpState ibp_scaling(const BarycenterProblem& p, const Matrix& cost) {
  const auto n = cost.rows();
  const auto count = p.inputs.size();
  const Matrix k = (-cost.array() / p.epsilon).exp().matrix();
  std::vector<Vector> u(count, Vector::Ones(n)), kv(count);
  IbpState s;
  s.bary = Vector::Constant(n, 1.0 / static_cast<double>(n));
  Vector log_bary(n);
  while (s.iterations < p.max_iter) {
    ++s.iterations;
    log_bary.setZero();
    for (std::size_t m = 0; m < count; ++m) {
      const Vector ktu = k.transpose() * u[m];
      if ((ktu.array() <= 0.0).any()) {
        throw NumericalError("barycenter kernel product underflowed to 0; increase epsilon or "
                             "shrink the grid spread");
      }
      kv[m] = k * p.inputs[m].weights().cwiseQuotient(ktu);
      if ((kv[m].array() <= 0.0).any()) {
        throw NumericalError("barycenter kernel product K v underflowed to 0; increase epsilon "
                             "or shrink the grid spread");
      }
      if (p.alphas[static_cast<Eigen::Index>(m)] > 0.0) {
        log_bary += p.alphas[static_cast<Eigen::Index>(m)] *
                    (u[m].cwiseProduct(kv[m])).array().log().matrix();
      }
    }
    Vector next = (log_bary.array() - log_bary.maxCoeff()).exp().matrix();
    next /= next.sum();
    for (std::size_t m = 0; m < count; ++m) u[m] = next.cwiseQuotient(kv[m]);
    s.change = (next - s.bary).lpNorm<1>();
    s.bary = std::move(next);
    if (!s.bary.allFinite()) throw NumericalError("barycenter iterate became non-finite");
    if (s.change <= p.tol) break;
  }
  return s;
}

// Same sweep with log u, log v and log-sum-exp kernel products.
IbpState ibp_log(const BarycenterProblem& p, const Matrix& cost) {
  const auto n = cost.rows();
  const auto count = p.inputs.size();
  const Matrix cs = cost / p.epsilon;
  Matrix work(n, n);
  std::vector<Vector> log_u(count, Vector::Zero(n)), log_kv(count), log_mu(count);
  for (std::size_t m = 0; m < count; ++m) log_mu[m] = detail::log_weights(p.inputs[m].weights());
  IbpState s;
  s.bary = Vector::Constant(n, 1.0 / static_cast<double>(n));
  Vector acc(n), lse(n);
  while (s.iterations < p.max_iter) {
    ++s.iterations;
    acc.setZero();
    for (std::size_t m = 0; m < count; ++m) {
      detail::lse_cols(cs, log_u[m], work, lse);
      const Vector log_v = log_mu[m] - lse;
      detail::lse_rows(cs, log_v, work, log_kv[m]);
      if (!log_kv[m].allFinite()) {
        throw NumericalError("barycenter log-kernel product is not finite");
      }
      if (p.alphas[static_cast<Eigen::Index>(m)] > 0.0) {
        acc += p.alphas[static_cast<Eigen::Index>(m)] * (log_u[m] + log_kv[m]);
      }
    }
    const double mx = acc.maxCoeff();
    const double log_norm = mx + std::log((acc.array() - mx).exp().sum());
    const Vector log_next = acc.array() - log_norm;
    for (std::size_t m = 0; m < count; ++m) log_u[m] = log_next - log_kv[m];
    Vector next = log_next.array().exp().matrix();
    s.change = (next - s.bary).lpNorm<1>();
    s.bary = std::move(next);
    if (!s.bary.allFinite()) throw NumericalError("barycenter iterate became non-finite");
    if (s.change <= p.tol) break;
  }
  return s;
}

}  // namespace

BarycenterResult ibp_barycenter(const BarycenterProblem& problem) {
  problem.validate();
  const PointCloud& grid = problem.inputs.front().cloud();
  const Matrix cost = truncated_cost(grid, grid, problem.lambda).entries;
  const bool use_log = problem.epsilon < 0.05 * cost.mean();
  IbpState s = use_log ? ibp_log(problem, cost) : ibp_scaling(problem, cost);
  s.bary /= s.bary.sum();
  return BarycenterResult{DiscreteMeasure(grid, s.bary), s.iterations, s.change,
                          s.change <= problem.tol};
}

DiscreteMeasure interpolate_shapes(const DiscreteMeasure& shape_a, const DiscreteMeasure& shape_b,
                                   double t, double epsilon, double lambda) {
  if (!(t >= 0.0 && t <= 1.0)) {
    throw std::invalid_argument("interpolation weight t must lie in [0, 1], got " +
                                std::to_string(t));
  }
  BarycenterProblem p;
  p.inputs = {shape_a, shape_b};
  p.alphas = Vector(2);
  p.alphas << 1.0 - t, t;
  p.epsilon = epsilon;
  p.lambda = lambda;
  return ibp_barycenter(p).barycenter;
}

PointCloud regular_grid(int rows, int cols) {
  if (rows < 1 || cols < 1) throw std::invalid_argument("grid dimensions must be positive");
  Matrix pts(static_cast<Eigen::Index>(rows) * cols, 2);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      pts(static_cast<Eigen::Index>(r) * cols + c, 0) = r;
      pts(static_cast<Eigen::Index>(r) * cols + c, 1) = c;
    }
  }
  return PointCloud(std::move(pts));
}

}  // namespace erobot
