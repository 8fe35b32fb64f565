#include "erobot/gradflow.hpp"

#include <cmath>

#include "erobot/divergence.hpp"

namespace erobot {

void LossSpec::validate() const {
  switch (kind) {
    case LossKind::debiased_sinkhorn:
    case LossKind::mmd_trunc_laplace:
      require_positive(epsilon, "epsilon");
      require_positive(lambda, "lambda");
      break;
    case LossKind::mmd_gaussian:
      require_positive(sigma, "sigma");
      break;
  }
  solver.validate();
}

LossKind parse_loss_kind(const std::string& name) {
  if (name == "debiased_sinkhorn") return LossKind::debiased_sinkhorn;
  if (name == "mmd_trunc_laplace") return LossKind::mmd_trunc_laplace;
  if (name == "mmd_gaussian") return LossKind::mmd_gaussian;
  throw std::invalid_argument("unknown loss kind '" + name +
                              "' (expected debiased_sinkhorn, mmd_trunc_laplace or mmd_gaussian)");
}

std::string to_string(LossKind kind) {
  switch (kind) {
    case LossKind::debiased_sinkhorn: return "debiased_sinkhorn";
    case LossKind::mmd_trunc_laplace: return "mmd_trunc_laplace";
    case LossKind::mmd_gaussian: return "mmd_gaussian";
  }
  return "?";
}

namespace {

// sum_j w_ij (x_i - y_j), row by row.
Matrix weighted_pull(const Matrix& w, const Matrix& x, const Matrix& y) {
  return w.rowwise().sum().asDiagonal() * x - w * y;
}

// w_ij * g(x_i, y_j) weights: w_ij / d_ij inside (0, 2 lambda), 0 elsewhere.
Matrix unit_weights(const Matrix& w, const Matrix& dist, double lambda) {
  const double cap = 2.0 * lambda;
  return w.binaryExpr(dist, [cap](double a, double d) {
    return (d > 0.0 && d < cap) ? a / d : 0.0;
  });
}

Matrix gaussian_kernel(const Matrix& x, const Matrix& y, double sigma) {
  const Matrix d = pairwise_cost(PointCloud(x), PointCloud(y)).entries;
  return (-d.array().square() / (2.0 * sigma * sigma)).exp().matrix();
}

double gaussian_mmd_half(const DiscreteMeasure& a, const DiscreteMeasure& b, double sigma) {
  const Matrix& x = a.cloud().points();
  const Matrix& y = b.cloud().points();
  const Vector& p = a.weights();
  const Vector& q = b.weights();
  return 0.5 * (p.dot(gaussian_kernel(x, x, sigma) * p) + q.dot(gaussian_kernel(y, y, sigma) * q) -
                2.0 * p.dot(gaussian_kernel(x, y, sigma) * q));
}

struct Evaluation {
  double value = 0.0;
  Matrix grad;
};

// `w_target` caches the target self cost for the debiased loss (NaN = not yet known).
Evaluation evaluate(const DiscreteMeasure& source, const DiscreteMeasure& target,
                    const LossSpec& spec, double* w_target) {
  const Matrix& x = source.cloud().points();
  const Matrix& y = target.cloud().points();
  const Vector& mu = source.weights();
  const Vector& nu = target.weights();
  Evaluation out;

  switch (spec.kind) {
    case LossKind::debiased_sinkhorn: {
      // Global minimum. Two solves at finite tolerance would leave a small
      // spurious gradient that the |x - y| kink then amplifies.
      if (source.cloud() == target.cloud() && mu == nu) {
        out.grad = Matrix::Zero(x.rows(), x.cols());
        break;
      }
      const double eps = spec.epsilon;
      const CostMatrix dxy = pairwise_cost(source.cloud(), target.cloud());
      const CostMatrix cxy = truncate(dxy, spec.lambda);
      const SinkhornSolution sol = solve(mu, nu, cxy, eps, spec.solver);
      if (!sol.converged) {
        throw NumericalError("cross Sinkhorn solve did not converge: marginal error " +
                             std::to_string(sol.marginal_error) + " after " +
                             std::to_string(sol.iterations) + " iterations");
      }
      const CostMatrix dxx = pairwise_cost(source.cloud(), source.cloud());
      const CostMatrix cxx = truncate(dxx, spec.lambda);
      const SymmetricSolution self = symmetric_solve(mu, cxx, eps, spec.solver);
      if (!self.converged) {
        throw NumericalError("self Sinkhorn solve did not converge: residual " +
                             std::to_string(self.residual) + " after " +
                             std::to_string(self.iterations) + " iterations");
      }
      if (w_target == nullptr || std::isnan(*w_target)) {
        bool ok = false;
        const double w = self_cost(target, eps, spec.lambda, spec.solver, &ok);
        if (!ok) throw NumericalError("target self Sinkhorn solve did not converge");
        if (w_target) *w_target = w;
        out.value = -0.5 * w;
      } else {
        out.value = -0.5 * *w_target;
      }
      out.value += dual_value(sol, mu, nu) - mu.dot(self.potential);

      const Matrix pi = plan(sol, mu, nu, cxy, eps);
      const Vector& f = self.potential;
      Matrix pi_self = ((-cxx.entries).colwise() + f).rowwise() + f.transpose();
      pi_self = mu.asDiagonal() * (pi_self.array() / eps).exp().matrix() * mu.asDiagonal();
      out.grad = weighted_pull(unit_weights(pi, dxy.entries, spec.lambda), x, y) -
                 weighted_pull(unit_weights(pi_self, dxx.entries, spec.lambda), x, x);
      out.grad = mu.cwiseInverse().asDiagonal() * out.grad;
      break;
    }
    case LossKind::mmd_trunc_laplace: {
      const double eps = spec.epsilon;
      out.value = 0.5 * mmd_sq_kernel(source, target, eps, spec.lambda);
      const Matrix dxy = pairwise_cost(source.cloud(), target.cloud()).entries;
      const Matrix dxx = pairwise_cost(source.cloud(), source.cloud()).entries;
      const auto kernel = [&](const Matrix& d) {
        return (-d.array().min(2.0 * spec.lambda) / eps).exp().matrix();
      };
      // grad_x k(x, y) = -(k / eps) g(x, y)
      const Matrix wxx = unit_weights(kernel(dxx) * mu.asDiagonal(), dxx, spec.lambda) / eps;
      const Matrix wxy = unit_weights(kernel(dxy) * nu.asDiagonal(), dxy, spec.lambda) / eps;
      out.grad = weighted_pull(wxy, x, y) - weighted_pull(wxx, x, x);
      break;
    }
    case LossKind::mmd_gaussian: {
      const double s2 = spec.sigma * spec.sigma;
      out.value = gaussian_mmd_half(source, target, spec.sigma);
      // grad_x k(x, y) = -k (x - y) / sigma^2
      const Matrix wxx = gaussian_kernel(x, x, spec.sigma) * mu.asDiagonal() / s2;
      const Matrix wxy = gaussian_kernel(x, y, spec.sigma) * nu.asDiagonal() / s2;
      out.grad = weighted_pull(wxy, x, y) - weighted_pull(wxx, x, x);
      break;
    }
  }
  return out;
}

void check_pair(const DiscreteMeasure& source, const DiscreteMeasure& target, const LossSpec& spec) {
  spec.validate();
  require_same_dim(source.dim(), target.dim(), "loss");
}

}  // namespace

double loss_value(const DiscreteMeasure& source, const DiscreteMeasure& target,
                  const LossSpec& spec) {
  check_pair(source, target, spec);
  switch (spec.kind) {
    case LossKind::debiased_sinkhorn:
      return robust_sinkhorn_divergence(source, target, spec.epsilon, spec.lambda, spec.solver)
          .value;
    case LossKind::mmd_trunc_laplace:
      return 0.5 * mmd_sq_kernel(source, target, spec.epsilon, spec.lambda);
    case LossKind::mmd_gaussian:
      return gaussian_mmd_half(source, target, spec.sigma);
  }
  return 0.0;
}

Matrix loss_gradient(const DiscreteMeasure& source, const DiscreteMeasure& target,
                     const LossSpec& spec) {
  check_pair(source, target, spec);
  if ((source.weights().array() <= 0.0).any()) {
    throw std::invalid_argument("loss_gradient needs strictly positive source weights");
  }
  return evaluate(source, target, spec, nullptr).grad;
}

FlowTrajectory euler_flow(const DiscreteMeasure& source, const DiscreteMeasure& target,
                          const LossSpec& spec, double tau, int steps) {
  check_pair(source, target, spec);
  require_positive(tau, "tau");
  if (steps < 1) throw std::invalid_argument("steps must be positive");
  if ((source.weights().array() <= 0.0).any()) {
    throw std::invalid_argument("euler_flow needs strictly positive source weights");
  }

  FlowTrajectory traj;
  traj.tau = tau;
  double w_target = std::nan("");
  DiscreteMeasure current = source;
  for (int k = 0; k <= steps; ++k) {
    Evaluation e;
    try {
      e = evaluate(current, target, spec, &w_target);
    } catch (const NumericalError& err) {
      traj.completed = false;
      traj.failed_step = k;
      traj.error = err.what();
      traj.frames.push_back(current.cloud());
      traj.loss_values.push_back(std::nan(""));
      return traj;
    }
    traj.frames.push_back(current.cloud());
    traj.loss_values.push_back(e.value);
    if (k == steps) break;
    Matrix next = current.cloud().points() - tau * e.grad;
    current = DiscreteMeasure(PointCloud(std::move(next)), source.weights());
  }
  return traj;
}

}  // namespace erobot
