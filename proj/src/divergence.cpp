#include "erobot/divergence.hpp"

#include <algorithm>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

namespace erobot {

double self_cost(const DiscreteMeasure& mu, double epsilon, double lambda, const SolverOptions& opts,
                 bool* converged) {
  const CostMatrix c = truncated_cost(mu.cloud(), mu.cloud(), lambda);
  const SymmetricSolution s = symmetric_solve(mu.weights(), c, epsilon, opts);
  if (converged) *converged = s.converged;
  return 2.0 * mu.weights().dot(s.potential);
}

DivergenceReport robust_sinkhorn_divergence(const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                                            double epsilon, double lambda,
                                            const SolverOptions& opts) {
  require_same_dim(mu.dim(), nu.dim(), "robust_sinkhorn_divergence");
  require_positive(epsilon, "epsilon");
  require_positive(lambda, "lambda");

  DivergenceReport r;
  r.epsilon = epsilon;
  r.lambda = lambda;

  const CostMatrix cxy = truncated_cost(mu.cloud(), nu.cloud(), lambda);
  const SinkhornSolution sol = solve(mu, nu, cxy, epsilon, opts);
  r.w_mu_nu = dual_value(sol, mu.weights(), nu.weights());

  bool ok_mu = false, ok_nu = false;
  r.w_mu_mu = self_cost(mu, epsilon, lambda, opts, &ok_mu);
  r.w_nu_nu = self_cost(nu, epsilon, lambda, opts, &ok_nu);
  r.value = r.w_mu_nu - 0.5 * (r.w_mu_mu + r.w_nu_nu);
  r.converged = sol.converged && ok_mu && ok_nu;
  return r;
}

namespace {

double quad(const Vector& a, const Matrix& m, const Vector& b) { return a.dot(m * b); }

}  // namespace

double mmd_sq_neg_cost(const DiscreteMeasure& mu, const DiscreteMeasure& nu, double lambda) {
  require_same_dim(mu.dim(), nu.dim(), "mmd_sq_neg_cost");
  const Matrix cxy = truncated_cost(mu.cloud(), nu.cloud(), lambda).entries;
  const Matrix cxx = truncated_cost(mu.cloud(), mu.cloud(), lambda).entries;
  const Matrix cyy = truncated_cost(nu.cloud(), nu.cloud(), lambda).entries;
  const Vector& a = mu.weights();
  const Vector& b = nu.weights();
  return 2.0 * quad(a, cxy, b) - quad(a, cxx, a) - quad(b, cyy, b);
}

double mmd_sq_kernel(const DiscreteMeasure& mu, const DiscreteMeasure& nu, double epsilon,
                     double lambda) {
  require_same_dim(mu.dim(), nu.dim(), "mmd_sq_kernel");
  const auto kern = [&](const PointCloud& x, const PointCloud& y) {
    return gibbs_kernel(truncated_cost(x, y, lambda), epsilon).entries;
  };
  const Vector& a = mu.weights();
  const Vector& b = nu.weights();
  return quad(a, kern(mu.cloud(), mu.cloud()), a) + quad(b, kern(nu.cloud(), nu.cloud()), b) -
         2.0 * quad(a, kern(mu.cloud(), nu.cloud()), b);
}

double negentropy(const DiscreteMeasure& mu, double epsilon, double lambda,
                  const SolverOptions& opts) {
  return -0.5 * self_cost(mu, epsilon, lambda, opts);
}

double hausdorff_divergence(const DiscreteMeasure& mu, const DiscreteMeasure& nu, double epsilon,
                            double lambda, const SolverOptions& opts) {
  if (!(mu.cloud() == nu.cloud())) {
    throw std::invalid_argument(
        "hausdorff_divergence needs both measures on the same atoms; re-grid them onto a common "
        "cloud (zero weights allowed)");
  }
  const CostMatrix c = truncated_cost(mu.cloud(), mu.cloud(), lambda);
  const Vector f_mu = symmetric_solve(mu.weights(), c, epsilon, opts).potential;
  const Vector f_nu = symmetric_solve(nu.weights(), c, epsilon, opts).potential;
  const Vector grad_diff = -0.5 * f_mu + 0.5 * f_nu;
  return 0.5 * (mu.weights() - nu.weights()).dot(grad_diff);
}

double exact_robot_small(const Vector& mu, const Vector& nu, const CostMatrix& cost) {
  const Eigen::Index n = mu.size();
  if (nu.size() != n || cost.rows() != n || cost.cols() != n) {
    throw std::invalid_argument("exact_robot_small: needs n == m and an n x n cost matrix");
  }
  if (n > 8) {
    throw std::invalid_argument("exact_robot_small: n = " + std::to_string(n) +
                                " is too large to enumerate (max 8)");
  }
  const double u = 1.0 / static_cast<double>(n);
  if (((mu.array() - u).abs() > 1e-12).any() || ((nu.array() - u).abs() > 1e-12).any()) {
    throw std::invalid_argument("exact_robot_small: only uniform weights are supported");
  }
  if (!cost.truncated()) {
    throw std::invalid_argument("exact_robot_small expects a truncated cost matrix");
  }
  std::vector<int> perm(static_cast<std::size_t>(n));
  std::iota(perm.begin(), perm.end(), 0);
  double best = std::numeric_limits<double>::infinity();
  do {
    double total = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) total += cost.entries(i, perm[static_cast<std::size_t>(i)]);
    best = std::min(best, total);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best * u;
}

double exact_robot_small(const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                         const CostMatrix& cost) {
  return exact_robot_small(mu.weights(), nu.weights(), cost);
}

}  // namespace erobot
