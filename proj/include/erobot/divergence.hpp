#pragma once

#include "erobot/core.hpp"
#include "erobot/sinkhorn.hpp"

namespace erobot {

struct DivergenceReport {
  double value = 0.0;  // w_mu_nu - (w_mu_mu + w_nu_nu) / 2
  double w_mu_nu = 0.0;
  double w_mu_mu = 0.0;
  double w_nu_nu = 0.0;
  double epsilon = 0.0;
  double lambda = 0.0;
  bool converged = false;
};

/// Entropic robust cost W(mu, mu) of a measure against itself, 2 * sum(mu * f).
double self_cost(const DiscreteMeasure& mu, double epsilon, double lambda,
                 const SolverOptions& opts = {}, bool* converged = nullptr);

/// Debiased robust Sinkhorn divergence. The cross term comes from `solve`,
/// the two self terms from `symmetric_solve`.
DivergenceReport robust_sinkhorn_divergence(const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                                            double epsilon, double lambda,
                                            const SolverOptions& opts = {});

/// Squared MMD with the conditionally positive kernel -c_lambda:
/// 2<mu, C nu> - <mu, C mu> - <nu, C nu>.
double mmd_sq_neg_cost(const DiscreteMeasure& mu, const DiscreteMeasure& nu, double lambda);

/// Squared MMD with the truncated Laplacian kernel exp(-c_lambda / eps).
double mmd_sq_kernel(const DiscreteMeasure& mu, const DiscreteMeasure& nu, double epsilon,
                     double lambda);

/// -W(mu, mu) / 2.
double negentropy(const DiscreteMeasure& mu, double epsilon, double lambda,
                  const SolverOptions& opts = {});

/// Bregman-type pairing <mu - nu, grad F(mu) - grad F(nu)> / 2 with
/// grad F = -f / 2. Both measures must live on the same cloud; put them on a
/// shared grid (zero weights are fine) before calling.
double hausdorff_divergence(const DiscreteMeasure& mu, const DiscreteMeasure& nu, double epsilon,
                            double lambda, const SolverOptions& opts = {});

/// Unregularized robust OT cost by brute force over permutations. Only for
/// uniform weights with n == m <= 8.
double exact_robot_small(const Vector& mu, const Vector& nu, const CostMatrix& cost);
double exact_robot_small(const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                         const CostMatrix& cost);

}  // namespace erobot
