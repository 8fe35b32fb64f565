#pragma once

#include "erobot/core.hpp"

namespace erobot {

/// How the Sinkhorn updates are carried out.
///
/// `log_domain` runs softmin updates on the potentials and never overflows.
/// `scaling` runs the multiplicative u/v updates on exp(potential / eps),
/// which is much cheaper per iteration but only safe when max(C)/eps is
/// moderate. `automatic` picks scaling when max(C)/eps <= 30 and falls back
/// to the log domain if the scalings ever leave the representable range.
enum class UpdateRule { automatic, log_domain, scaling };

struct SolverOptions {
  int max_iter = 10000;
  double tol = 1e-6;  // L1 marginal violation
  int check_every = 10;
  UpdateRule rule = UpdateRule::automatic;
  // Warm-start the log-domain sweeps along a decreasing epsilon schedule when
  // max(C)/eps > 100. Off by default. Meant for nearly unregularized problems
  // with huge costs, where plain sweeps need 1e5 iterations or more.
  bool epsilon_scaling = false;

  void validate() const;
};

/// Potentials are expressed in cost units: the optimal plan is
///   pi_ij = mu_i nu_j exp((phi_i + psi_j - C_ij) / epsilon)
/// and the additive-constant gauge is fixed by sum(mu * phi) == sum(nu * psi).
struct SinkhornSolution {
  Vector phi;
  Vector psi;
  int iterations = 0;
  double marginal_error = 0.0;
  bool converged = false;
  double epsilon = 0.0;
  double lambda = 0.0;
};

SinkhornSolution solve(const Vector& mu, const Vector& nu, const CostMatrix& cost, double epsilon,
                       const SolverOptions& opts = {});
SinkhornSolution solve(const DiscreteMeasure& mu, const DiscreteMeasure& nu, const CostMatrix& cost,
                       double epsilon, const SolverOptions& opts = {});

/// Literal multiplicative iteration v <- nu / (K^T u), u <- mu / (K v) with a
/// precomputed kernel. Overflows for small epsilon; kept as a reference path
/// for cross-checking `solve`. Potentials are recovered as
/// phi = eps * log(u / mu) and psi = eps * log(v / nu) on positive atoms.
SinkhornSolution solve_reference(const Vector& mu, const Vector& nu, const CostMatrix& cost,
                                 double epsilon, const SolverOptions& opts = {});

Matrix plan(const SinkhornSolution& sol, const Vector& mu, const Vector& nu, const CostMatrix& cost,
            double epsilon);

/// sum_ij pi_ij C_ij + eps * sum_ij pi_ij log(pi_ij / (mu_i nu_j)), with 0 log 0 = 0.
double primal_value(const Matrix& pi, const CostMatrix& cost, const Vector& mu, const Vector& nu,
                    double epsilon);

/// sum_i mu_i phi_i + sum_j nu_j psi_j.
double dual_value(const SinkhornSolution& sol, const Vector& mu, const Vector& nu);

/// L1 violation of both marginals of `pi`.
double marginal_violation(const Matrix& pi, const Vector& mu, const Vector& nu);

struct SymmetricSolution {
  Vector potential;
  int iterations = 0;
  double residual = 0.0;
  bool converged = false;
};

/// Solves the self-transport problem (mu against itself) for the single
/// potential f = phi = psi with the damped update f <- (f + T f) / 2.
///
/// `residual` is the L1 violation of one marginal of the plan built from f.
/// Atoms with zero weight receive the softmin extension f_k = (T f)_k.
SymmetricSolution symmetric_solve(const Vector& mu, const CostMatrix& cost, double epsilon,
                                  const SolverOptions& opts = {});

/// Entropic self-cost W_eps(mu, mu) = 2 sum_i mu_i f_i evaluated without
/// storing the n x n cost matrix: distances and kernel rows are recomputed on
/// every sweep. Intended for large reference samples.
SymmetricSolution symmetric_solve_streaming(const DiscreteMeasure& mu, double epsilon, double lambda,
                                            const SolverOptions& opts = {});

}  // namespace erobot
