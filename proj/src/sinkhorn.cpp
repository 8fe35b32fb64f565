#include "erobot/sinkhorn.hpp"

#include "detail/lse.hpp"

#include <cmath>
#include <limits>
#include <string>

namespace erobot {
namespace {

using detail::lse_cols;
using detail::lse_rows;
using detail::log_weights;

constexpr double kScalingRange = 30.0;  // max(C)/eps below which u/v scalings are safe

void check_problem(const Vector& mu, const Vector& nu, const CostMatrix& cost, double epsilon) {
  require_positive(epsilon, "epsilon");
  if (!cost.truncated()) {
    throw std::invalid_argument("Sinkhorn solver expects a truncated cost matrix (call truncate first)");
  }
  if (cost.rows() != mu.size() || cost.cols() != nu.size()) {
    throw std::invalid_argument("cost matrix is " + std::to_string(cost.rows()) + "x" +
                                std::to_string(cost.cols()) + " but marginals have sizes " +
                                std::to_string(mu.size()) + " and " + std::to_string(nu.size()));
  }
  if ((mu.array() < 0).any() || (nu.array() < 0).any() || !(mu.sum() > 0) || !(nu.sum() > 0)) {
    throw std::invalid_argument("marginals must be non-negative with positive mass");
  }
}

// Column marginal L1 error of the plan built from (phi, psi) when psi_next is
// the column update of phi. Plan column sums are nu_j exp((psi_j - psi_next_j)/eps).
double column_error(const Vector& nu, const Vector& psi, const Vector& psi_next, double epsilon) {
  double err = 0.0;
  for (Eigen::Index j = 0; j < nu.size(); ++j) {
    if (nu[j] > 0.0) err += nu[j] * std::abs(std::expm1((psi[j] - psi_next[j]) / epsilon));
  }
  return err;
}

void fix_gauge(const Vector& mu, const Vector& nu, SinkhornSolution& sol) {
  const double shift = 0.5 * (mu.dot(sol.phi) - nu.dot(sol.psi));
  sol.phi.array() -= shift;
  sol.psi.array() += shift;
}

// Log-domain sweeps starting from (phi, psi) at one epsilon. Returns the
// number of iterations used; `err` receives the last column error.
int log_domain_sweeps(const Vector& log_mu, const Vector& log_nu, const Vector& nu,
                      const Matrix& cost, double epsilon, double tol, int max_iter,
                      int check_every, Vector& phi, Vector& psi, double& err) {
  const Matrix cs = cost / epsilon;
  Matrix work(cs.rows(), cs.cols());
  Vector lse, psi_next(nu.size());
  err = std::numeric_limits<double>::infinity();
  int it = 0;
  while (it < max_iter) {
    ++it;
    lse_rows(cs, log_nu + psi / epsilon, work, lse);
    phi = -epsilon * lse;
    lse_cols(cs, log_mu + phi / epsilon, work, lse);
    psi_next = -epsilon * lse;
    if (!phi.allFinite() || !psi_next.allFinite()) {
      throw NumericalError("non-finite potential in log-domain Sinkhorn update at iteration " +
                           std::to_string(it));
    }
    if (it % check_every == 0 || it == max_iter) {
      err = column_error(nu, psi, psi_next, epsilon);
      if (err <= tol) break;
    }
    psi.swap(psi_next);
  }
  return it;
}

// Optional warm start: loose solves along eps_k = (max(C) / 100) * 0.7^k
// bring the potentials close to the target before the full-precision stage.
constexpr double kAnnealFrom = 100.0;
constexpr double kAnnealFactor = 0.7;
constexpr double kAnnealTol = 1e-4;
constexpr int kAnnealSweeps = 1000;

void solve_log_domain(const Vector& mu, const Vector& nu, const Matrix& cost, double epsilon,
                      const SolverOptions& opts, SinkhornSolution& sol) {
  const Vector log_mu = log_weights(mu);
  const Vector log_nu = log_weights(nu);
  Vector phi = Vector::Zero(mu.size());
  Vector psi(nu.size());
  {
    Matrix work(cost.rows(), cost.cols());
    Vector lse;
    lse_cols(cost / epsilon, log_mu, work, lse);
    psi = -epsilon * lse;
  }

  int used = 0;
  double err = 0.0;
  const double max_c = cost.maxCoeff();
  if (opts.epsilon_scaling && max_c / epsilon > kAnnealFrom) {
    psi.setZero();
    for (double e = max_c / kAnnealFrom; e > epsilon && used < opts.max_iter;
         e *= kAnnealFactor) {
      used += log_domain_sweeps(log_mu, log_nu, nu, cost, e, kAnnealTol,
                                std::min(kAnnealSweeps, opts.max_iter - used), opts.check_every,
                                phi, psi, err);
    }
  }
  int it = used;
  if (used < opts.max_iter) {
    it += log_domain_sweeps(log_mu, log_nu, nu, cost, epsilon, opts.tol, opts.max_iter - used,
                            opts.check_every, phi, psi, err);
  }
  sol.phi = std::move(phi);
  sol.psi = std::move(psi);
  sol.iterations = it;
  sol.marginal_error = err;
  sol.converged = err <= opts.tol;
}

// Returns false if the scalings left the representable range.
bool solve_scaling(const Vector& mu, const Vector& nu, const Matrix& cs, double epsilon,
                   const SolverOptions& opts, SinkhornSolution& sol) {
  const Matrix kernel = (-cs.array()).exp().matrix();
  Vector a = Vector::Ones(mu.size());
  Vector b(nu.size()), b_next(nu.size());
  b = (kernel.transpose() * mu.cwiseProduct(a)).cwiseInverse();

  double err = std::numeric_limits<double>::infinity();
  int it = 0;
  while (it < opts.max_iter) {
    ++it;
    a = (kernel * nu.cwiseProduct(b)).cwiseInverse();
    b_next = (kernel.transpose() * mu.cwiseProduct(a)).cwiseInverse();
    if (!a.allFinite() || !b_next.allFinite() || (a.array() <= 0).any() ||
        (b_next.array() <= 0).any()) {
      return false;
    }
    if (it % opts.check_every == 0 || it == opts.max_iter) {
      err = 0.0;
      for (Eigen::Index j = 0; j < nu.size(); ++j) {
        if (nu[j] > 0.0) err += nu[j] * std::abs(b[j] / b_next[j] - 1.0);
      }
      if (err <= opts.tol) break;
    }
    b.swap(b_next);
  }
  sol.phi = epsilon * a.array().log().matrix();
  sol.psi = epsilon * b.array().log().matrix();
  sol.iterations = it;
  sol.marginal_error = err;
  sol.converged = err <= opts.tol;
  return sol.phi.allFinite() && sol.psi.allFinite();
}

Vector symmetric_map_log(const Matrix& cs, const Vector& log_mu, const Vector& f, double epsilon,
                         Matrix& work) {
  Vector lse;
  lse_rows(cs, log_mu + f / epsilon, work, lse);
  return -epsilon * lse;
}

}  // namespace

void SolverOptions::validate() const {
  if (max_iter <= 0) throw std::invalid_argument("max_iter must be positive");
  if (check_every <= 0) throw std::invalid_argument("check_every must be positive");
  require_positive(tol, "tol");
}

SinkhornSolution solve(const Vector& mu, const Vector& nu, const CostMatrix& cost, double epsilon,
                       const SolverOptions& opts) {
  check_problem(mu, nu, cost, epsilon);
  opts.validate();
  const Matrix cs = cost.entries / epsilon;

  SinkhornSolution sol;
  sol.epsilon = epsilon;
  sol.lambda = *cost.lambda;

  bool done = false;
  const bool try_scaling =
      opts.rule == UpdateRule::scaling ||
      (opts.rule == UpdateRule::automatic && cs.maxCoeff() <= kScalingRange);
  if (try_scaling) {
    done = solve_scaling(mu, nu, cs, epsilon, opts, sol);
    if (!done && opts.rule == UpdateRule::scaling) {
      throw NumericalError("scaling Sinkhorn iterations overflowed; use the log-domain rule");
    }
  }
  if (!done) solve_log_domain(mu, nu, cost.entries, epsilon, opts, sol);
  fix_gauge(mu, nu, sol);
  return sol;
}

SinkhornSolution solve(const DiscreteMeasure& mu, const DiscreteMeasure& nu, const CostMatrix& cost,
                       double epsilon, const SolverOptions& opts) {
  return solve(mu.weights(), nu.weights(), cost, epsilon, opts);
}

SinkhornSolution solve_reference(const Vector& mu, const Vector& nu, const CostMatrix& cost,
                                 double epsilon, const SolverOptions& opts) {
  check_problem(mu, nu, cost, epsilon);
  opts.validate();
  const Matrix kernel = (-cost.entries.array() / epsilon).exp().matrix();

  Vector u = Vector::Ones(mu.size());
  Vector v(nu.size()), ktu(nu.size()), kv(mu.size());
  double err = std::numeric_limits<double>::infinity();
  int it = 0;
  while (it < opts.max_iter) {
    ++it;
    ktu = kernel.transpose() * u;
    v = nu.cwiseQuotient(ktu);
    kv = kernel * v;
    u = mu.cwiseQuotient(kv);
    if (it % opts.check_every == 0 || it == opts.max_iter) {
      const Vector col = v.cwiseProduct(kernel.transpose() * u);
      err = (col - nu).lpNorm<1>();
      if (err <= opts.tol) break;
    }
  }
  SinkhornSolution sol;
  // u_i / mu_i = 1 / (K v)_i and v_j / nu_j = 1 / (K^T u_old)_j, which also
  // covers zero-weight atoms.
  sol.phi = -epsilon * kv.array().log().matrix();
  sol.psi = -epsilon * ktu.array().log().matrix();
  if (!sol.phi.allFinite() || !sol.psi.allFinite()) {
    throw NumericalError("reference Sinkhorn iteration under/overflowed; epsilon too small");
  }
  sol.iterations = it;
  sol.marginal_error = err;
  sol.converged = err <= opts.tol;
  sol.epsilon = epsilon;
  sol.lambda = *cost.lambda;
  fix_gauge(mu, nu, sol);
  return sol;
}

Matrix plan(const SinkhornSolution& sol, const Vector& mu, const Vector& nu, const CostMatrix& cost,
            double epsilon) {
  if (sol.phi.size() != mu.size() || sol.psi.size() != nu.size() || cost.rows() != mu.size() ||
      cost.cols() != nu.size()) {
    throw std::invalid_argument("plan: solution, marginals and cost matrix shapes disagree");
  }
  require_positive(epsilon, "epsilon");
  Matrix pi = ((-cost.entries).colwise() + sol.phi).rowwise() + sol.psi.transpose();
  pi = (pi.array() / epsilon).exp().matrix();
  return mu.asDiagonal() * pi * nu.asDiagonal();
}

double primal_value(const Matrix& pi, const CostMatrix& cost, const Vector& mu, const Vector& nu,
                    double epsilon) {
  if (pi.rows() != cost.rows() || pi.cols() != cost.cols() || pi.rows() != mu.size() ||
      pi.cols() != nu.size()) {
    throw std::invalid_argument("primal_value: shape mismatch");
  }
  require_positive(epsilon, "epsilon");
  double transport = 0.0;
  double entropy = 0.0;
  for (Eigen::Index j = 0; j < pi.cols(); ++j) {
    for (Eigen::Index i = 0; i < pi.rows(); ++i) {
      const double p = pi(i, j);
      if (p < 0.0) throw std::invalid_argument("primal_value: plan has negative entries");
      if (p == 0.0) continue;
      const double ref = mu[i] * nu[j];
      if (ref == 0.0) {
        throw std::invalid_argument("primal_value: plan puts mass where mu x nu vanishes");
      }
      transport += p * cost.entries(i, j);
      entropy += p * std::log(p / ref);
    }
  }
  return transport + epsilon * entropy;
}

double dual_value(const SinkhornSolution& sol, const Vector& mu, const Vector& nu) {
  return mu.dot(sol.phi) + nu.dot(sol.psi);
}

double marginal_violation(const Matrix& pi, const Vector& mu, const Vector& nu) {
  return (pi.rowwise().sum() - mu).lpNorm<1>() + (pi.colwise().sum().transpose() - nu).lpNorm<1>();
}

SymmetricSolution symmetric_solve(const Vector& mu, const CostMatrix& cost, double epsilon,
                                  const SolverOptions& opts) {
  check_problem(mu, mu, cost, epsilon);
  opts.validate();
  const Matrix cs = cost.entries / epsilon;
  const Eigen::Index n = mu.size();

  SymmetricSolution out;
  const bool use_scaling =
      opts.rule == UpdateRule::scaling ||
      (opts.rule == UpdateRule::automatic && cs.maxCoeff() <= kScalingRange);

  if (use_scaling) {
    const Matrix kernel = (-cs.array()).exp().matrix();
    Vector g = Vector::Ones(n);
    Vector tg(n);
    int it = 0;
    double res = std::numeric_limits<double>::infinity();
    while (it < opts.max_iter) {
      ++it;
      tg = (kernel * mu.cwiseProduct(g)).cwiseInverse();
      res = 0.0;
      for (Eigen::Index i = 0; i < n; ++i) {
        if (mu[i] > 0.0) res += mu[i] * std::abs(g[i] / tg[i] - 1.0);
      }
      if (res <= opts.tol) break;
      g = g.cwiseProduct(tg).cwiseSqrt();
    }
    if (g.allFinite() && tg.allFinite() && (g.array() > 0).all() && (tg.array() > 0).all()) {
      for (Eigen::Index i = 0; i < n; ++i) {
        if (mu[i] == 0.0) g[i] = tg[i];
      }
      out.potential = epsilon * g.array().log().matrix();
      out.iterations = it;
      out.residual = res;
      out.converged = res <= opts.tol;
      return out;
    }
    if (opts.rule == UpdateRule::scaling) {
      throw NumericalError("scaling symmetric iteration overflowed; use the log-domain rule");
    }
  }

  const Vector log_mu = log_weights(mu);
  Matrix work(n, n);
  Vector f = Vector::Zero(n);
  Vector tf(n);
  int it = 0;
  double res = std::numeric_limits<double>::infinity();
  while (it < opts.max_iter) {
    ++it;
    tf = symmetric_map_log(cs, log_mu, f, epsilon, work);
    if (!tf.allFinite()) {
      throw NumericalError("non-finite potential in symmetric Sinkhorn update");
    }
    res = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      if (mu[i] > 0.0) res += mu[i] * std::abs(std::expm1((f[i] - tf[i]) / epsilon));
    }
    if (res <= opts.tol) break;
    f = 0.5 * (f + tf);
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    if (mu[i] == 0.0) f[i] = tf[i];
  }
  out.potential = std::move(f);
  out.iterations = it;
  out.residual = res;
  out.converged = res <= opts.tol;
  return out;
}

SymmetricSolution symmetric_solve_streaming(const DiscreteMeasure& mu, double epsilon, double lambda,
                                            const SolverOptions& opts) {
  require_positive(epsilon, "epsilon");
  require_positive(lambda, "lambda");
  opts.validate();
  const Matrix& x = mu.cloud().points();
  const Vector& w = mu.weights();
  const Eigen::Index n = x.rows();
  const Vector log_w = log_weights(w);
  const double cap = 2.0 * lambda;

  Eigen::ArrayXd dist2(n), terms(n);
  Vector f = Vector::Zero(n);
  Vector tf(n);
  int it = 0;
  double res = std::numeric_limits<double>::infinity();
  while (it < opts.max_iter) {
    ++it;
    const Eigen::ArrayXd h = log_w.array() + f.array() / epsilon;
    for (Eigen::Index i = 0; i < n; ++i) {
      dist2.setZero();
      for (Eigen::Index k = 0; k < x.cols(); ++k) {
        dist2 += (x.col(k).array() - x(i, k)).square();
      }
      terms = h - dist2.sqrt().min(cap) / epsilon;
      const double m = terms.maxCoeff();
      tf[i] = -epsilon * (m + std::log((terms - m).exp().sum()));
    }
    if (!tf.allFinite()) throw NumericalError("non-finite potential in streaming symmetric update");
    res = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      if (w[i] > 0.0) res += w[i] * std::abs(std::expm1((f[i] - tf[i]) / epsilon));
    }
    if (res <= opts.tol) break;
    f = 0.5 * (f + tf);
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    if (w[i] == 0.0) f[i] = tf[i];
  }
  SymmetricSolution out;
  out.potential = std::move(f);
  out.iterations = it;
  out.residual = res;
  out.converged = res <= opts.tol;
  return out;
}

}  // namespace erobot
