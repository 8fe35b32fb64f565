#include <cmath>
#include <random>

#include "doctest.h"
#include "erobot/sinkhorn.hpp"
#include "support/fixtures.hpp"
#include "support/oracles.hpp"

using namespace erobot;

namespace {
DiscreteMeasure line(std::initializer_list<double> xs) {
  Matrix m(static_cast<Eigen::Index>(xs.size()), 1);
  Eigen::Index i = 0;
  for (double x : xs) m(i++, 0) = x;
  return uniform_measure(PointCloud(m));
}
}  // namespace

TEST_SUITE("sinkhorn") {
  TEST_CASE("single atoms") {
    Matrix x(1, 2), y(1, 2);
    x << 0.0, 0.0;
    y << 0.3, 0.4;
    const DiscreteMeasure mu = uniform_measure(PointCloud(x)), nu = uniform_measure(PointCloud(y));
    for (double lambda : {10.0, 0.1}) {
      const CostMatrix c = truncated_cost(mu.cloud(), nu.cloud(), lambda);
      const SinkhornSolution s = solve(mu, nu, c, 0.7);
      CHECK(s.converged);
      CHECK(s.marginal_error == doctest::Approx(0.0));
      CHECK(s.phi[0] + s.psi[0] == doctest::Approx(std::min(0.5, 2 * lambda)));
      CHECK(s.phi[0] == doctest::Approx(s.psi[0]));
      const Matrix pi = plan(s, mu.weights(), nu.weights(), c, 0.7);
      CHECK(pi(0, 0) == doctest::Approx(1.0));
      CHECK(primal_value(pi, c, mu.weights(), nu.weights(), 0.7) == doctest::Approx(std::min(0.5, 2 * lambda)));
      CHECK(dual_value(s, mu.weights(), nu.weights()) == doctest::Approx(std::min(0.5, 2 * lambda)));
    }
  }

  TEST_CASE("two-point problem matches the dense oracle") {
    const DiscreteMeasure mu = line({0.0, 1.0});
    const CostMatrix c = truncated_cost(mu.cloud(), mu.cloud(), 10.0);
    SolverOptions opts;
    opts.tol = 1e-12;
    const oracle::Dense ref = oracle::dense_fixed_point({0.5, 0.5}, {0.5, 0.5}, {{0, 1}, {1, 0}}, 1.0);
    for (UpdateRule rule : {UpdateRule::automatic, UpdateRule::log_domain, UpdateRule::scaling}) {
      opts.rule = rule;
      const SinkhornSolution s = solve(mu, mu, c, 1.0, opts);
      REQUIRE(s.converged);
      const Matrix pi = plan(s, mu.weights(), mu.weights(), c, 1.0);
      for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) CHECK(std::abs(pi(i, j) - ref.plan[i][j]) <= 1e-6);
      CHECK(std::abs(primal_value(pi, c, mu.weights(), mu.weights(), 1.0) - ref.value) <= 1e-6);
      CHECK(std::abs(dual_value(s, mu.weights(), mu.weights()) - ref.value) <= 1e-6);
    }
  }

  TEST_CASE("self problem gives a symmetric plan") {
    std::mt19937_64 rng(3);
    const DiscreteMeasure mu = fixtures::random_measure(rng, 15, 3);
    const CostMatrix c = truncated_cost(mu.cloud(), mu.cloud(), 0.8);
    SolverOptions opts;
    opts.tol = 1e-11;
    const SinkhornSolution s = solve(mu, mu, c, 0.2, opts);
    const Matrix pi = plan(s, mu.weights(), mu.weights(), c, 0.2);
    CHECK((pi - pi.transpose()).cwiseAbs().maxCoeff() <= 1e-8);
  }

  TEST_CASE("converged plans meet the marginals and strong duality") {
    std::mt19937_64 rng(5);
    for (int k = 0; k < 20; ++k) {
      const DiscreteMeasure mu = fixtures::random_measure(rng, 5 + k, 2);
      const DiscreteMeasure nu = fixtures::random_measure(rng, 30 - k, 2);
      const double eps = fixtures::log_uniform(rng, 0.01, 5.0);
      const CostMatrix c = truncated_cost(mu.cloud(), nu.cloud(), fixtures::log_uniform(rng, 0.1, 10));
      SolverOptions opts;
      opts.max_iter = 100000;
      const SinkhornSolution s = solve(mu, nu, c, eps, opts);
      REQUIRE(s.converged);
      const Matrix pi = plan(s, mu.weights(), nu.weights(), c, eps);
      CHECK(marginal_violation(pi, mu.weights(), nu.weights()) <= 2 * opts.tol);
      const double primal = primal_value(pi, c, mu.weights(), nu.weights(), eps);
      CHECK(std::abs(primal - dual_value(s, mu.weights(), nu.weights())) <=
            10 * opts.tol * (1 + std::abs(primal)));
      CHECK(std::abs(mu.weights().dot(s.phi) - nu.weights().dot(s.psi)) <= 1e-9);
    }
  }

  TEST_CASE("log domain agrees with the reference iteration") {
    std::mt19937_64 rng(9);
    const DiscreteMeasure mu = fixtures::random_measure(rng, 8, 2);
    const DiscreteMeasure nu = fixtures::random_measure(rng, 6, 2);
    const CostMatrix c = truncated_cost(mu.cloud(), nu.cloud(), 0.7);
    SolverOptions opts;
    opts.tol = 1e-12;
    opts.rule = UpdateRule::log_domain;
    const SinkhornSolution a = solve(mu, nu, c, 0.3, opts);
    const SinkhornSolution b = solve_reference(mu.weights(), nu.weights(), c, 0.3, opts);
    REQUIRE(a.converged);
    REQUIRE(b.converged);
    CHECK((plan(a, mu.weights(), nu.weights(), c, 0.3) - plan(b, mu.weights(), nu.weights(), c, 0.3))
              .cwiseAbs()
              .maxCoeff() <= 1e-9);
  }

  TEST_CASE("tiny epsilon stays finite") {
    const DiscreteMeasure mu = line({0.0, 1.0, 2.0}), nu = line({0.1, 1.4, 5.0});
    const CostMatrix c = truncated_cost(mu.cloud(), nu.cloud(), 1.0);
    SolverOptions opts;
    opts.max_iter = 1000000;
    const SinkhornSolution s = solve(mu, nu, c, 1e-4, opts);
    CHECK(s.converged);
    CHECK(s.phi.allFinite());
    CHECK(s.psi.allFinite());
  }

  TEST_CASE("non-convergence is flagged, not thrown") {
    std::mt19937_64 rng(1);
    const DiscreteMeasure mu = fixtures::random_measure(rng, 20, 2);
    const DiscreteMeasure nu = fixtures::random_measure(rng, 20, 2);
    SolverOptions opts;
    opts.max_iter = 2;
    opts.tol = 1e-14;
    const SinkhornSolution s = solve(mu, nu, truncated_cost(mu.cloud(), nu.cloud(), 1.0), 0.01, opts);
    CHECK_FALSE(s.converged);
    CHECK(s.iterations == 2);
  }

  TEST_CASE("input checks") {
    const DiscreteMeasure mu = line({0.0, 1.0});
    CHECK_THROWS_AS(solve(mu, mu, pairwise_cost(mu.cloud(), mu.cloud()), 1.0), std::invalid_argument);
    const CostMatrix c = truncated_cost(mu.cloud(), mu.cloud(), 1.0);
    CHECK_THROWS_AS(solve(mu, mu, c, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(solve(line({0.0}), mu, c, 1.0), std::invalid_argument);
    SolverOptions bad;
    bad.tol = -1;
    CHECK_THROWS_AS(solve(mu, mu, c, 1.0, bad), std::invalid_argument);
    Matrix pi(2, 2);
    pi << 0.5, 0.0, 0.0, 0.5;
    const Vector zero_first = (Vector(2) << 0.0, 1.0).finished();
    CHECK_THROWS_AS(primal_value(pi, c, zero_first, mu.weights(), 1.0), std::invalid_argument);
  }

  TEST_CASE("product plan has no entropy") {
    std::mt19937_64 rng(2);
    const DiscreteMeasure mu = fixtures::random_measure(rng, 4, 2), nu = fixtures::random_measure(rng, 5, 2);
    const CostMatrix c = truncated_cost(mu.cloud(), nu.cloud(), 0.5);
    const Matrix pi = mu.weights() * nu.weights().transpose();
    CHECK(primal_value(pi, c, mu.weights(), nu.weights(), 3.0) ==
          doctest::Approx(mu.weights().dot(c.entries * nu.weights())));
  }

  TEST_CASE("symmetric solve") {
    const SymmetricSolution one =
        symmetric_solve(Vector::Ones(1), truncated_cost(PointCloud(Matrix::Zero(1, 2)), PointCloud(Matrix::Zero(1, 2)), 1.0), 0.5);
    CHECK(one.converged);
    CHECK(one.potential[0] == doctest::Approx(0.0));

    std::mt19937_64 rng(4);
    const DiscreteMeasure mu = fixtures::random_measure(rng, 25, 3);
    const CostMatrix c = truncated_cost(mu.cloud(), mu.cloud(), 0.6);
    SolverOptions opts;
    opts.tol = 1e-10;
    opts.max_iter = 200000;  // plain alternation is slow on self problems
    const SymmetricSolution f = symmetric_solve(mu.weights(), c, 0.1, opts);
    const SinkhornSolution s = solve(mu, mu, c, 0.1, opts);
    REQUIRE(f.converged);
    CHECK((f.potential - s.phi).cwiseAbs().maxCoeff() <= 1e-6);
    CHECK((f.potential - s.psi).cwiseAbs().maxCoeff() <= 1e-6);

    const SymmetricSolution g = symmetric_solve_streaming(mu, 0.1, 0.6, opts);
    REQUIRE(g.converged);
    CHECK((g.potential - f.potential).cwiseAbs().maxCoeff() <= 1e-9);
  }

  TEST_CASE("potentials are bounded") {
    std::mt19937_64 rng(12);
    for (int k = 0; k < 10; ++k) {
      const DiscreteMeasure mu = fixtures::random_measure(rng, 12, 2), nu = fixtures::random_measure(rng, 9, 2);
      const double eps = fixtures::log_uniform(rng, 0.05, 2.0);
      const CostMatrix c = truncated_cost(mu.cloud(), nu.cloud(), fixtures::log_uniform(rng, 0.2, 3.0));
      const SinkhornSolution s = solve(mu, nu, c, eps);
      const double min_w = std::min(mu.weights().minCoeff(), nu.weights().minCoeff());
      const double bound = c.entries.maxCoeff() + eps * std::abs(std::log(min_w));
      CHECK(s.phi.cwiseAbs().maxCoeff() <= bound);
      CHECK(s.psi.cwiseAbs().maxCoeff() <= bound);
    }
  }

  TEST_CASE("swapping the measures transposes the plan") {
    std::mt19937_64 rng(13);
    const DiscreteMeasure mu = fixtures::random_measure(rng, 7, 3), nu = fixtures::random_measure(rng, 11, 3);
    SolverOptions opts;
    opts.tol = 1e-13;
    const CostMatrix c = truncated_cost(mu.cloud(), nu.cloud(), 0.9);
    const CostMatrix ct = truncated_cost(nu.cloud(), mu.cloud(), 0.9);
    const SinkhornSolution a = solve(mu, nu, c, 0.3, opts), b = solve(nu, mu, ct, 0.3, opts);
    CHECK((a.phi - b.psi).cwiseAbs().maxCoeff() <= 1e-8);
    CHECK((a.psi - b.phi).cwiseAbs().maxCoeff() <= 1e-8);
    const Matrix pa = plan(a, mu.weights(), nu.weights(), c, 0.3);
    const Matrix pb = plan(b, nu.weights(), mu.weights(), ct, 0.3);
    CHECK((pa - pb.transpose()).cwiseAbs().maxCoeff() <= 1e-8);
  }

  TEST_CASE("plan is invariant to the additive gauge") {
    std::mt19937_64 rng(14);
    const DiscreteMeasure mu = fixtures::random_measure(rng, 6, 2), nu = fixtures::random_measure(rng, 5, 2);
    const CostMatrix c = truncated_cost(mu.cloud(), nu.cloud(), 1.0);
    const SinkhornSolution s = solve(mu, nu, c, 0.4);
    SinkhornSolution shifted = s;
    shifted.phi.array() += 3.7;
    shifted.psi.array() -= 3.7;
    CHECK((plan(s, mu.weights(), nu.weights(), c, 0.4) - plan(shifted, mu.weights(), nu.weights(), c, 0.4))
              .cwiseAbs()
              .maxCoeff() <= 1e-12);
  }

  TEST_CASE("epsilon scaling reaches the same solution") {
    Matrix x(4, 1), y(5, 1);
    x << 0.0, 3.0, 40.0, 41.0;
    y << 0.5, 2.0, 39.0, 60.0, 61.0;
    const DiscreteMeasure mu = uniform_measure(PointCloud(x)), nu = uniform_measure(PointCloud(y));
    const CostMatrix c = truncated_cost(mu.cloud(), nu.cloud(), 1e6);
    SolverOptions plain;
    plain.max_iter = 1000000;
    plain.tol = 1e-9;
    SolverOptions warm = plain;
    warm.epsilon_scaling = true;
    const SinkhornSolution a = solve(mu, nu, c, 0.05, plain), b = solve(mu, nu, c, 0.05, warm);
    REQUIRE(a.converged);
    REQUIRE(b.converged);
    CHECK(std::abs(dual_value(a, mu.weights(), nu.weights()) - dual_value(b, mu.weights(), nu.weights())) <= 1e-6);
    CHECK((plan(a, mu.weights(), nu.weights(), c, 0.05) - plan(b, mu.weights(), nu.weights(), c, 0.05))
              .cwiseAbs()
              .maxCoeff() <= 1e-6);
  }
}
