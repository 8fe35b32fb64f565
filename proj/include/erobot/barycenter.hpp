#pragma once

#include <vector>

#include "erobot/core.hpp"

namespace erobot {

/// Barycenter of M measures that all live on one shared grid cloud.
struct BarycenterProblem {
  std::vector<DiscreteMeasure> inputs;
  Vector alphas;  // non-negative, sums to 1
  double epsilon = 0.0;
  double lambda = 0.0;
  double tol = 1e-7;  // L1 change between successive iterates
  int max_iter = 5000;

  void validate() const;
};

struct BarycenterResult {
  DiscreteMeasure barycenter;
  int iterations = 0;
  double final_change = 0.0;
  bool converged = false;
};

/// Iterative Bregman projections on the truncated Laplacian kernel.
///
/// Each sweep projects every coupling onto its input marginal, takes the
/// alpha-weighted geometric mean of the other marginals as the new
/// barycenter, then projects onto it. Switches to log-domain updates when
/// epsilon < 0.05 * mean(C). Terms with alpha_m = 0 are dropped from the mean.
BarycenterResult ibp_barycenter(const BarycenterProblem& problem);

/// Barycenter of two shapes on a shared grid with weights (1 - t, t).
DiscreteMeasure interpolate_shapes(const DiscreteMeasure& shape_a, const DiscreteMeasure& shape_b,
                                   double t, double epsilon, double lambda);

/// rows x cols lattice with unit spacing; atom k sits at (k / cols, k % cols).
PointCloud regular_grid(int rows, int cols);

}  // namespace erobot
