#pragma once

#include <string>
#include <vector>

#include "erobot/core.hpp"
#include "erobot/sinkhorn.hpp"

namespace erobot {

enum class LossKind { debiased_sinkhorn, mmd_trunc_laplace, mmd_gaussian };

/// Which loss drives the flow. epsilon and lambda are used by the first two
/// kinds, sigma only by mmd_gaussian. `solver` controls the inner Sinkhorn
/// solves of debiased_sinkhorn.
struct LossSpec {
  LossKind kind = LossKind::debiased_sinkhorn;
  double epsilon = 0.0;
  double lambda = 0.0;
  double sigma = 0.0;
  SolverOptions solver{};

  void validate() const;
};

LossKind parse_loss_kind(const std::string& name);
std::string to_string(LossKind kind);

/// Scalar loss. The MMD kinds return half the squared MMD.
double loss_value(const DiscreteMeasure& source, const DiscreteMeasure& target,
                  const LossSpec& spec);

/// Per-particle gradient, n x d. Row i is the derivative of the loss with
/// respect to x_i divided by the particle weight mu_i, so that an Euler step
/// x_i -= tau * row_i moves every particle at the same rate regardless of n.
///
/// Cost subgradient: zero at x == y and wherever ||x - y|| >= 2 lambda.
/// Throws NumericalError if an inner Sinkhorn solve does not converge.
Matrix loss_gradient(const DiscreteMeasure& source, const DiscreteMeasure& target,
                     const LossSpec& spec);

struct FlowTrajectory {
  std::vector<PointCloud> frames;   // frames[k] at time k * tau
  double tau = 0.0;
  std::vector<double> loss_values;  // one per frame, NaN for a failed frame
  bool completed = true;
  int failed_step = -1;             // step whose gradient failed, if any
  std::string error;
};

/// Explicit Euler scheme x <- x - tau * loss_gradient(x). Weights stay fixed.
/// A failing gradient stops the flow; the trajectory keeps the frames so far,
/// ending with the frame whose gradient failed.
FlowTrajectory euler_flow(const DiscreteMeasure& source, const DiscreteMeasure& target,
                          const LossSpec& spec, double tau, int steps);

}  // namespace erobot
