#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "erobot/core.hpp"
#include "erobot/sinkhorn.hpp"

namespace erobot {

enum class NullFamily { gaussian, student_t };

NullFamily parse_null_family(const std::string& name);
std::string to_string(NullFamily family);

/// Simple null hypothesis: N(location, I_d) or a d-variate t with identity
/// scale and `df` degrees of freedom. An empty location means the origin.
struct NullSpec {
  NullFamily family = NullFamily::gaussian;
  int d = 1;
  Vector location;
  double df = 1.0;

  void validate() const;
  Vector center() const;
};

struct TestResult {
  double statistic = 0.0;
  double critical_value = 0.0;
  bool reject = false;
  double p_value = 1.0;
  double level = 0.05;
  int mc_reps = 0;
  std::uint64_t seed = 0;
};

PointCloud sample_gaussian(int n, int d, const Vector& location, std::uint64_t seed);

/// X = location + Z * sqrt(df / V), Z ~ N(0, I_d), V ~ chi2(df).
/// V is a sum of squared normals for integer df up to 100, a gamma draw otherwise.
PointCloud sample_student_t(int n, int d, double df, const Vector& location, std::uint64_t seed);

PointCloud sample_null(const NullSpec& null, int n, std::uint64_t seed);

/// Null distribution of the statistic, obtained by Monte Carlo.
struct Calibration {
  std::vector<double> null_statistics;  // replicate order
  double critical_value = 0.0;
  double level = 0.05;
  int n = 0;
  int mc_reps = 0;
};

/// Simulates mc_reps null statistics W(X, Y) with X, Y two independent size-n
/// null samples. The critical value is the order statistic of rank
/// ceil((1 - level) * (mc_reps + 1)), so P(stat > crit) <= level exactly under
/// exchangeability. It is +inf when that rank exceeds mc_reps.
///
/// Throws NumericalError if more than 1% of the solves fail to converge.
Calibration calibrate(const NullSpec& null, int n, double epsilon, double lambda, double level,
                      int mc_reps, std::uint64_t seed, const SolverOptions& opts = {});

/// Applies a calibration to an observed statistic.
TestResult decide(double statistic, const Calibration& cal, std::uint64_t seed);

/// Robust Sinkhorn divergence between the sample and a fresh size-n draw
/// from the null, compared with a Monte-Carlo critical value.
TestResult gof_test(const PointCloud& sample, const NullSpec& null, double epsilon, double lambda,
                    double level, int mc_reps, std::uint64_t seed,
                    const SolverOptions& opts = {});

struct PowerPoint {
  double shift = 0.0;
  double rejection_rate = 0.0;
};

/// Rejection rate against location shifts (null location + shift in every
/// coordinate). The null distribution is calibrated once and shared by all
/// shifts and meta replicates; each meta replicate draws a fresh sample and a
/// fresh null representer.
std::vector<PowerPoint> power_curve(const NullSpec& null, const std::vector<double>& shifts, int n,
                                    double epsilon, double lambda, double level, int mc_reps,
                                    int meta_reps, std::uint64_t seed,
                                    const SolverOptions& opts = {});

/// How sample_complexity generates data.
struct ComplexityOptions {
  double clip = 3.0;     // clamp every coordinate to [-clip, clip] (<= 0 disables)
  double scale = 1.0;    // multiply points after clipping
  int ref_factor = 20;   // reference size N = ref_factor * max(n_grid)
};

struct ComplexityResult {
  double slope = 0.0;      // least squares fit of log(mean) on log(n)
  double intercept = 0.0;
  std::vector<int> n_grid;
  std::vector<double> means;
  std::vector<std::vector<double>> values;  // values[k][r]: size n_grid[k], replicate r
  int reference_size = 0;
};

/// Decay of E W(mu_n, mu) in n, estimated against one reference sample of
/// size N drawn once from the generator. Replicate r at grid point k uses the
/// stream derive_seed(seed, k * 1'000'003 + r + 1), so adding replicates never
/// changes earlier ones.
ComplexityResult sample_complexity(int d, double epsilon, double lambda,
                                   const std::vector<int>& n_grid, int reps, std::uint64_t seed,
                                   const NullSpec& generator, const ComplexityOptions& options = {},
                                   const SolverOptions& opts = {});

}  // namespace erobot
