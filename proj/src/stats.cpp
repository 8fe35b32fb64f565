#include "erobot/stats.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <numeric>

#include "erobot/divergence.hpp"
#include "erobot/parallel.hpp"
#include "erobot/random.hpp"

namespace erobot {

NullFamily parse_null_family(const std::string& name) {
  if (name == "gaussian") return NullFamily::gaussian;
  if (name == "student_t") return NullFamily::student_t;
  throw std::invalid_argument("unknown null family '" + name + "' (expected gaussian or student_t)");
}

std::string to_string(NullFamily family) {
  return family == NullFamily::gaussian ? "gaussian" : "student_t";
}

void NullSpec::validate() const {
  if (d < 1) throw std::invalid_argument("null dimension d must be at least 1");
  if (location.size() != 0 && location.size() != d) {
    throw std::invalid_argument("null location has " + std::to_string(location.size()) +
                                " entries, expected d = " + std::to_string(d));
  }
  if (!location.allFinite()) throw std::invalid_argument("null location must be finite");
  if (family == NullFamily::student_t) require_positive(df, "df");
}

Vector NullSpec::center() const {
  return location.size() == 0 ? Vector::Zero(d) : location;
}

namespace {

void check_sample_args(int n, int d, const Vector& location) {
  if (n < 1 || d < 1) throw std::invalid_argument("sample size and dimension must be positive");
  if (location.size() != d) {
    throw std::invalid_argument("location has " + std::to_string(location.size()) +
                                " entries, expected " + std::to_string(d));
  }
}

Matrix draw_gaussian(Rng& rng, int n, int d, const Vector& location) {
  std::normal_distribution<double> z;
  Matrix x(n, d);
  for (int i = 0; i < n; ++i) {
    for (int k = 0; k < d; ++k) x(i, k) = location[k] + z(rng);
  }
  return x;
}

Matrix draw_student_t(Rng& rng, int n, int d, double df, const Vector& location) {
  std::normal_distribution<double> z;
  std::gamma_distribution<double> gamma(0.5 * df, 2.0);
  const bool small_integer = df <= 100.0 && df == std::floor(df);
  const int k_df = static_cast<int>(df);
  Matrix x(n, d);
  for (int i = 0; i < n; ++i) {
    double v = 0.0;
    if (small_integer) {
      for (int k = 0; k < k_df; ++k) {
        const double g = z(rng);
        v += g * g;
      }
    } else {
      v = gamma(rng);
    }
    const double s = std::sqrt(df / v);
    for (int k = 0; k < d; ++k) x(i, k) = location[k] + z(rng) * s;
  }
  return x;
}

Matrix draw_null(Rng& rng, const NullSpec& null, int n, const Vector& location) {
  return null.family == NullFamily::gaussian ? draw_gaussian(rng, n, null.d, location)
                                             : draw_student_t(rng, n, null.d, null.df, location);
}

double divergence_of(const Matrix& x, const Matrix& y, double epsilon, double lambda,
                     const SolverOptions& opts, bool& converged) {
  const DiscreteMeasure a = uniform_measure(PointCloud(x));
  const DiscreteMeasure b = uniform_measure(PointCloud(y));
  const DivergenceReport r = robust_sinkhorn_divergence(a, b, epsilon, lambda, opts);
  converged = r.converged;
  return r.value;
}

void check_failures(int failures, int total, const char* what) {
  if (static_cast<double>(failures) > 0.01 * total) {
    throw NumericalError(std::string(what) + ": " + std::to_string(failures) + " of " +
                         std::to_string(total) +
                         " Sinkhorn solves did not converge (more than 1%); raise max_iter or "
                         "epsilon");
  }
}

void check_test_args(int n, double epsilon, double lambda, double level, int mc_reps) {
  if (n < 1) throw std::invalid_argument("sample size must be positive");
  require_positive(epsilon, "epsilon");
  require_positive(lambda, "lambda");
  if (!(level > 0.0 && level < 1.0)) throw std::invalid_argument("level must lie in (0, 1)");
  if (mc_reps < 50) throw std::invalid_argument("mc_reps must be at least 50");
}

constexpr std::uint64_t kReferenceStream = 0;
constexpr std::uint64_t kCalibrationStream = 1;

}  // namespace

PointCloud sample_gaussian(int n, int d, const Vector& location, std::uint64_t seed) {
  check_sample_args(n, d, location);
  Rng rng(seed);
  return PointCloud(draw_gaussian(rng, n, d, location));
}

PointCloud sample_student_t(int n, int d, double df, const Vector& location, std::uint64_t seed) {
  check_sample_args(n, d, location);
  require_positive(df, "df");
  Rng rng(seed);
  return PointCloud(draw_student_t(rng, n, d, df, location));
}

PointCloud sample_null(const NullSpec& null, int n, std::uint64_t seed) {
  null.validate();
  if (n < 1) throw std::invalid_argument("sample size must be positive");
  Rng rng(seed);
  return PointCloud(draw_null(rng, null, n, null.center()));
}

Calibration calibrate(const NullSpec& null, int n, double epsilon, double lambda, double level,
                      int mc_reps, std::uint64_t seed, const SolverOptions& opts) {
  null.validate();
  check_test_args(n, epsilon, lambda, level, mc_reps);
  const std::uint64_t base = derive_seed(seed, kCalibrationStream);
  const Vector center = null.center();
  std::atomic<int> failures{0};
  Calibration cal;
  cal.level = level;
  cal.n = n;
  cal.mc_reps = mc_reps;
  cal.null_statistics = parallel_map<double>(static_cast<std::size_t>(mc_reps), [&](std::size_t r) {
    Rng rng(derive_seed(base, r));
    const Matrix x = draw_null(rng, null, n, center);
    const Matrix y = draw_null(rng, null, n, center);
    bool ok = false;
    const double v = divergence_of(x, y, epsilon, lambda, opts, ok);
    if (!ok) ++failures;
    return v;
  });
  check_failures(failures.load(), mc_reps, "calibration");

  std::vector<double> sorted = cal.null_statistics;
  std::sort(sorted.begin(), sorted.end());
  const auto rank = static_cast<long>(std::ceil((1.0 - level) * (mc_reps + 1) - 1e-9));
  cal.critical_value = rank <= mc_reps ? sorted[static_cast<std::size_t>(std::max(rank, 1L) - 1)]
                                       : std::numeric_limits<double>::infinity();
  return cal;
}

TestResult decide(double statistic, const Calibration& cal, std::uint64_t seed) {
  TestResult t;
  t.statistic = statistic;
  t.critical_value = cal.critical_value;
  t.reject = statistic > cal.critical_value;
  const auto exceed = std::count_if(cal.null_statistics.begin(), cal.null_statistics.end(),
                                    [&](double s) { return s >= statistic; });
  t.p_value = static_cast<double>(1 + exceed) / static_cast<double>(cal.mc_reps + 1);
  t.level = cal.level;
  t.mc_reps = cal.mc_reps;
  t.seed = seed;
  return t;
}

TestResult gof_test(const PointCloud& sample, const NullSpec& null, double epsilon, double lambda,
                    double level, int mc_reps, std::uint64_t seed, const SolverOptions& opts) {
  null.validate();
  if (sample.dim() != null.d) {
    throw std::invalid_argument("sample dimension " + std::to_string(sample.dim()) +
                                " does not match null dimension " + std::to_string(null.d));
  }
  const int n = static_cast<int>(sample.size());
  const Calibration cal = calibrate(null, n, epsilon, lambda, level, mc_reps, seed, opts);
  Rng rng(derive_seed(seed, kReferenceStream));
  const Matrix reference = draw_null(rng, null, n, null.center());
  bool ok = false;
  const double stat = divergence_of(sample.points(), reference, epsilon, lambda, opts, ok);
  if (!ok) throw NumericalError("Sinkhorn solve for the test statistic did not converge");
  return decide(stat, cal, seed);
}

std::vector<PowerPoint> power_curve(const NullSpec& null, const std::vector<double>& shifts, int n,
                                    double epsilon, double lambda, double level, int mc_reps,
                                    int meta_reps, std::uint64_t seed, const SolverOptions& opts) {
  null.validate();
  if (shifts.empty()) throw std::invalid_argument("power_curve needs at least one shift");
  if (meta_reps < 1) throw std::invalid_argument("meta_reps must be positive");
  const Calibration cal = calibrate(null, n, epsilon, lambda, level, mc_reps, seed, opts);
  const Vector center = null.center();

  std::vector<PowerPoint> curve;
  std::atomic<int> failures{0};
  for (std::size_t k = 0; k < shifts.size(); ++k) {
    const std::uint64_t base = derive_seed(seed, 2 + k);
    const Vector shifted = center.array() + shifts[k];
    const auto rejects = parallel_map<int>(static_cast<std::size_t>(meta_reps), [&](std::size_t r) {
      Rng rng(derive_seed(base, r));
      const Matrix x = draw_null(rng, null, n, shifted);
      const Matrix ref = draw_null(rng, null, n, center);
      bool ok = false;
      const double stat = divergence_of(x, ref, epsilon, lambda, opts, ok);
      if (!ok) ++failures;
      return stat > cal.critical_value ? 1 : 0;
    });
    const int total = std::accumulate(rejects.begin(), rejects.end(), 0);
    curve.push_back({shifts[k], static_cast<double>(total) / meta_reps});
  }
  check_failures(failures.load(), static_cast<int>(shifts.size()) * meta_reps, "power curve");
  return curve;
}

namespace {

double least_squares_slope(const std::vector<double>& x, const std::vector<double>& y,
                           double& intercept) {
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  const double slope = sxy / sxx;
  intercept = my - slope * mx;
  return slope;
}

Matrix draw_generator(Rng& rng, const NullSpec& gen, int n, const ComplexityOptions& o) {
  Matrix x = draw_null(rng, gen, n, gen.center());
  if (o.clip > 0.0) x = x.cwiseMax(-o.clip).cwiseMin(o.clip);
  return o.scale * x;
}

// Self term of the robust divergence; switches to the matrix-free solver once
// the n x n cost matrix would get large.
double self_term(const DiscreteMeasure& m, double epsilon, double lambda, const SolverOptions& opts,
                 bool& ok) {
  constexpr Eigen::Index kDenseLimit = 4096;
  if (m.size() <= kDenseLimit) return self_cost(m, epsilon, lambda, opts, &ok);
  const SymmetricSolution s = symmetric_solve_streaming(m, epsilon, lambda, opts);
  ok = s.converged;
  return 2.0 * m.weights().dot(s.potential);
}

}  // namespace

ComplexityResult sample_complexity(int d, double epsilon, double lambda,
                                   const std::vector<int>& n_grid, int reps, std::uint64_t seed,
                                   const NullSpec& generator, const ComplexityOptions& options,
                                   const SolverOptions& opts) {
  require_positive(epsilon, "epsilon");
  require_positive(lambda, "lambda");
  if (n_grid.size() < 4) throw std::invalid_argument("n_grid needs at least 4 points");
  for (std::size_t k = 0; k < n_grid.size(); ++k) {
    if (n_grid[k] < 1 || (k > 0 && n_grid[k] <= n_grid[k - 1])) {
      throw std::invalid_argument("n_grid must be positive and strictly increasing");
    }
  }
  if (reps < 1) throw std::invalid_argument("reps must be positive");
  if (options.ref_factor < 1) throw std::invalid_argument("ref_factor must be positive");
  require_positive(options.scale, "scale");
  NullSpec gen = generator;
  gen.d = d;
  gen.validate();

  ComplexityResult res;
  res.n_grid = n_grid;
  res.reference_size = options.ref_factor * n_grid.back();

  Rng ref_rng(derive_seed(seed, 0));
  const DiscreteMeasure reference =
      uniform_measure(PointCloud(draw_generator(ref_rng, gen, res.reference_size, options)));
  bool ref_ok = false;
  const double w_ref = self_term(reference, epsilon, lambda, opts, ref_ok);
  if (!ref_ok) throw NumericalError("reference self-transport solve did not converge");

  int failures = 0;
  std::vector<double> log_n, log_mean;
  for (std::size_t k = 0; k < n_grid.size(); ++k) {
    std::vector<double> vals(static_cast<std::size_t>(reps));
    // Replicates run one after another: the n x N cross problem dominates
    // memory and cannot be duplicated per thread at the largest sizes.
    for (int r = 0; r < reps; ++r) {
      Rng rng(derive_seed(seed, static_cast<std::uint64_t>(k) * 1'000'003ULL +
                                    static_cast<std::uint64_t>(r) + 1));
      const DiscreteMeasure sample =
          uniform_measure(PointCloud(draw_generator(rng, gen, n_grid[k], options)));
      const CostMatrix cxy = truncated_cost(sample.cloud(), reference.cloud(), lambda);
      const SinkhornSolution sol = solve(sample, reference, cxy, epsilon, opts);
      bool ok = false;
      const double w_self = self_term(sample, epsilon, lambda, opts, ok);
      if (!sol.converged || !ok) ++failures;
      vals[static_cast<std::size_t>(r)] =
          dual_value(sol, sample.weights(), reference.weights()) - 0.5 * (w_self + w_ref);
    }
    const double mean = std::accumulate(vals.begin(), vals.end(), 0.0) / reps;
    res.means.push_back(mean);
    res.values.push_back(std::move(vals));
    log_n.push_back(std::log(static_cast<double>(n_grid[k])));
    log_mean.push_back(std::log(std::max(mean, std::numeric_limits<double>::min())));
  }
  check_failures(failures, reps * static_cast<int>(n_grid.size()), "sample complexity");
  res.slope = least_squares_slope(log_n, log_mean, res.intercept);
  return res;
}

}  // namespace erobot
