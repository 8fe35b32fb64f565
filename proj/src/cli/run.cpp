#include "cli/run.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <deque>
#include <fstream>
#include <functional>
#include <iostream>
#include <limits>
#include <sstream>

#include "cli/csv.hpp"
#include "erobot/barycenter.hpp"
#include "erobot/colorxfer.hpp"
#include "erobot/divergence.hpp"
#include "erobot/gradflow.hpp"
#include "erobot/random.hpp"
#include "erobot/stats.hpp"

#ifndef EROBOT_VERSION
#define EROBOT_VERSION "dev"
#endif

namespace erobot::cli {

namespace {

using json = nlohmann::ordered_json;

// Stream for the goftest sample when none is supplied; disjoint from the
// streams gof_test itself uses.
constexpr std::uint64_t kSampleStream = 0x5a5a5a5aULL;

std::vector<double> to_std(const Vector& v) { return {v.data(), v.data() + v.size()}; }

json finite_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

struct Common {
  std::string output;
  std::string format = "json";
  std::uint64_t seed = 0;
  int max_iter = 10000;
  double tol = 1e-6;
  int check_every = 10;
  bool epsilon_scaling = false;

  SolverOptions solver() const {
    SolverOptions o;
    o.max_iter = max_iter;
    o.tol = tol;
    o.check_every = check_every;
    o.epsilon_scaling = epsilon_scaling;
    return o;
  }
};

void add_solver_flags(CLI::App* sub, Common& c) {
  sub->add_option("--max-iter", c.max_iter, "Sinkhorn iteration cap");
  sub->add_option("--tol", c.tol, "L1 marginal tolerance");
  sub->add_option("--check-every", c.check_every, "Iterations between convergence checks");
  sub->add_flag("--epsilon-scaling", c.epsilon_scaling,
                "Warm-start along a decreasing epsilon schedule (large cost / epsilon)");
}

void add_output_flags(CLI::App* sub, Common& c, const std::string& default_format) {
  c.format = default_format;
  sub->add_option("-o,--output", c.output, "Output file (default: stdout)");
  sub->add_option("--format", c.format, "Output format")->check(CLI::IsMember({"json", "csv"}));
}

json params_of(const CLI::App* sub) {
  json p = json::object();
  for (const CLI::Option* opt : sub->get_options()) {
    std::string name = opt->get_name(false, true);
    if (name.empty() || name == "--help") continue;
    while (!name.empty() && name.front() == '-') name.erase(name.begin());
    if (name == "help") continue;
    const auto& res = opt->results();
    if (!res.empty()) {
      std::string joined;
      for (std::size_t i = 0; i < res.size(); ++i) joined += (i ? "," : "") + res[i];
      p[name] = opt->get_type_size() == 0 ? json(true) : json(joined);
    } else if (!opt->get_default_str().empty()) {
      p[name] = opt->get_default_str();
    }
  }
  return p;
}

json meta_block(const CLI::App* sub, std::optional<std::uint64_t> seed) {
  json m;
  m["version"] = EROBOT_VERSION;
  m["subcommand"] = sub->get_name();
  m["params"] = params_of(sub);
  m["seed"] = seed ? json(*seed) : json(nullptr);
  return m;
}

Meta meta_lines(const json& meta) {
  Meta out;
  out.emplace_back("version", meta["version"].get<std::string>());
  out.emplace_back("subcommand", meta["subcommand"].get<std::string>());
  out.emplace_back("seed", meta["seed"].is_null() ? "none" : meta["seed"].dump());
  for (const auto& [k, v] : meta["params"].items()) {
    out.emplace_back("param." + k, v.is_string() ? v.get<std::string>() : v.dump());
  }
  return out;
}

class Sink {
 public:
  Sink(const std::string& path, std::ostream& fallback) {
    if (!path.empty()) {
      file_.open(path);
      if (!file_) throw std::runtime_error("cannot write '" + path + "'");
    }
    os_ = path.empty() ? &fallback : &file_;
  }
  std::ostream& stream() { return *os_; }

 private:
  std::ofstream file_;
  std::ostream* os_;
};

// JSON objects as "key,value" rows when --format csv; arrays are joined by ';'.
void emit_object(const json& body, const json& meta, const Common& c, std::ostream& out) {
  Sink sink(c.output, out);
  if (c.format == "json") {
    json doc = body;
    doc["meta"] = meta;
    sink.stream() << doc.dump(2) << '\n';
    return;
  }
  std::ostream& os = sink.stream();
  for (const auto& [k, v] : meta_lines(meta)) os << "# " << k << ": " << v << '\n';
  os << "key,value\n";
  for (const auto& [k, v] : body.items()) {
    os << k << ',';
    if (v.is_array()) {
      for (std::size_t i = 0; i < v.size(); ++i) os << (i ? ";" : "") << v[i].dump();
    } else if (v.is_string()) {
      os << v.get<std::string>();
    } else {
      os << v.dump();
    }
    os << '\n';
  }
}

void emit_table(const std::vector<std::string>& header, const Matrix& rows, const json& meta,
                const std::string& path, const std::string& format, std::ostream& out) {
  Sink sink(path, out);
  if (format == "csv") {
    write_csv(sink.stream(), meta_lines(meta), header, rows);
    return;
  }
  json doc;
  doc["columns"] = header;
  json data = json::array();
  for (Eigen::Index i = 0; i < rows.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < rows.cols(); ++j) row.push_back(rows(i, j));
    data.push_back(row);
  }
  doc["rows"] = data;
  doc["meta"] = meta;
  sink.stream() << doc.dump(2) << '\n';
}

DiscreteMeasure load_measure(const std::string& path, bool weighted) {
  CloudCsv csv = read_cloud_csv(path, weighted);
  PointCloud cloud(std::move(csv.points));
  if (csv.weights) return DiscreteMeasure(std::move(cloud), *csv.weights);
  return uniform_measure(cloud);
}

json report_json(const DivergenceReport& r) {
  return json{{"value", r.value},     {"w_mu_nu", r.w_mu_nu}, {"w_mu_mu", r.w_mu_mu},
              {"w_nu_nu", r.w_nu_nu}, {"epsilon", r.epsilon}, {"lambda", r.lambda},
              {"converged", r.converged}};
}

json test_json(const TestResult& t) {
  return json{{"statistic", t.statistic}, {"critical_value", finite_or_null(t.critical_value)},
              {"reject", t.reject},       {"p_value", t.p_value},
              {"level", t.level},         {"mc_reps", t.mc_reps},
              {"seed", t.seed}};
}

NullSpec make_null(const std::string& family, int d, double df, const std::vector<double>& loc) {
  NullSpec null;
  null.family = parse_null_family(family);
  null.d = d;
  null.df = df;
  if (!loc.empty()) null.location = Eigen::Map<const Vector>(loc.data(), static_cast<Eigen::Index>(loc.size()));
  null.validate();
  return null;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Entropic robust optimal transport toolkit", "erobot"};
  app.option_defaults()->always_capture_default();
  app.require_subcommand(1);
  app.set_version_flag("--version", EROBOT_VERSION);
  app.failure_message(CLI::FailureMessage::help);

  std::deque<Common> commons;  // one per subcommand, stable addresses
  std::function<void()> action;
  CLI::App* active = nullptr;
  const auto bind = [&](CLI::App* sub, std::function<void()> fn) {
    sub->callback([&, sub, fn] {
      active = sub;
      action = fn;
    });
  };

  // divergence
  std::string path_a, path_b;
  bool weighted = false;
  double epsilon = 1.0, lambda = 1.0;
  {
    auto* sub = app.add_subcommand("divergence", "Robust Sinkhorn divergence between two clouds");
    Common& c = commons.emplace_back();
    sub->add_option("a", path_a, "First cloud CSV")->required();
    sub->add_option("b", path_b, "Second cloud CSV")->required();
    sub->add_option("--epsilon", epsilon, "Entropic regularization")->required();
    sub->add_option("--lambda", lambda, "Robustness level (cost is truncated at 2*lambda)")->required();
    sub->add_flag("--weighted", weighted, "Last CSV column holds atom weights");
    add_solver_flags(sub, c);
    add_output_flags(sub, c, "json");
    bind(sub, [&, &c = c] {
      const DiscreteMeasure mu = load_measure(path_a, weighted);
      const DiscreteMeasure nu = load_measure(path_b, weighted);
      const DivergenceReport r = robust_sinkhorn_divergence(mu, nu, epsilon, lambda, c.solver());
      emit_object(report_json(r), meta_block(active, std::nullopt), c, out);
    });
  }

  // sinkhorn
  std::string plan_path;
  {
    auto* sub = app.add_subcommand("sinkhorn", "Solve the entropic robust transport problem");
    Common& c = commons.emplace_back();
    sub->add_option("a", path_a, "Source cloud CSV")->required();
    sub->add_option("b", path_b, "Target cloud CSV")->required();
    sub->add_option("--epsilon", epsilon, "Entropic regularization")->required();
    sub->add_option("--lambda", lambda, "Robustness level")->required();
    sub->add_flag("--weighted", weighted, "Last CSV column holds atom weights");
    sub->add_option("--plan", plan_path, "Also write the transport plan to this CSV");
    add_solver_flags(sub, c);
    add_output_flags(sub, c, "json");
    bind(sub, [&, &c = c] {
      const DiscreteMeasure mu = load_measure(path_a, weighted);
      const DiscreteMeasure nu = load_measure(path_b, weighted);
      const CostMatrix cost = truncated_cost(mu.cloud(), nu.cloud(), lambda);
      const SinkhornSolution sol = solve(mu, nu, cost, epsilon, c.solver());
      const Matrix pi = plan(sol, mu.weights(), nu.weights(), cost, epsilon);
      const json meta = meta_block(active, std::nullopt);
      json body{{"phi", to_std(sol.phi)},
                {"psi", to_std(sol.psi)},
                {"iterations", sol.iterations},
                {"marginal_error", sol.marginal_error},
                {"converged", sol.converged},
                {"epsilon", sol.epsilon},
                {"lambda", sol.lambda},
                {"primal_value", primal_value(pi, cost, mu.weights(), nu.weights(), epsilon)},
                {"dual_value", dual_value(sol, mu.weights(), nu.weights())}};
      if (!plan_path.empty()) write_csv_file(plan_path, meta_lines(meta), {}, pi);
      emit_object(body, meta, c, out);
    });
  }

  // barycenter
  std::string grid_path, measures_path;
  std::vector<double> alphas;
  double bary_tol = 1e-7;
  int bary_iter = 5000;
  {
    auto* sub = app.add_subcommand("barycenter", "IBP barycenter of measures on a shared grid");
    Common& c = commons.emplace_back();
    sub->add_option("--grid", grid_path, "Grid CSV, one atom per row")->required();
    sub->add_option("--measures", measures_path,
                    "Measures CSV: one row per grid atom, one column per input measure")
        ->required();
    sub->add_option("--weights", alphas, "Barycentric weights, comma separated")
        ->required()
        ->delimiter(',');
    sub->add_option("--epsilon", epsilon, "Entropic regularization")->required();
    sub->add_option("--lambda", lambda, "Robustness level")->required();
    sub->add_option("--tol", bary_tol, "L1 change between iterates");
    sub->add_option("--max-iter", bary_iter, "Iteration cap");
    add_output_flags(sub, c, "csv");
    bind(sub, [&, &c = c] {
      const PointCloud grid(read_matrix_csv(grid_path));
      const Matrix weights = read_matrix_csv(measures_path);
      if (weights.rows() != grid.size()) {
        throw std::invalid_argument("measures CSV has " + std::to_string(weights.rows()) +
                                    " rows but the grid has " + std::to_string(grid.size()) +
                                    " atoms");
      }
      BarycenterProblem p;
      for (Eigen::Index m = 0; m < weights.cols(); ++m) p.inputs.emplace_back(grid, weights.col(m));
      p.alphas = Eigen::Map<const Vector>(alphas.data(), static_cast<Eigen::Index>(alphas.size()));
      p.epsilon = epsilon;
      p.lambda = lambda;
      p.tol = bary_tol;
      p.max_iter = bary_iter;
      const BarycenterResult r = ibp_barycenter(p);
      json meta = meta_block(active, std::nullopt);
      meta["iterations"] = r.iterations;
      meta["final_change"] = r.final_change;
      meta["converged"] = r.converged;
      Matrix rows(grid.size(), grid.dim() + 1);
      rows << grid.points(), r.barycenter.weights();
      std::vector<std::string> header;
      if (c.format == "json") {
        for (Eigen::Index k = 0; k < grid.dim(); ++k) header.push_back("x" + std::to_string(k));
        header.push_back("weight");
      }
      Meta lines = meta_lines(meta);
      if (c.format == "csv") {
        lines.emplace_back("iterations", std::to_string(r.iterations));
        lines.emplace_back("final_change", format_double(r.final_change));
        lines.emplace_back("converged", r.converged ? "true" : "false");
        Sink sink(c.output, out);
        write_csv(sink.stream(), lines, header, rows);
      } else {
        emit_table(header, rows, meta, c.output, "json", out);
      }
    });
  }

  // flow
  std::string loss_kind = "debiased_sinkhorn", loss_path;
  double sigma = 0.0, tau = 0.05;
  int steps = 100;
  {
    auto* sub = app.add_subcommand("flow", "Euler particle flow of a source cloud toward a target");
    Common& c = commons.emplace_back();
    sub->add_option("--source", path_a, "Source particles CSV")->required();
    sub->add_option("--target", path_b, "Target cloud CSV")->required();
    sub->add_flag("--weighted", weighted, "Last CSV column holds atom weights");
    sub->add_option("--loss", loss_kind, "debiased_sinkhorn | mmd_trunc_laplace | mmd_gaussian")
        ->check(CLI::IsMember({"debiased_sinkhorn", "mmd_trunc_laplace", "mmd_gaussian"}));
    sub->add_option("--epsilon", epsilon, "Entropic / kernel bandwidth");
    sub->add_option("--lambda", lambda, "Robustness level");
    sub->add_option("--sigma", sigma, "Gaussian kernel width (mmd_gaussian)");
    sub->add_option("--tau", tau, "Time step");
    sub->add_option("--steps", steps, "Number of Euler steps");
    sub->add_option("--loss-output", loss_path, "Loss-per-frame CSV");
    add_solver_flags(sub, c);
    add_output_flags(sub, c, "csv");
    bind(sub, [&, &c = c] {
      const DiscreteMeasure src = load_measure(path_a, weighted);
      const DiscreteMeasure tgt = load_measure(path_b, weighted);
      LossSpec spec;
      spec.kind = parse_loss_kind(loss_kind);
      spec.epsilon = epsilon;
      spec.lambda = lambda;
      spec.sigma = sigma;
      spec.solver = c.solver();
      const FlowTrajectory traj = euler_flow(src, tgt, spec, tau, steps);
      json meta = meta_block(active, std::nullopt);
      meta["completed"] = traj.completed;
      if (!traj.completed) {
        meta["failed_step"] = traj.failed_step;
        meta["error"] = traj.error;
      }
      const Eigen::Index n = src.size(), d = src.dim();
      const auto frames = static_cast<Eigen::Index>(traj.frames.size());
      Matrix rows(frames * n, 3 + d);
      std::vector<std::string> header{"frame", "time", "particle"};
      for (Eigen::Index k = 0; k < d; ++k) header.push_back("x" + std::to_string(k));
      for (Eigen::Index f = 0; f < frames; ++f) {
        for (Eigen::Index i = 0; i < n; ++i) {
          rows(f * n + i, 0) = static_cast<double>(f);
          rows(f * n + i, 1) = static_cast<double>(f) * tau;
          rows(f * n + i, 2) = static_cast<double>(i);
          rows.block(f * n + i, 3, 1, d) = traj.frames[static_cast<std::size_t>(f)].point(i);
        }
      }
      emit_table(header, rows, meta, c.output, c.format, out);
      Matrix losses(frames, 3);
      for (Eigen::Index f = 0; f < frames; ++f) {
        losses(f, 0) = static_cast<double>(f);
        losses(f, 1) = static_cast<double>(f) * tau;
        losses(f, 2) = traj.loss_values[static_cast<std::size_t>(f)];
      }
      if (!loss_path.empty()) emit_table({"frame", "time", "loss"}, losses, meta, loss_path, "csv", out);
      if (!traj.completed) throw NumericalError("flow stopped at step " +
                                                std::to_string(traj.failed_step) + ": " + traj.error);
    });
  }

  // goftest / power / complexity share the null description
  std::string family = "gaussian", sample_path;
  int dim = 1, n = 50, mc_reps = 200, meta_reps = 100;
  double df = 1.0, level = 0.05, shift = 0.0;
  std::vector<double> location, shifts;
  const auto add_null_flags = [&](CLI::App* sub) {
    sub->add_option("--null", family, "Null family: gaussian | student_t")
        ->check(CLI::IsMember({"gaussian", "student_t"}));
    sub->add_option("--d", dim, "Dimension")->required();
    sub->add_option("--df", df, "Degrees of freedom (student_t)");
    sub->add_option("--location", location, "Null location, comma separated (default 0)")
        ->delimiter(',');
  };
  {
    auto* sub = app.add_subcommand("goftest", "Monte-Carlo goodness-of-fit test");
    Common& c = commons.emplace_back();
    add_null_flags(sub);
    sub->add_option("--n", n, "Sample size when no --sample is given");
    sub->add_option("--sample", sample_path, "Sample CSV (default: draw from the null + shift)");
    sub->add_option("--shift", shift, "Location shift of the generated sample");
    sub->add_option("--epsilon", epsilon, "Entropic regularization")->required();
    sub->add_option("--lambda", lambda, "Robustness level")->required();
    sub->add_option("--level", level, "Significance level");
    sub->add_option("--mc-reps", mc_reps, "Monte-Carlo replicates");
    sub->add_option("--seed", c.seed, "Random seed");
    add_solver_flags(sub, c);
    add_output_flags(sub, c, "json");
    bind(sub, [&, &c = c] {
      const NullSpec null = make_null(family, dim, df, location);
      PointCloud sample = [&] {
        if (!sample_path.empty()) return PointCloud(read_cloud_csv(sample_path, false).points);
        NullSpec alt = null;
        alt.location = null.center().array() + shift;
        return sample_null(alt, n, derive_seed(c.seed, kSampleStream));
      }();
      const TestResult t =
          gof_test(sample, null, epsilon, lambda, level, mc_reps, c.seed, c.solver());
      emit_object(test_json(t), meta_block(active, c.seed), c, out);
    });
  }
  {
    auto* sub = app.add_subcommand("power", "Power curve over location shifts");
    Common& c = commons.emplace_back();
    add_null_flags(sub);
    sub->add_option("--n", n, "Sample size");
    sub->add_option("--shifts", shifts, "Shifts, comma separated")->required()->delimiter(',');
    sub->add_option("--epsilon", epsilon, "Entropic regularization")->required();
    sub->add_option("--lambda", lambda, "Robustness level")->required();
    sub->add_option("--level", level, "Significance level");
    sub->add_option("--mc-reps", mc_reps, "Monte-Carlo replicates for calibration");
    sub->add_option("--meta-reps", meta_reps, "Samples per shift");
    sub->add_option("--seed", c.seed, "Random seed");
    add_solver_flags(sub, c);
    add_output_flags(sub, c, "csv");
    bind(sub, [&, &c = c] {
      const NullSpec null = make_null(family, dim, df, location);
      const auto curve = power_curve(null, shifts, n, epsilon, lambda, level, mc_reps, meta_reps,
                                     c.seed, c.solver());
      Matrix rows(static_cast<Eigen::Index>(curve.size()), 2);
      for (std::size_t k = 0; k < curve.size(); ++k) {
        rows(static_cast<Eigen::Index>(k), 0) = curve[k].shift;
        rows(static_cast<Eigen::Index>(k), 1) = curve[k].rejection_rate;
      }
      emit_table({"shift", "rejection_rate"}, rows, meta_block(active, c.seed), c.output, c.format,
                 out);
    });
  }

  // complexity
  std::vector<int> n_grid;
  int reps = 20;
  ComplexityOptions cx;
  std::string means_path;
  {
    auto* sub = app.add_subcommand("complexity", "Empirical decay rate of the divergence in n");
    Common& c = commons.emplace_back();
    sub->add_option("--d", dim, "Dimension")->required();
    sub->add_option("--epsilon", epsilon, "Entropic regularization")->required();
    sub->add_option("--lambda", lambda, "Robustness level")->required();
    sub->add_option("--n-grid", n_grid, "Sample sizes, comma separated")->required()->delimiter(',');
    sub->add_option("--reps", reps, "Replicates per sample size");
    sub->add_option("--seed", c.seed, "Random seed");
    sub->add_option("--null", family, "Generator family: gaussian | student_t")
        ->check(CLI::IsMember({"gaussian", "student_t"}));
    sub->add_option("--df", df, "Degrees of freedom (student_t generator)");
    sub->add_option("--clip", cx.clip, "Clamp coordinates to [-clip, clip]; 0 disables");
    sub->add_option("--scale", cx.scale, "Multiply generated points");
    sub->add_option("--ref-factor", cx.ref_factor, "Reference size as a multiple of max n");
    sub->add_option("--means-output", means_path, "CSV of per-n means");
    add_solver_flags(sub, c);
    add_output_flags(sub, c, "json");
    bind(sub, [&, &c = c] {
      const NullSpec gen = make_null(family, dim, df, {});
      const ComplexityResult r =
          sample_complexity(dim, epsilon, lambda, n_grid, reps, c.seed, gen, cx, c.solver());
      const json meta = meta_block(active, c.seed);
      json body{{"slope", r.slope},
                {"intercept", r.intercept},
                {"n_grid", r.n_grid},
                {"means", r.means},
                {"reference_size", r.reference_size}};
      if (!means_path.empty()) {
        Matrix rows(static_cast<Eigen::Index>(r.n_grid.size()), 2);
        for (std::size_t k = 0; k < r.n_grid.size(); ++k) {
          rows(static_cast<Eigen::Index>(k), 0) = r.n_grid[k];
          rows(static_cast<Eigen::Index>(k), 1) = r.means[k];
        }
        emit_table({"n", "mean"}, rows, meta, means_path, "csv", out);
      }
      emit_object(body, meta, c, out);
    });
  }

  // colorxfer
  std::string png_source, png_target, png_output, space = "rgb3";
  TransferConfig tc;
  {
    auto* sub = app.add_subcommand("colorxfer", "Transfer the palette of one PNG onto another");
    Common& c = commons.emplace_back();
    sub->add_option("--source", png_source, "Palette source PNG")->required();
    sub->add_option("--target", png_target, "PNG to recolour")->required();
    sub->add_option("-o,--output", png_output, "Output PNG")->required();
    sub->add_option("--subsample", tc.subsample, "Pixels sampled from each image");
    sub->add_option("--epsilon", tc.epsilon, "Entropic regularization");
    sub->add_option("--lambda", tc.lambda, "Robustness level");
    sub->add_option("--seed", c.seed, "Random seed");
    sub->add_option("--color-space", space, "rgb3 | red_blue2")
        ->check(CLI::IsMember({"rgb3", "red_blue2"}));
    add_solver_flags(sub, c);
    bind(sub, [&, &c = c] {
      tc.seed = c.seed;
      tc.color_space = parse_color_space(space);
      tc.solver = c.solver();
      const ImageTensor result = color_transfer(read_png(png_source), read_png(png_target), tc);
      write_png(png_output, result);
      json doc{{"output", png_output}, {"width", result.width}, {"height", result.height}};
      doc["meta"] = meta_block(active, c.seed);
      out << doc.dump(2) << '\n';
    });
  }

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 1;
  }

  try {
    if (action) action();
  } catch (const NumericalError& e) {
    err << "numerical failure: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

int run(int argc, const char* const* argv) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run(args, std::cout, std::cerr);
}

}  // namespace erobot::cli
