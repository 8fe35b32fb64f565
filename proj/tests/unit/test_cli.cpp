#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "cli/csv.hpp"
#include "cli/run.hpp"
#include "doctest.h"
#include "erobot/colorxfer.hpp"
#include "json.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Scratch {
  fs::path dir;
  Scratch() {
    dir = fs::temp_directory_path() / ("erobot_cli_" + std::to_string(std::rand()));
    fs::create_directories(dir);
  }
  ~Scratch() { fs::remove_all(dir); }
  std::string write(const std::string& name, const std::string& body) const {
    const fs::path p = dir / name;
    std::ofstream(p) << body;
    return p.string();
  }
  std::string path(const std::string& name) const { return (dir / name).string(); }
};

struct Result {
  int code;
  std::string out, err;
};

Result call(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = erobot::cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

TEST_SUITE("cli") {
  TEST_CASE("self divergence is zero") {
    Scratch s;
    const std::string a = s.write("a.csv", "# cloud\n0,0\n1,0\n0.5,2\n\n");
    const Result r = call({"divergence", a, a, "--epsilon", "1", "--lambda", "2"});
    REQUIRE(r.code == 0);
    const json j = json::parse(r.out);
    CHECK(std::abs(j["value"].get<double>()) <= 1e-6);
    CHECK(j["meta"]["subcommand"] == "divergence");
    CHECK(j["meta"]["params"]["epsilon"] == "1");
  }

  TEST_CASE("weighted clouds and csv output") {
    Scratch s;
    const std::string a = s.write("a.csv", "0,0.25\n1,0.75\n");
    const std::string b = s.write("b.csv", "3,1\n");
    const Result r = call({"divergence", a, b, "--epsilon", "0.5", "--lambda", "10", "--weighted", "--format", "csv"});
    REQUIRE(r.code == 0);
    CHECK(r.out.find("# subcommand: divergence") != std::string::npos);
    CHECK(r.out.find("key,value") != std::string::npos);
    CHECK(r.out.find("\nvalue,") != std::string::npos);
  }

  TEST_CASE("sinkhorn writes potentials and a plan") {
    Scratch s;
    const std::string a = s.write("a.csv", "0\n1\n");
    const Result r = call({"sinkhorn", a, a, "--epsilon", "1", "--lambda", "10", "--plan", s.path("plan.csv")});
    REQUIRE(r.code == 0);
    const json j = json::parse(r.out);
    CHECK(j["phi"].size() == 2);
    CHECK(j["converged"] == true);
    CHECK(std::abs(j["primal_value"].get<double>() - j["dual_value"].get<double>()) <= 1e-5);
    const erobot::Matrix plan = erobot::cli::read_matrix_csv(s.path("plan.csv"));
    CHECK(plan.rows() == 2);
    CHECK(plan.sum() == doctest::Approx(1.0));
  }

  TEST_CASE("barycenter round trip") {
    Scratch s;
    const std::string grid = s.write("grid.csv", "0\n1\n");
    const std::string measures = s.write("m.csv", "1,1\n0,0\n");
    const Result r = call({"barycenter", "--grid", grid, "--measures", measures, "--weights", "0.5,0.5",
                           "--epsilon", "1", "--lambda", "1000", "-o", s.path("out.csv")});
    REQUIRE(r.code == 0);
    const erobot::Matrix out = erobot::cli::read_matrix_csv(s.path("out.csv"));
    REQUIRE(out.rows() == 2);
    REQUIRE(out.cols() == 2);
    CHECK(out.col(1).sum() == doctest::Approx(1.0));
    CHECK(out(0, 1) > out(1, 1));
  }

  TEST_CASE("flow emits one row per particle and frame") {
    Scratch s;
    const std::string src = s.write("s.csv", "0,0\n");
    const std::string tgt = s.write("t.csv", "1,0\n");
    const Result r = call({"flow", "--source", src, "--target", tgt, "--epsilon", "0.05", "--lambda", "10",
                           "--tau", "0.1", "--steps", "3", "--format", "csv", "--loss-output", s.path("loss.csv")});
    REQUIRE(r.code == 0);
    const std::string loss = slurp(s.path("loss.csv"));
    CHECK(loss.find("frame,time,loss") != std::string::npos);
    CHECK(std::count(loss.begin(), loss.end(), '\n') - std::count(loss.begin(), loss.end(), '#') == 5);
    CHECK(r.out.find("frame,time,particle,x0,x1") != std::string::npos);
  }

  TEST_CASE("goftest is deterministic") {
    const std::vector<std::string> args = {"goftest", "--null", "gaussian", "--d", "3", "--n", "20",
                                           "--epsilon", "1", "--lambda", "3", "--mc-reps", "60",
                                           "--seed", "7"};
    const Result a = call(args), b = call(args);
    REQUIRE(a.code == 0);
    CHECK(a.out == b.out);
    const json j = json::parse(a.out);
    CHECK(j.contains("statistic"));
    CHECK(j.contains("p_value"));
    CHECK(j["meta"]["seed"] == 7);
  }

  TEST_CASE("power and complexity") {
    const Result p = call({"power", "--null", "gaussian", "--d", "2", "--n", "15", "--shifts", "0,4",
                           "--epsilon", "1", "--lambda", "3", "--mc-reps", "50", "--meta-reps", "20",
                           "--seed", "3", "--format", "csv"});
    REQUIRE(p.code == 0);
    CHECK(p.out.find("shift,rejection_rate") != std::string::npos);

    const Result c = call({"complexity", "--d", "2", "--epsilon", "0.5", "--lambda", "2", "--n-grid",
                           "20,40,80,160", "--reps", "3", "--seed", "1", "--ref-factor", "2"});
    REQUIRE(c.code == 0);
    const json j = json::parse(c.out);
    CHECK(j["means"].size() == 4);
    CHECK(j.contains("slope"));
  }

  TEST_CASE("colorxfer writes a png") {
    Scratch s;
    erobot::write_png(s.path("a.png"), erobot::ImageTensor::filled(5, 4, 0.9, 0.1, 0.1));
    erobot::write_png(s.path("b.png"), erobot::ImageTensor::filled(3, 3, 0.1, 0.1, 0.9));
    const std::vector<std::string> args = {"colorxfer", "--source", s.path("a.png"), "--target",
                                           s.path("b.png"), "-o", s.path("c.png"), "--subsample", "9",
                                           "--seed", "4"};
    REQUIRE(call(args).code == 0);
    const std::string first = slurp(s.path("c.png"));
    REQUIRE(call(args).code == 0);
    CHECK(first == slurp(s.path("c.png")));
    const erobot::ImageTensor out = erobot::read_png(s.path("c.png"));
    CHECK(out.width == 3);
    CHECK(out.pixels(0, 0) == doctest::Approx(0.9).epsilon(0.01));
  }

  TEST_CASE("usage and input errors") {
    const Result missing = call({"divergence", "--epsilon", "1"});
    CHECK(missing.code == 1);
    CHECK(missing.err.find("Usage") != std::string::npos);
    CHECK(call({}).code == 1);
    CHECK(call({"--help"}).code == 0);

    Scratch s;
    const std::string bad = s.write("bad.csv", "0,0\n1,x\n");
    const Result r = call({"divergence", bad, bad, "--epsilon", "1", "--lambda", "1"});
    CHECK(r.code == 1);
    CHECK(r.err.find(":2:") != std::string::npos);
    const std::string ragged = s.write("ragged.csv", "0,0\n1\n");
    CHECK(call({"divergence", ragged, ragged, "--epsilon", "1", "--lambda", "1"}).code == 1);
  }

  TEST_CASE("numerical failure exits with 2") {
    Scratch s;
    const std::string src = s.write("s.csv", "0,0\n0.3,0.1\n1,1\n");
    const std::string tgt = s.write("t.csv", "2,2\n0.1,0.5\n");
    const Result r = call({"flow", "--source", src, "--target", tgt, "--epsilon", "0.001", "--lambda", "5",
                           "--steps", "2", "--max-iter", "1", "--check-every", "1", "--tol", "1e-15"});
    CHECK(r.code == 2);
  }
}
