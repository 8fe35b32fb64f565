#include "erobot/colorxfer.hpp"

#include <algorithm>
#include <array>
#include <limits>
#include <map>
#include <numeric>
#include <vector>

#include "erobot/random.hpp"

namespace erobot {

ColorSpace parse_color_space(const std::string& name) {
  if (name == "rgb3") return ColorSpace::rgb3;
  if (name == "red_blue2") return ColorSpace::red_blue2;
  throw std::invalid_argument("unknown color space '" + name + "' (expected rgb3 or red_blue2)");
}

std::string to_string(ColorSpace space) {
  return space == ColorSpace::rgb3 ? "rgb3" : "red_blue2";
}

void TransferConfig::validate() const {
  if (subsample < 1) throw std::invalid_argument("subsample must be positive");
  require_positive(epsilon, "epsilon");
  require_positive(lambda, "lambda");
  solver.validate();
}

namespace {

std::vector<int> feature_channels(ColorSpace space) {
  return space == ColorSpace::rgb3 ? std::vector<int>{0, 1, 2} : std::vector<int>{0, 2};
}

Matrix features(const ImageTensor& img, const std::vector<int>& channels) {
  Matrix f(img.pixels.rows(), static_cast<Eigen::Index>(channels.size()));
  for (std::size_t c = 0; c < channels.size(); ++c) {
    f.col(static_cast<Eigen::Index>(c)) = img.pixels.col(channels[c]);
  }
  return f;
}

// k distinct row indices via a partial Fisher-Yates shuffle.
std::vector<Eigen::Index> choose_rows(Eigen::Index total, int k, std::uint64_t seed) {
  std::vector<Eigen::Index> idx(static_cast<std::size_t>(total));
  std::iota(idx.begin(), idx.end(), Eigen::Index{0});
  Rng rng(seed);
  for (int i = 0; i < k; ++i) {
    std::uniform_int_distribution<Eigen::Index> pick(i, total - 1);
    std::swap(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(pick(rng))]);
  }
  idx.resize(static_cast<std::size_t>(k));
  return idx;
}

Matrix take_rows(const Matrix& m, const std::vector<Eigen::Index>& rows) {
  Matrix out(static_cast<Eigen::Index>(rows.size()), m.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = m.row(rows[i]);
  return out;
}

}  // namespace

ImageTensor color_transfer(const ImageTensor& source, const ImageTensor& target,
                           const TransferConfig& cfg) {
  cfg.validate();
  source.validate();
  target.validate();
  const auto check_size = [&](const ImageTensor& img, const char* which) {
    if (cfg.subsample > img.pixels.rows()) {
      throw std::invalid_argument(std::string("subsample ") + std::to_string(cfg.subsample) +
                                  " exceeds the " + which + " image's " +
                                  std::to_string(img.pixels.rows()) + " pixels");
    }
  };
  check_size(source, "source");
  check_size(target, "target");

  const std::vector<int> channels = feature_channels(cfg.color_space);
  const Matrix src = features(source, channels);
  const Matrix tgt = features(target, channels);
  const Matrix xs = take_rows(src, choose_rows(src.rows(), cfg.subsample, derive_seed(cfg.seed, 0)));
  const Matrix ys = take_rows(tgt, choose_rows(tgt.rows(), cfg.subsample, derive_seed(cfg.seed, 1)));

  const DiscreteMeasure mu = uniform_measure(PointCloud(xs));
  const DiscreteMeasure nu = uniform_measure(PointCloud(ys));
  const CostMatrix cost = truncated_cost(mu.cloud(), nu.cloud(), cfg.lambda);
  const SinkhornSolution sol = solve(mu, nu, cost, cfg.epsilon, cfg.solver);
  if (!sol.converged) {
    throw NumericalError("colour transfer solve did not converge: marginal error " +
                         std::to_string(sol.marginal_error) + " after " +
                         std::to_string(sol.iterations) + " iterations");
  }
  const Matrix pi = plan(sol, mu.weights(), nu.weights(), cost, cfg.epsilon);
  const Vector mass = pi.colwise().sum().transpose();
  if ((mass.array() <= 0.0).any()) {
    throw NumericalError("colour transfer plan has an empty target column");
  }
  const Matrix mapped = mass.cwiseInverse().asDiagonal() * (pi.transpose() * xs);
  const Matrix displacement = mapped - ys;

  ImageTensor out = target;
  std::map<std::array<double, 3>, Eigen::Index> nearest_cache;
  for (Eigen::Index p = 0; p < tgt.rows(); ++p) {
    const std::array<double, 3> key{target.pixels(p, 0), target.pixels(p, 1), target.pixels(p, 2)};
    auto it = nearest_cache.find(key);
    if (it == nearest_cache.end()) {
      Eigen::Index best = 0;
      (ys.rowwise() - tgt.row(p)).rowwise().squaredNorm().minCoeff(&best);
      it = nearest_cache.emplace(key, best).first;
    }
    for (std::size_t c = 0; c < channels.size(); ++c) {
      const double v = tgt(p, static_cast<Eigen::Index>(c)) +
                       displacement(it->second, static_cast<Eigen::Index>(c));
      out.pixels(p, channels[c]) = std::clamp(v, 0.0, 1.0);
    }
  }
  return out;
}

}  // namespace erobot
