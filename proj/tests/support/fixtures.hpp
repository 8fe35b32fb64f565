#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <random>
#include <vector>

#include "erobot/barycenter.hpp"
#include "erobot/core.hpp"
#include "oracles.hpp"

namespace fixtures {

using erobot::DiscreteMeasure;
using erobot::Matrix;
using erobot::PointCloud;
using erobot::Vector;

inline Matrix random_points(std::mt19937_64& rng, int n, int d, double scale = 1.0) {
  std::normal_distribution<double> z;
  Matrix x(n, d);
  for (int i = 0; i < n; ++i)
    for (int k = 0; k < d; ++k) x(i, k) = scale * z(rng);
  return x;
}

// Strictly positive weights, normalised.
inline Vector random_weights(std::mt19937_64& rng, int n) {
  std::uniform_real_distribution<double> u(0.2, 1.0);
  Vector w(n);
  for (int i = 0; i < n; ++i) w[i] = u(rng);
  return w / w.sum();
}

inline DiscreteMeasure random_measure(std::mt19937_64& rng, int n, int d, double scale = 1.0) {
  return DiscreteMeasure(PointCloud(random_points(rng, n, d, scale)), random_weights(rng, n));
}

inline double log_uniform(std::mt19937_64& rng, double lo, double hi) {
  std::uniform_real_distribution<double> u(std::log(lo), std::log(hi));
  return std::exp(u(rng));
}

inline oracle::Points to_points(const Matrix& m) {
  oracle::Points p(static_cast<std::size_t>(m.rows()), oracle::Vec(static_cast<std::size_t>(m.cols())));
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index k = 0; k < m.cols(); ++k) p[i][k] = m(i, k);
  return p;
}

inline Matrix to_matrix(const oracle::Points& p) {
  Matrix m(static_cast<Eigen::Index>(p.size()), static_cast<Eigen::Index>(p.front().size()));
  for (std::size_t i = 0; i < p.size(); ++i)
    for (std::size_t k = 0; k < p[i].size(); ++k) m(i, k) = p[i][k];
  return m;
}

inline oracle::Vec to_vec(const Vector& v) { return {v.data(), v.data() + v.size()}; }

// Two corrupted shapes on a 32 x 32 pixel grid: a filled disc of radius 4.5
// with 10 outlier pixels in the top-right corner, and a filled square of side
// 9 with 10 outliers in the bottom-right corner. Rows grow downwards.
struct CorruptedShapes {
  PointCloud grid;
  DiscreteMeasure circle;
  DiscreteMeasure square;
  std::vector<Eigen::Index> corner_atoms;  // the two 8 x 8 corner boxes
};

inline CorruptedShapes corrupted_shapes() {
  constexpr int side = 32;
  const PointCloud grid = erobot::regular_grid(side, side);
  const auto at = [](int r, int c) { return static_cast<Eigen::Index>(r) * side + c; };
  Vector circle = Vector::Zero(side * side), square = Vector::Zero(side * side);
  const double centre = 15.5;
  for (int r = 0; r < side; ++r) {
    for (int c = 0; c < side; ++c) {
      if (std::hypot(r - centre, c - centre) <= 4.5) circle[at(r, c)] = 1.0;
      if (std::abs(r - centre) <= 4.5 && std::abs(c - centre) <= 4.5) square[at(r, c)] = 1.0;
    }
  }
  // 10 outliers each, two rows of five pixels tucked into the corner.
  for (int k = 0; k < 10; ++k) {
    const int r = 1 + k / 5, c = 26 + k % 5;
    circle[at(r, c)] = 1.0;
    square[at(side - 1 - r, c)] = 1.0;
  }
  std::vector<Eigen::Index> corners;
  for (int r = 0; r < 8; ++r) {
    for (int c = 24; c < side; ++c) {
      corners.push_back(at(r, c));
      corners.push_back(at(side - 1 - r, c));
    }
  }
  return {grid, DiscreteMeasure(grid, circle / circle.sum()),
          DiscreteMeasure(grid, square / square.sum()), corners};
}

// Source blob around (0, 0) plus outlier "stars", target blob around (1, 0).
struct Blobs {
  DiscreteMeasure source;
  DiscreteMeasure target;
  std::vector<Eigen::Index> outliers;  // rows of the source cloud
};

inline Blobs blobs_with_outliers(unsigned seed = 11, int blob = 100) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> z(0.0, 0.3);
  // Five stars on a radius-2.4 arc left of the source; each sits more than
  // 1.2 from every blob particle and from the other stars.
  std::vector<std::array<double, 2>> stars;
  for (int k = 0; k < 5; ++k) {
    const double angle = M_PI / 2.0 + k * M_PI / 4.0;
    stars.push_back({2.4 * std::cos(angle), 2.4 * std::sin(angle)});
  }
  Matrix src(blob + static_cast<int>(stars.size()), 2), tgt(blob, 2);
  const auto clamp = [](double v) { return std::clamp(v, -0.75, 0.75); };
  for (int i = 0; i < blob; ++i) {
    src(i, 0) = clamp(z(rng));
    src(i, 1) = clamp(z(rng));
    tgt(i, 0) = 1.0 + clamp(z(rng));
    tgt(i, 1) = clamp(z(rng));
  }
  std::vector<Eigen::Index> outliers;
  for (std::size_t k = 0; k < stars.size(); ++k) {
    src(blob + static_cast<int>(k), 0) = stars[k][0];
    src(blob + static_cast<int>(k), 1) = stars[k][1];
    outliers.push_back(blob + static_cast<Eigen::Index>(k));
  }
  return {erobot::uniform_measure(PointCloud(src)), erobot::uniform_measure(PointCloud(tgt)),
          outliers};
}

}  // namespace fixtures
