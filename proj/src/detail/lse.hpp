#pragma once

#include <cmath>
#include <limits>

#include "erobot/core.hpp"

namespace erobot::detail {

inline Vector log_weights(const Vector& w) {
  return w.unaryExpr([](double x) {
    return x > 0.0 ? std::log(x) : -std::numeric_limits<double>::infinity();
  });
}

// out_i = log sum_j exp(h_j - cs_ij); `work` is scratch of the same shape as cs.
inline void lse_rows(const Matrix& cs, const Vector& h, Matrix& work, Vector& out) {
  work.noalias() = (-cs).rowwise() + h.transpose();
  const Vector m = work.rowwise().maxCoeff();
  work = (work.colwise() - m).array().exp().matrix();
  out = m.array() + work.rowwise().sum().array().log();
}

// out_j = log sum_i exp(h_i - cs_ij).
inline void lse_cols(const Matrix& cs, const Vector& h, Matrix& work, Vector& out) {
  work.noalias() = (-cs).colwise() + h;
  const Eigen::RowVectorXd m = work.colwise().maxCoeff();
  work = (work.rowwise() - m).array().exp().matrix();
  out = (m.array() + work.colwise().sum().array().log()).transpose();
}

}  // namespace erobot::detail
