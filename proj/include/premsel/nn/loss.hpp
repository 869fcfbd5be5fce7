#pragma once

#include <algorithm>
#include <cmath>
#include <string>

#include "premsel/error.hpp"
#include "premsel/nn/tensor.hpp"

namespace premsel::nn {

enum class LossKind { CategoricalCrossentropy, BinaryCrossentropy };

inline constexpr double kLossClamp = 1e-7;

/// Mean loss over the batch plus its gradient w.r.t. the output logits,
/// fused with the matching output activation (softmax / sigmoid).
template <typename Scalar>
struct LossResult {
  double loss = 0.0;
  Matrix<Scalar> logit_grad;
};

namespace detail {

template <typename Scalar>
void require_same_shape(const Matrix<Scalar>& a, const Matrix<Scalar>& b, const char* what) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw Error(ErrorCode::ShapeMismatch,
                std::string(what) + ": prediction is " + std::to_string(a.rows()) + "x" +
                    std::to_string(a.cols()) + ", target is " + std::to_string(b.rows()) + "x" +
                    std::to_string(b.cols()));
  }
}

}  // namespace detail

/// mean_rows( -sum_j t_j ln clamp(p_j, eps, 1) ); gradient (p - t) / batch.
template <typename Scalar>
LossResult<Scalar> categorical_crossentropy(const Matrix<Scalar>& pred, const Matrix<Scalar>& target) {
  detail::require_same_shape(pred, target, "categorical_crossentropy");
  double total = 0.0;
  for (Eigen::Index r = 0; r < pred.rows(); ++r) {
    double row = 0.0;
    for (Eigen::Index c = 0; c < pred.cols(); ++c) {
      const double t = static_cast<double>(target(r, c));
      if (t != 0.0) row -= t * std::log(std::clamp(static_cast<double>(pred(r, c)), kLossClamp, 1.0));
    }
    total += row;
  }
  const auto batch = static_cast<double>(std::max<Eigen::Index>(pred.rows(), 1));
  return {total / batch, (pred - target) / static_cast<Scalar>(batch)};
}

/// mean( -[y ln p + (1-y) ln(1-p)] ), p clamped to [eps, 1-eps]; gradient (p - y) / batch.
template <typename Scalar>
LossResult<Scalar> binary_crossentropy(const Matrix<Scalar>& pred, const Matrix<Scalar>& labels) {
  detail::require_same_shape(pred, labels, "binary_crossentropy");
  if (pred.cols() != 1) throw Error(ErrorCode::ShapeMismatch, "binary_crossentropy expects one column");
  double total = 0.0;
  for (Eigen::Index r = 0; r < pred.rows(); ++r) {
    const double p = std::clamp(static_cast<double>(pred(r, 0)), kLossClamp, 1.0 - kLossClamp);
    const double y = static_cast<double>(labels(r, 0));
    total -= y * std::log(p) + (1.0 - y) * std::log(1.0 - p);
  }
  const auto batch = static_cast<double>(std::max<Eigen::Index>(pred.rows(), 1));
  return {total / batch, (pred - labels) / static_cast<Scalar>(batch)};
}

template <typename Scalar>
LossResult<Scalar> compute_loss(LossKind kind, const Matrix<Scalar>& pred, const Matrix<Scalar>& target) {
  return kind == LossKind::CategoricalCrossentropy ? categorical_crossentropy(pred, target)
                                                   : binary_crossentropy(pred, target);
}

}  // namespace premsel::nn
