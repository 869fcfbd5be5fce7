#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string_view>

#include "premsel/error.hpp"
#include "premsel/nn/tensor.hpp"

namespace premsel::nn {

/// Codes are part of the PSNN model file format.
enum class Activation : std::uint8_t {
  Identity = 0,
  Tanh = 1,
  Softmax = 2,
  Relu = 3,
  Sigmoid = 4,
};

constexpr std::string_view to_string(Activation a) noexcept {
  switch (a) {
    case Activation::Identity: return "identity";
    case Activation::Tanh: return "tanh";
    case Activation::Softmax: return "softmax";
    case Activation::Relu: return "relu";
    case Activation::Sigmoid: return "sigmoid";
  }
  return "?";
}

constexpr bool is_valid_activation(std::uint8_t code) noexcept { return code <= 4; }

/// Applies the activation in place, row-wise for softmax.
template <typename Scalar>
void activate(Activation a, Matrix<Scalar>& z) {
  switch (a) {
    case Activation::Identity:
      break;
    case Activation::Tanh: {
      // Scalar std::tanh, so a value is identical whatever its position in the
      // batch; clamped so outputs stay strictly inside (-1, 1) where tanh rounds to +-1.
      const Scalar bound = std::nextafter(Scalar(1), Scalar(0));
      for (Eigen::Index i = 0; i < z.size(); ++i) {
        z.data()[i] = std::clamp(std::tanh(z.data()[i]), -bound, bound);
      }
      break;
    }
    case Activation::Softmax: {
      for (Eigen::Index r = 0; r < z.rows(); ++r) {
        auto row = z.row(r);
        row.array() = (row.array() - row.maxCoeff()).exp();
        row /= row.sum();
      }
      break;
    }
    case Activation::Relu:
      z = z.cwiseMax(Scalar(0));
      break;
    case Activation::Sigmoid:
      z = (Scalar(1) / (Scalar(1) + (-z.array()).exp())).matrix();
      break;
  }
}

/// Turns `grad` (w.r.t. the activated output `y`) into the gradient w.r.t. the
/// pre-activation, in place.
template <typename Scalar>
void activation_backward(Activation a, const Matrix<Scalar>& y, Matrix<Scalar>& grad) {
  switch (a) {
    case Activation::Identity:
      break;
    case Activation::Tanh:
      grad.array() *= Scalar(1) - y.array().square();
      break;
    case Activation::Softmax: {
      const Vector<Scalar> dot = (grad.array() * y.array()).rowwise().sum();
      grad = (y.array() * (grad.array().colwise() - dot.array())).matrix();
      break;
    }
    case Activation::Relu:
      grad = (y.array() > Scalar(0)).select(grad, Scalar(0));
      break;
    case Activation::Sigmoid:
      grad.array() *= y.array() * (Scalar(1) - y.array());
      break;
  }
}

}  // namespace premsel::nn
