#pragma once

#include <cmath>
#include <cstdint>

#include "premsel/error.hpp"
#include "premsel/nn/network.hpp"

namespace premsel::nn {

enum class OptimizerKind { RmsProp, Adam };

struct RmsPropConfig {
  double learning_rate = 1e-3;
  double rho = 0.9;
  double epsilon = 1e-8;
  double decay = 1e-8;  // lr_t = lr / (1 + decay * t)
};

struct AdamConfig {
  double learning_rate = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

template <typename Scalar>
struct OptimizerState {
  OptimizerKind kind = OptimizerKind::Adam;
  RmsPropConfig rmsprop;
  AdamConfig adam;
  std::uint64_t step = 0;
  Gradients<Scalar> first;   // rmsprop: mean square; adam: first moment
  Gradients<Scalar> second;  // adam: second moment

  static OptimizerState make_rmsprop(RmsPropConfig config = {}) {
    OptimizerState s;
    s.kind = OptimizerKind::RmsProp;
    s.rmsprop = config;
    return s;
  }
  static OptimizerState make_adam(AdamConfig config = {}) {
    OptimizerState s;
    s.kind = OptimizerKind::Adam;
    s.adam = config;
    return s;
  }
};

namespace detail {

template <typename Scalar>
void check_gradient_shapes(const DenseNetwork<Scalar>& net, const Gradients<Scalar>& grads) {
  if (grads.size() != net.depth()) {
    throw Error(ErrorCode::ShapeMismatch, "gradient count does not match layer count");
  }
  for (std::size_t k = 0; k < grads.size(); ++k) {
    const auto& l = net.layer(k);
    if (grads[k].weights.rows() != l.weights.rows() || grads[k].weights.cols() != l.weights.cols() ||
        grads[k].bias.size() != l.bias.size()) {
      throw Error(ErrorCode::ShapeMismatch, "gradient shape mismatch at layer " + std::to_string(k));
    }
  }
}

template <typename Scalar>
Gradients<Scalar> zeros_like(const DenseNetwork<Scalar>& net) {
  Gradients<Scalar> z(net.depth());
  for (std::size_t k = 0; k < net.depth(); ++k) {
    z[k].weights = Matrix<Scalar>::Zero(net.layer(k).weights.rows(), net.layer(k).weights.cols());
    z[k].bias = Vector<Scalar>::Zero(net.layer(k).bias.size());
  }
  return z;
}

}  // namespace detail

/// acc <- rho acc + (1 - rho) g^2;  theta <- theta - lr_t g / (sqrt(acc) + eps).
template <typename Scalar>
void rmsprop_step(OptimizerState<Scalar>& state, DenseNetwork<Scalar>& net, const Gradients<Scalar>& grads) {
  if (state.kind != OptimizerKind::RmsProp) throw Error(ErrorCode::InvalidSpec, "optimizer is not RMSprop");
  detail::check_gradient_shapes(net, grads);
  if (state.first.size() != net.depth()) state.first = detail::zeros_like(net);

  const auto& c = state.rmsprop;
  const auto lr = static_cast<Scalar>(c.learning_rate / (1.0 + c.decay * static_cast<double>(state.step)));
  const auto rho = static_cast<Scalar>(c.rho);
  const auto eps = static_cast<Scalar>(c.epsilon);
  const auto update = [&](auto& param, auto& acc, const auto& g) {
    acc.array() = rho * acc.array() + (Scalar(1) - rho) * g.array().square();
    param.array() -= lr * g.array() / (acc.array().sqrt() + eps);
  };
  for (std::size_t k = 0; k < net.depth(); ++k) {
    auto& layer = net.mutable_layer(k);
    update(layer.weights, state.first[k].weights, grads[k].weights);
    update(layer.bias, state.first[k].bias, grads[k].bias);
  }
  ++state.step;
}

/// Adam with bias-corrected moments.
template <typename Scalar>
void adam_step(OptimizerState<Scalar>& state, DenseNetwork<Scalar>& net, const Gradients<Scalar>& grads) {
  if (state.kind != OptimizerKind::Adam) throw Error(ErrorCode::InvalidSpec, "optimizer is not Adam");
  detail::check_gradient_shapes(net, grads);
  if (state.first.size() != net.depth()) {
    state.first = detail::zeros_like(net);
    state.second = detail::zeros_like(net);
  }

  const auto& c = state.adam;
  const double t = static_cast<double>(state.step + 1);
  const auto lr = static_cast<Scalar>(c.learning_rate);
  const auto b1 = static_cast<Scalar>(c.beta1);
  const auto b2 = static_cast<Scalar>(c.beta2);
  const auto eps = static_cast<Scalar>(c.epsilon);
  const auto correction1 = static_cast<Scalar>(1.0 - std::pow(c.beta1, t));
  const auto correction2 = static_cast<Scalar>(1.0 - std::pow(c.beta2, t));
  const auto update = [&](auto& param, auto& m, auto& v, const auto& g) {
    m.array() = b1 * m.array() + (Scalar(1) - b1) * g.array();
    v.array() = b2 * v.array() + (Scalar(1) - b2) * g.array().square();
    param.array() -= lr * (m.array() / correction1) / ((v.array() / correction2).sqrt() + eps);
  };
  for (std::size_t k = 0; k < net.depth(); ++k) {
    auto& layer = net.mutable_layer(k);
    update(layer.weights, state.first[k].weights, state.second[k].weights, grads[k].weights);
    update(layer.bias, state.first[k].bias, state.second[k].bias, grads[k].bias);
  }
  ++state.step;
}

template <typename Scalar>
void optimizer_step(OptimizerState<Scalar>& state, DenseNetwork<Scalar>& net, const Gradients<Scalar>& grads) {
  if (state.kind == OptimizerKind::RmsProp) {
    rmsprop_step(state, net, grads);
  } else {
    adam_step(state, net, grads);
  }
}

}  // namespace premsel::nn
