#pragma once

#include <algorithm>
#include <cmath>

#include "premsel/nn/loss.hpp"
#include "premsel/nn/network.hpp"

namespace premsel::nn {

/// Compares backward() against central differences (L(t+h) - L(t-h)) / 2h for
/// every weight and bias, in eval mode (no dropout). Returns the largest
/// |g_analytic - g_fd| / max(|g_analytic|, |g_fd|, floor). Central differences
/// carry an absolute error of order h^2, so tiny gradients need a larger floor.
inline double gradient_check(DenseNetwork<double> net, LossKind loss_kind, const InputBatch<double>& batch,
                             const Matrix<double>& target, double h = 1e-4, double floor = 1e-12) {
  net.set_mode(Mode::Eval);
  Rng unused;
  ForwardCache<double> cache;
  const Matrix<double> out = forward(net, batch, unused, &cache);
  const auto analytic = backward(net, cache, compute_loss(loss_kind, out, target).logit_grad);

  const auto loss_at = [&] { return compute_loss(loss_kind, predict(net, batch), target).loss; };
  double worst = 0.0;
  const auto compare = [&](double& param, double g_analytic) {
    const double saved = param;
    param = saved + h;
    const double plus = loss_at();
    param = saved - h;
    const double minus = loss_at();
    param = saved;
    const double g_fd = (plus - minus) / (2.0 * h);
    const double denom = std::max({std::abs(g_analytic), std::abs(g_fd), floor});
    worst = std::max(worst, std::abs(g_analytic - g_fd) / denom);
  };

  for (std::size_t k = 0; k < net.depth(); ++k) {
    auto& layer = net.mutable_layer(k);
    for (Eigen::Index i = 0; i < layer.weights.size(); ++i) {
      compare(layer.weights.data()[i], analytic[k].weights.data()[i]);
    }
    for (Eigen::Index i = 0; i < layer.bias.size(); ++i) {
      compare(layer.bias.data()[i], analytic[k].bias.data()[i]);
    }
  }
  return worst;
}

}  // namespace premsel::nn
