#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "premsel/error.hpp"
#include "premsel/nn/activation.hpp"
#include "premsel/nn/tensor.hpp"
#include "premsel/random.hpp"

namespace premsel::nn {

/// y = activation(x * W^T + b), followed by inverted dropout at `dropout` in train mode.
template <typename Scalar>
struct DenseLayer {
  Matrix<Scalar> weights;  // out x in
  Vector<Scalar> bias;     // out
  Activation activation = Activation::Identity;
  float dropout = 0.0F;

  Eigen::Index in() const noexcept { return weights.cols(); }
  Eigen::Index out() const noexcept { return weights.rows(); }
};

/// Weights uniform in [-L, L] with L = sqrt(6 / fan_in), fan_in = cols.
template <typename Scalar>
Matrix<Scalar> he_uniform_init(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
  const double bound = std::sqrt(6.0 / static_cast<double>(cols));
  Matrix<Scalar> w(rows, cols);
  for (Eigen::Index i = 0; i < w.size(); ++i) {
    w.data()[i] = static_cast<Scalar>((2.0 * rng.uniform() - 1.0) * bound);
  }
  return w;
}

template <typename Scalar>
DenseLayer<Scalar> make_dense_layer(Eigen::Index in, Eigen::Index out, Activation activation,
                                    float dropout, Rng& rng) {
  return DenseLayer<Scalar>{he_uniform_init<Scalar>(out, in, rng), Vector<Scalar>::Zero(out),
                            activation, dropout};
}

enum class Mode { Train, Eval };

template <typename Scalar>
struct LayerGradients {
  Matrix<Scalar> weights;
  Vector<Scalar> bias;
};

template <typename Scalar>
using Gradients = std::vector<LayerGradients<Scalar>>;

template <typename Scalar>
class DenseNetwork;

/// Intermediates recorded by a forward pass and consumed by backward().
template <typename Scalar>
struct ForwardCache {
  const void* owner = nullptr;
  std::uint64_t version = 0;
  InputBatch<Scalar> input;
  std::vector<Matrix<Scalar>> layer_inputs;  // input to layer k, k >= 1 (post-dropout)
  std::vector<Matrix<Scalar>> activations;   // activated output of layer k (pre-dropout)
  std::vector<Matrix<Scalar>> masks;         // scaled keep-masks, empty when no dropout applied

  bool valid() const noexcept { return owner != nullptr; }
};

/// Ordered stack of dense layers. `version()` changes whenever parameters may
/// have changed, so caches from before an update are rejected by backward().
template <typename Scalar>
class DenseNetwork {
 public:
  DenseNetwork() = default;

  explicit DenseNetwork(std::vector<DenseLayer<Scalar>> layers) : layers_(std::move(layers)) {
    for (std::size_t k = 0; k < layers_.size(); ++k) {
      const auto& l = layers_[k];
      if (l.bias.size() != l.out()) {
        throw Error(ErrorCode::ShapeMismatch, "layer " + std::to_string(k) + ": bias length " +
                                                  std::to_string(l.bias.size()) + " != " +
                                                  std::to_string(l.out()));
      }
      if (k > 0 && layers_[k - 1].out() != l.in()) {
        throw Error(ErrorCode::ShapeMismatch, "layer " + std::to_string(k) + " expects " +
                                                  std::to_string(l.in()) + " inputs, previous emits " +
                                                  std::to_string(layers_[k - 1].out()));
      }
      if (!(l.dropout >= 0.0F && l.dropout < 1.0F)) {
        throw Error(ErrorCode::InvalidSpec, "dropout rate must lie in [0, 1)");
      }
    }
    if (!layers_.empty() && layers_.back().dropout != 0.0F) {
      throw Error(ErrorCode::InvalidSpec, "the output layer cannot carry dropout");
    }
  }

  const std::vector<DenseLayer<Scalar>>& layers() const noexcept { return layers_; }
  const DenseLayer<Scalar>& layer(std::size_t k) const { return layers_.at(k); }

  /// Mutable parameter access; invalidates outstanding forward caches.
  DenseLayer<Scalar>& mutable_layer(std::size_t k) {
    ++version_;
    return layers_.at(k);
  }

  std::size_t depth() const noexcept { return layers_.size(); }
  Eigen::Index input_dim() const noexcept { return layers_.empty() ? 0 : layers_.front().in(); }
  Eigen::Index output_dim() const noexcept { return layers_.empty() ? 0 : layers_.back().out(); }

  std::size_t parameter_count() const noexcept {
    std::size_t total = 0;
    for (const auto& l : layers_) total += static_cast<std::size_t>(l.weights.size() + l.bias.size());
    return total;
  }

  Mode mode() const noexcept { return mode_; }
  void set_mode(Mode mode) noexcept { mode_ = mode; }
  std::uint64_t version() const noexcept { return version_; }

  template <typename To>
  DenseNetwork<To> cast() const {
    std::vector<DenseLayer<To>> out;
    out.reserve(layers_.size());
    for (const auto& l : layers_) {
      out.push_back(DenseLayer<To>{l.weights.template cast<To>(), l.bias.template cast<To>(),
                                   l.activation, l.dropout});
    }
    DenseNetwork<To> net(std::move(out));
    net.set_mode(mode_);
    return net;
  }

  bool operator==(const DenseNetwork& other) const {
    if (layers_.size() != other.layers_.size()) return false;
    for (std::size_t k = 0; k < layers_.size(); ++k) {
      const auto& a = layers_[k];
      const auto& b = other.layers_[k];
      if (a.activation != b.activation || a.dropout != b.dropout ||
          a.weights.rows() != b.weights.rows() || a.weights.cols() != b.weights.cols() ||
          a.weights != b.weights || a.bias != b.bias) {
        return false;
      }
    }
    return true;
  }

 private:
  std::vector<DenseLayer<Scalar>> layers_;
  Mode mode_ = Mode::Train;
  std::uint64_t version_ = 0;
};

namespace detail {

template <typename Scalar>
Matrix<Scalar> affine(const DenseLayer<Scalar>& layer, const InputBatch<Scalar>& x) {
  Matrix<Scalar> z;
  if (x.is_sparse()) {
    z = std::get<SparseRows<Scalar>>(x.data) * layer.weights.transpose();
  } else {
    z.noalias() = std::get<Matrix<Scalar>>(x.data) * layer.weights.transpose();
  }
  z.rowwise() += layer.bias.transpose();
  return z;
}

template <typename Scalar>
Matrix<Scalar> affine(const DenseLayer<Scalar>& layer, const Matrix<Scalar>& x) {
  Matrix<Scalar> z;
  z.noalias() = x * layer.weights.transpose();
  z.rowwise() += layer.bias.transpose();
  return z;
}

template <typename Scalar>
Matrix<Scalar> dropout_mask(Eigen::Index rows, Eigen::Index cols, float rate, Rng& rng) {
  const Scalar keep_scale = Scalar(1) / (Scalar(1) - static_cast<Scalar>(rate));
  Matrix<Scalar> mask(rows, cols);
  for (Eigen::Index i = 0; i < mask.size(); ++i) {
    mask.data()[i] = rng.uniform() >= static_cast<double>(rate) ? keep_scale : Scalar(0);
  }
  return mask;
}

template <typename Scalar>
Matrix<Scalar> forward(const DenseNetwork<Scalar>& net, const InputBatch<Scalar>& batch, Rng& rng,
                       ForwardCache<Scalar>* cache, bool train) {
  if (net.depth() == 0) throw Error(ErrorCode::ShapeMismatch, "network has no layers");
  if (batch.cols() != net.input_dim()) {
    throw Error(ErrorCode::ShapeMismatch, "batch has " + std::to_string(batch.cols()) +
                                              " columns, network expects " +
                                              std::to_string(net.input_dim()));
  }
  if (cache != nullptr) {
    *cache = ForwardCache<Scalar>{};
    cache->input = batch;
  }

  Matrix<Scalar> x;
  for (std::size_t k = 0; k < net.depth(); ++k) {
    const auto& layer = net.layer(k);
    Matrix<Scalar> y = k == 0 ? detail::affine(layer, batch) : detail::affine(layer, x);
    activate(layer.activation, y);

    Matrix<Scalar> mask;
    if (train && layer.dropout > 0.0F) mask = detail::dropout_mask<Scalar>(y.rows(), y.cols(), layer.dropout, rng);

    if (cache != nullptr) {
      if (k > 0) cache->layer_inputs.push_back(std::move(x));
      cache->activations.push_back(y);
      cache->masks.push_back(mask);
    }
    x = mask.size() > 0 ? Matrix<Scalar>(y.cwiseProduct(mask)) : std::move(y);
  }
  if (cache != nullptr) {
    cache->owner = &net;
    cache->version = net.version();
  }
  return x;
}

}  // namespace detail

/// Runs the network on `batch`. In train mode, layers with a dropout rate draw
/// their masks from `rng`; in eval mode dropout is the identity and `rng` is unused.
/// When `cache` is given, intermediates needed by backward() are stored there.
template <typename Scalar>
Matrix<Scalar> forward(const DenseNetwork<Scalar>& net, const InputBatch<Scalar>& batch, Rng& rng,
                       ForwardCache<Scalar>* cache = nullptr) {
  return detail::forward(net, batch, rng, cache, net.mode() == Mode::Train);
}

/// Eval-mode forward pass regardless of the network's mode.
template <typename Scalar>
Matrix<Scalar> predict(const DenseNetwork<Scalar>& net, const InputBatch<Scalar>& batch) {
  Rng unused;
  return detail::forward(net, batch, unused, static_cast<ForwardCache<Scalar>*>(nullptr), false);
}

/// Backpropagates `logit_grad`, the loss gradient with respect to the output
/// layer's pre-activation, through the cached pass.
/// Throws Error(StaleCache) when the cache does not belong to the current parameters.
template <typename Scalar>
Gradients<Scalar> backward(const DenseNetwork<Scalar>& net, const ForwardCache<Scalar>& cache,
                           Matrix<Scalar> logit_grad) {
  if (!cache.valid() || cache.owner != &net || cache.version != net.version() ||
      cache.activations.size() != net.depth()) {
    throw Error(ErrorCode::StaleCache, "backward() without a matching forward pass");
  }
  const auto& last = cache.activations.back();
  if (logit_grad.rows() != last.rows() || logit_grad.cols() != last.cols()) {
    throw Error(ErrorCode::ShapeMismatch, "output gradient shape does not match the forward pass");
  }

  Gradients<Scalar> grads(net.depth());
  Matrix<Scalar> delta = std::move(logit_grad);
  for (std::size_t k = net.depth(); k-- > 0;) {
    const auto& layer = net.layer(k);
    auto& g = grads[k];
    if (k == 0) {
      if (cache.input.is_sparse()) {
        g.weights = delta.transpose() * std::get<SparseRows<Scalar>>(cache.input.data);
      } else {
        g.weights.noalias() = delta.transpose() * std::get<Matrix<Scalar>>(cache.input.data);
      }
    } else {
      g.weights.noalias() = delta.transpose() * cache.layer_inputs[k - 1];
    }
    g.bias = delta.colwise().sum().transpose();

    if (k > 0) {
      Matrix<Scalar> upstream;
      upstream.noalias() = delta * layer.weights;
      const auto& mask = cache.masks[k - 1];
      if (mask.size() > 0) upstream.array() *= mask.array();
      activation_backward(net.layer(k - 1).activation, cache.activations[k - 1], upstream);
      delta = std::move(upstream);
    }
  }
  return grads;
}

}  // namespace premsel::nn
