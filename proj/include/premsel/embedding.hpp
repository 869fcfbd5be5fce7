#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "premsel/error.hpp"
#include "premsel/nn/network.hpp"
#include "premsel/nn/train.hpp"
#include "premsel/random.hpp"
#include "premsel/signatures.hpp"

namespace premsel {

/// Two-layer network [n -> n' tanh, n' -> n softmax]. The first layer (W1, b1)
/// is the embedding; the second only exists to train it.
template <typename Scalar>
struct BasicContextModel {
  nn::DenseNetwork<Scalar> net;

  std::size_t vocab_size() const noexcept { return static_cast<std::size_t>(net.input_dim()); }
  std::size_t embedding_dim() const noexcept { return static_cast<std::size_t>(net.layer(0).out()); }

  template <typename To>
  BasicContextModel<To> cast() const {
    return {net.template cast<To>()};
  }
};

using ContextModel = BasicContextModel<float>;

template <typename Scalar>
using EmbeddedSignature = nn::Vector<Scalar>;

/// Fresh [n -> n' tanh, n' -> n softmax] model; throws Error(InvalidSpec) unless 1 <= n' < n.
template <typename Scalar>
BasicContextModel<Scalar> make_context_model(std::size_t n, std::size_t n_prime, Rng& rng) {
  if (n_prime == 0 || n_prime >= n) {
    throw Error(ErrorCode::InvalidSpec, "embedding dimension must satisfy 1 <= n' < n (n' = " +
                                            std::to_string(n_prime) + ", n = " + std::to_string(n) + ")");
  }
  const auto in = static_cast<Eigen::Index>(n);
  const auto hidden = static_cast<Eigen::Index>(n_prime);
  std::vector<nn::DenseLayer<Scalar>> layers;
  layers.push_back(nn::make_dense_layer<Scalar>(in, hidden, nn::Activation::Tanh, 0.0F, rng));
  layers.push_back(nn::make_dense_layer<Scalar>(hidden, in, nn::Activation::Softmax, 0.0F, rng));
  return {nn::DenseNetwork<Scalar>(std::move(layers))};
}

/// b1 + sum_k count_k * W1[:, k]. Throws Error(IndexOutOfRange).
template <typename Scalar>
nn::Vector<Scalar> embedding_preactivation(const BasicContextModel<Scalar>& model, const SparseSignature& sig) {
  const auto& first = model.net.layer(0);
  nn::Vector<Scalar> pre = first.bias;
  for (const auto& e : sig.entries) {
    if (e.index >= static_cast<std::uint32_t>(first.in())) {
      throw Error(ErrorCode::IndexOutOfRange, "functor index " + std::to_string(e.index) +
                                                  " outside vocabulary of " + std::to_string(first.in()));
    }
    const auto count = static_cast<Scalar>(e.count);
    for (Eigen::Index r = 0; r < pre.size(); ++r) pre[r] += count * first.weights(r, e.index);
  }
  return pre;
}

/// tanh(W1 S(P) + b1).
template <typename Scalar>
EmbeddedSignature<Scalar> embed_signature(const BasicContextModel<Scalar>& model, const SparseSignature& sig) {
  nn::Matrix<Scalar> row = embedding_preactivation(model, sig).transpose();
  nn::activate(model.net.layer(0).activation, row);
  return row.transpose();
}

/// sum_k count_k * tanh(W1 e_k + b1). Experimental alternative; not bounded by (-1, 1).
template <typename Scalar>
EmbeddedSignature<Scalar> embed_signature_summed(const BasicContextModel<Scalar>& model,
                                                 const SparseSignature& sig) {
  EmbeddedSignature<Scalar> sum = EmbeddedSignature<Scalar>::Zero(model.net.layer(0).out());
  for (const auto& e : sig.entries) {
    SparseSignature unit{{{e.index, 1}}};
    sum += static_cast<Scalar>(e.count) * embed_signature(model, unit);
  }
  return sum;
}

enum class EmbeddingVariant { Composed, Summed };

/// One embedding per row.
nn::Matrix<float> embed_all(const ContextModel& model, std::span<const SparseSignature> signatures,
                            EmbeddingVariant variant = EmbeddingVariant::Composed);

struct EmbeddingOptions {
  std::size_t n_prime = 256;
  std::size_t epochs = 150;
  std::size_t batch_size = 4096;
  bool deterministic = true;
};

struct TrainedModel {
  ContextModel model;
  nn::TrainingHistory history;
};

/// Fits phi(f_k) from one-hot inputs e_k with categorical cross-entropy and
/// RMSprop, reshuffling every epoch; no validation split.
TrainedModel train_context_model(const ContextMatrix& contexts, const EmbeddingOptions& options, Rng& rng,
                                 const nn::EpochCallback& on_epoch = {});

/// Autoencoder alternative: inputs S(P), targets S(P) / |S(P)|_1.
/// Throws Error(ZeroSignature) when a signature is empty.
TrainedModel train_autoencoder(std::span<const SparseSignature> signatures, std::size_t vocab_size,
                               const EmbeddingOptions& options, Rng& rng,
                               const nn::EpochCallback& on_epoch = {});

/// Precomputed embeddings keyed by the FNV-1a hash of the formula string.
/// On disk: a PSTC container with tensor "embeddings" (rows x n') plus a
/// manifest listing one 16-digit hex hash per line, in row order.
class EmbeddingCache {
 public:
  EmbeddingCache() = default;
  /// Throws Error(ShapeMismatch) on row/hash count mismatch or a hash collision.
  EmbeddingCache(nn::Matrix<float> vectors, std::vector<std::uint64_t> hashes);

  static EmbeddingCache from_formulae(nn::Matrix<float> vectors, std::span<const std::string> formulae);

  std::size_t size() const noexcept { return hashes_.size(); }
  std::size_t dim() const noexcept { return static_cast<std::size_t>(vectors_.cols()); }
  const nn::Matrix<float>& vectors() const noexcept { return vectors_; }
  const std::vector<std::uint64_t>& hashes() const noexcept { return hashes_; }

  /// Throws Error(MissingEmbedding).
  std::size_t row_of(std::string_view formula) const;

  void save(const std::filesystem::path& tensor_file, const std::filesystem::path& manifest_file) const;
  static EmbeddingCache load(const std::filesystem::path& tensor_file, const std::filesystem::path& manifest_file);

 private:
  nn::Matrix<float> vectors_;
  std::vector<std::uint64_t> hashes_;
  std::unordered_map<std::uint64_t, std::size_t> rows_;
};

}  // namespace premsel
