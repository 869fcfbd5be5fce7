#include "premsel/embedding.hpp"

#include <fstream>

#include "premsel/hash.hpp"
#include "premsel/nn/bytes.hpp"
#include "premsel/nn/container.hpp"
#include "premsel/nn/optimizer.hpp"

namespace premsel {

namespace {

nn::SparseRows<float> identity_rows(std::size_t n) {
  nn::SparseRows<float> eye(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  eye.setIdentity();
  return eye;
}

TrainedModel fit(const nn::SparseRows<float>& inputs, const nn::SparseRows<float>& targets,
                 const EmbeddingOptions& options, Rng& rng, const nn::EpochCallback& on_epoch) {
  Rng init_rng = rng.split();
  TrainedModel out{make_context_model<float>(static_cast<std::size_t>(inputs.cols()), options.n_prime, init_rng), {}};
  auto optimizer = nn::OptimizerState<float>::make_rmsprop();
  const nn::SparseDataset<float> data(inputs, targets);
  out.history = nn::train(out.model.net, data, nn::LossKind::CategoricalCrossentropy, optimizer,
                          nn::TrainOptions{options.epochs, options.batch_size, options.deterministic}, rng,
                          on_epoch);
  out.model.net.set_mode(nn::Mode::Eval);
  return out;
}

}  // namespace

nn::Matrix<float> embed_all(const ContextModel& model, std::span<const SparseSignature> signatures,
                            EmbeddingVariant variant) {
  nn::Matrix<float> out(static_cast<Eigen::Index>(signatures.size()),
                        static_cast<Eigen::Index>(model.embedding_dim()));
  for (std::size_t i = 0; i < signatures.size(); ++i) {
    out.row(static_cast<Eigen::Index>(i)) = variant == EmbeddingVariant::Composed
                                                ? embed_signature(model, signatures[i]).transpose()
                                                : embed_signature_summed(model, signatures[i]).transpose();
  }
  return out;
}

TrainedModel train_context_model(const ContextMatrix& contexts, const EmbeddingOptions& options, Rng& rng,
                                 const nn::EpochCallback& on_epoch) {
  const nn::SparseRows<float> targets = contexts.storage().cast<float>();
  return fit(identity_rows(contexts.size()), targets, options, rng, on_epoch);
}

TrainedModel train_autoencoder(std::span<const SparseSignature> signatures, std::size_t vocab_size,
                               const EmbeddingOptions& options, Rng& rng, const nn::EpochCallback& on_epoch) {
  if (signatures.empty()) throw Error(ErrorCode::EmptyInput, "no signatures to encode");
  std::vector<Eigen::Triplet<float>> counts;
  std::vector<Eigen::Triplet<float>> normalized;
  for (std::size_t q = 0; q < signatures.size(); ++q) {
    const auto& sig = signatures[q];
    if (sig.empty()) throw Error(ErrorCode::ZeroSignature, "signature " + std::to_string(q) + " has no functors");
    const auto total = static_cast<double>(sig.total());
    for (const auto& e : sig.entries) {
      if (e.index >= vocab_size) throw Error(ErrorCode::IndexOutOfRange, "functor index " + std::to_string(e.index));
      const auto row = static_cast<int>(q);
      const auto col = static_cast<int>(e.index);
      counts.emplace_back(row, col, static_cast<float>(e.count));
      normalized.emplace_back(row, col, static_cast<float>(static_cast<double>(e.count) / total));
    }
  }
  const auto rows = static_cast<Eigen::Index>(signatures.size());
  const auto cols = static_cast<Eigen::Index>(vocab_size);
  nn::SparseRows<float> inputs(rows, cols);
  nn::SparseRows<float> targets(rows, cols);
  inputs.setFromTriplets(counts.begin(), counts.end());
  targets.setFromTriplets(normalized.begin(), normalized.end());
  return fit(inputs, targets, options, rng, on_epoch);
}


EmbeddingCache::EmbeddingCache(nn::Matrix<float> vectors, std::vector<std::uint64_t> hashes)
    : vectors_(std::move(vectors)), hashes_(std::move(hashes)) {
  if (static_cast<std::size_t>(vectors_.rows()) != hashes_.size()) {
    throw Error(ErrorCode::ShapeMismatch, "embedding rows and manifest entries differ");
  }
  rows_.reserve(hashes_.size());
  for (std::size_t r = 0; r < hashes_.size(); ++r) {
    if (!rows_.emplace(hashes_[r], r).second) {
      throw Error(ErrorCode::ShapeMismatch, "duplicate formula hash " + to_hex(hashes_[r]));
    }
  }
}

EmbeddingCache EmbeddingCache::from_formulae(nn::Matrix<float> vectors, std::span<const std::string> formulae) {
  std::vector<std::uint64_t> hashes;
  hashes.reserve(formulae.size());
  for (const auto& f : formulae) hashes.push_back(fnv1a(f));
  return EmbeddingCache(std::move(vectors), std::move(hashes));
}

std::size_t EmbeddingCache::row_of(std::string_view formula) const {
  auto it = rows_.find(fnv1a(formula));
  if (it == rows_.end()) {
    throw Error(ErrorCode::MissingEmbedding, "no cached embedding for '" +
                                                 std::string(formula.substr(0, 60)) + "'");
  }
  return it->second;
}

void EmbeddingCache::save(const std::filesystem::path& tensor_file,
                          const std::filesystem::path& manifest_file) const {
  nn::TensorContainer c;
  c.put_matrix("embeddings", vectors_);
  c.save(tensor_file);
  std::string manifest;
  for (auto h : hashes_) manifest += to_hex(h) + "\n";
  nn::write_file(manifest_file, std::as_bytes(std::span(manifest.data(), manifest.size())));
}

EmbeddingCache EmbeddingCache::load(const std::filesystem::path& tensor_file,
                                    const std::filesystem::path& manifest_file) {
  auto vectors = nn::TensorContainer::load(tensor_file).get_matrix<float>("embeddings");
  std::ifstream in(manifest_file);
  if (!in) throw Error(ErrorCode::IoFailure, "cannot read " + manifest_file.string());
  std::vector<std::uint64_t> hashes;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty()) hashes.push_back(parse_hex(line));
  }
  return EmbeddingCache(std::move(vectors), std::move(hashes));
}

}  // namespace premsel
