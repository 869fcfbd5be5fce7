#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include "premsel/tptp.hpp"

namespace premsel {

/// Bijection between functor symbols and 0-based indices, in byte order.
class FunctorVocab {
 public:
  FunctorVocab() = default;
  /// `symbols` must be strictly ascending; throws Error(ConfigError) otherwise.
  explicit FunctorVocab(std::vector<std::string> symbols);

  std::size_t size() const noexcept { return symbols_.size(); }
  const std::vector<std::string>& symbols() const noexcept { return symbols_; }
  const std::string& symbol(std::size_t index) const { return symbols_.at(index); }

  /// -1 when absent.
  std::int64_t find(std::string_view symbol) const;

 private:
  std::vector<std::string> symbols_;
  std::unordered_map<std::string_view, std::uint32_t> index_;
};

FunctorVocab build_vocab(std::span<const FunctorCounts> corpus);

/// Sparse count vector over a vocabulary, entries sorted by index.
struct SparseSignature {
  struct Entry {
    std::uint32_t index;
    std::uint32_t count;
    bool operator==(const Entry&) const = default;
  };
  std::vector<Entry> entries;

  bool empty() const noexcept { return entries.empty(); }
  std::uint32_t count_of(std::uint32_t index) const noexcept;
  std::uint64_t total() const noexcept;
  Eigen::VectorXd to_dense(std::size_t n) const;
  bool operator==(const SparseSignature&) const = default;
};

/// Throws Error(UnknownFunctor) when a key is missing from the vocabulary.
SparseSignature signature_of(const FunctorCounts& counts, const FunctorVocab& vocab);

/// Frequency distribution of functors co-occurring with one functor.
struct ContextDistribution {
  Eigen::VectorXd probs;
};

/// phi(f_i): normalized sum of every signature containing index i.
/// Throws Error(NoContext) when index i occurs nowhere in the corpus.
ContextDistribution context_distribution(std::uint32_t index,
                                         std::span<const SparseSignature> corpus,
                                         std::size_t vocab_size);

/// All context distributions, one row per vocabulary index. Rows are kept
/// sparse (CSR); the stored doubles are exactly those of context_distribution.
class ContextMatrix {
 public:
  using Storage = Eigen::SparseMatrix<double, Eigen::RowMajor>;

  ContextMatrix() = default;
  explicit ContextMatrix(Storage rows) : rows_(std::move(rows)) {}

  std::size_t size() const noexcept { return static_cast<std::size_t>(rows_.rows()); }
  const Storage& storage() const noexcept { return rows_; }
  ContextDistribution row(std::size_t index) const;

 private:
  Storage rows_;
};

ContextMatrix context_matrix(std::span<const SparseSignature> corpus, const FunctorVocab& vocab);

}  // namespace premsel
