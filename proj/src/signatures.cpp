#include "premsel/signatures.hpp"

#include <algorithm>
#include <set>

#include "premsel/error.hpp"

namespace premsel {

FunctorVocab::FunctorVocab(std::vector<std::string> symbols) : symbols_(std::move(symbols)) {
  index_.reserve(symbols_.size());
  for (std::size_t k = 0; k < symbols_.size(); ++k) {
    if (k > 0 && !(symbols_[k - 1] < symbols_[k])) {
      throw Error(ErrorCode::ConfigError, "vocabulary is not strictly sorted at '" + symbols_[k] + "'");
    }
    index_.emplace(symbols_[k], static_cast<std::uint32_t>(k));
  }
}

std::int64_t FunctorVocab::find(std::string_view symbol) const {
  auto it = index_.find(symbol);
  return it == index_.end() ? -1 : static_cast<std::int64_t>(it->second);
}

FunctorVocab build_vocab(std::span<const FunctorCounts> corpus) {
  std::set<std::string, std::less<>> all;
  for (const auto& counts : corpus) {
    for (const auto& [name, count] : counts) all.insert(name);
  }
  return FunctorVocab(std::vector<std::string>(all.begin(), all.end()));
}

std::uint32_t SparseSignature::count_of(std::uint32_t index) const noexcept {
  auto it = std::lower_bound(entries.begin(), entries.end(), index,
                             [](const Entry& e, std::uint32_t i) { return e.index < i; });
  return it != entries.end() && it->index == index ? it->count : 0;
}

std::uint64_t SparseSignature::total() const noexcept {
  std::uint64_t sum = 0;
  for (const auto& e : entries) sum += e.count;
  return sum;
}

Eigen::VectorXd SparseSignature::to_dense(std::size_t n) const {
  Eigen::VectorXd dense = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
  for (const auto& e : entries) dense[e.index] = e.count;
  return dense;
}

SparseSignature signature_of(const FunctorCounts& counts, const FunctorVocab& vocab) {
  SparseSignature sig;
  sig.entries.reserve(counts.size());
  for (const auto& [name, count] : counts) {
    const auto index = vocab.find(name);
    if (index < 0) throw Error(ErrorCode::UnknownFunctor, "'" + name + "' is not in the vocabulary");
    sig.entries.push_back({static_cast<std::uint32_t>(index), count});
  }
  std::sort(sig.entries.begin(), sig.entries.end(),
            [](const auto& a, const auto& b) { return a.index < b.index; });
  return sig;
}

ContextDistribution context_distribution(std::uint32_t index,
                                         std::span<const SparseSignature> corpus,
                                         std::size_t vocab_size) {
  std::vector<std::int64_t> sum(vocab_size, 0);
  std::int64_t total = 0;
  bool found = false;
  for (const auto& q : corpus) {
    if (q.count_of(index) == 0) continue;
    found = true;
    for (const auto& e : q.entries) {
      sum.at(e.index) += e.count;
      total += e.count;
    }
  }
  if (!found) throw Error(ErrorCode::NoContext, "functor index " + std::to_string(index));

  ContextDistribution phi{Eigen::VectorXd::Zero(static_cast<Eigen::Index>(vocab_size))};
  const auto denom = static_cast<double>(total);
  for (std::size_t j = 0; j < vocab_size; ++j) {
    if (sum[j] != 0) phi.probs[static_cast<Eigen::Index>(j)] = static_cast<double>(sum[j]) / denom;
  }
  return phi;
}

ContextDistribution ContextMatrix::row(std::size_t index) const {
  ContextDistribution phi{Eigen::VectorXd::Zero(rows_.cols())};
  for (Storage::InnerIterator it(rows_, static_cast<Eigen::Index>(index)); it; ++it) {
    phi.probs[it.col()] = it.value();
  }
  return phi;
}

ContextMatrix context_matrix(std::span<const SparseSignature> corpus, const FunctorVocab& vocab) {
  const std::size_t n = vocab.size();

  // Inverted index: signatures containing each functor.
  std::vector<std::vector<std::uint32_t>> containing(n);
  for (std::size_t q = 0; q < corpus.size(); ++q) {
    for (const auto& e : corpus[q].entries) {
      if (e.index >= n) {
        throw Error(ErrorCode::UnknownFunctor, "signature index " + std::to_string(e.index) +
                                                   " outside vocabulary of " + std::to_string(n));
      }
      containing[e.index].push_back(static_cast<std::uint32_t>(q));
    }
  }

  std::vector<Eigen::Triplet<double>> triplets;
  std::vector<std::int64_t> sum(n, 0);
  std::vector<std::uint32_t> touched;
  for (std::size_t i = 0; i < n; ++i) {
    if (containing[i].empty()) throw Error(ErrorCode::NoContext, "functor index " + std::to_string(i));
    std::int64_t total = 0;
    for (auto q : containing[i]) {
      for (const auto& e : corpus[q].entries) {
        if (sum[e.index] == 0) touched.push_back(e.index);
        sum[e.index] += e.count;
        total += e.count;
      }
    }
    std::sort(touched.begin(), touched.end());
    const auto denom = static_cast<double>(total);
    for (auto j : touched) {
      triplets.emplace_back(static_cast<int>(i), static_cast<int>(j), static_cast<double>(sum[j]) / denom);
      sum[j] = 0;
    }
    touched.clear();
  }

  ContextMatrix::Storage rows(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  rows.setFromTriplets(triplets.begin(), triplets.end());
  rows.makeCompressed();
  return ContextMatrix(std::move(rows));
}

}  // namespace premsel
