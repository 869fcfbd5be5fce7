#pragma once

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "premsel/embedding.hpp"
#include "premsel/nn/container.hpp"
#include "premsel/nn/tensor.hpp"
#include "premsel/random.hpp"
#include "premsel/tptp.hpp"

namespace premsel {

/// (conjecture, axiom) examples: features are [conjecture embedding | axiom
/// embedding], labels are 1 for useful premises and 0 otherwise.
struct PairSet {
  nn::Matrix<float> features;
  nn::Matrix<float> labels;  // rows x 1

  std::size_t size() const noexcept { return static_cast<std::size_t>(features.rows()); }
  PairSet select(std::span<const std::size_t> rows) const;

  /// Persisted as one rows x (features + 1) tensor "pairs", label last.
  nn::TensorContainer to_container() const;
  static PairSet from_container(const nn::TensorContainer& c);
};

/// Block order; within a block positives first, then negatives.
/// Throws Error(MissingEmbedding).
PairSet build_pairs(std::span<const RawExampleBlock> blocks, const EmbeddingCache& cache);

/// Test side gets ceil(f * N) rows, clamped to [1, N - 1], train the remainder,
/// drawn by a seeded permutation. Throws Error(DegenerateSplit) when N < 2 or f
/// lies outside (0, 1).
std::pair<std::size_t, std::size_t> split_sizes(std::size_t n, double test_fraction);
std::pair<PairSet, PairSet> split(const PairSet& examples, double test_fraction, Rng& rng);

struct StandardizationStats {
  nn::Vector<double> mean;
  nn::Vector<double> std;        // population standard deviation
  std::vector<bool> constant;    // column had a single value; divides by 1

  nn::TensorContainer to_container() const;
  static StandardizationStats from_container(const nn::TensorContainer& c);
};

/// Per-column mean and population std. Throws Error(TooFewRows) below 2 rows.
StandardizationStats fit_standardizer(const nn::Matrix<float>& rows);

/// (x - mean) / std per column, constant columns divided by 1.
/// Throws Error(ShapeMismatch) on a column-count mismatch.
nn::Matrix<float> apply_standardizer(const StandardizationStats& stats, const nn::Matrix<float>& rows);

}  // namespace premsel
