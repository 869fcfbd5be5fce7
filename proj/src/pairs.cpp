#include <algorithm>
#include "premsel/pairs.hpp"

#include <cmath>
#include <numeric>

namespace premsel {

PairSet PairSet::select(std::span<const std::size_t> rows) const {
  PairSet out{nn::Matrix<float>(static_cast<Eigen::Index>(rows.size()), features.cols()),
              nn::Matrix<float>(static_cast<Eigen::Index>(rows.size()), 1)};
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto dst = static_cast<Eigen::Index>(i);
    const auto src = static_cast<Eigen::Index>(rows[i]);
    out.features.row(dst) = features.row(src);
    out.labels(dst, 0) = labels(src, 0);
  }
  return out;
}

nn::TensorContainer PairSet::to_container() const {
  nn::Matrix<float> packed(features.rows(), features.cols() + 1);
  packed.leftCols(features.cols()) = features;
  packed.rightCols(1) = labels;
  nn::TensorContainer c;
  c.put_matrix("pairs", packed);
  return c;
}

PairSet PairSet::from_container(const nn::TensorContainer& c) {
  const auto packed = c.get_matrix<float>("pairs");
  if (packed.cols() < 1) throw Error(ErrorCode::ShapeMismatch, "pair matrix has no label column");
  return {packed.leftCols(packed.cols() - 1), packed.rightCols(1)};
}

PairSet build_pairs(std::span<const RawExampleBlock> blocks, const EmbeddingCache& cache) {
  std::size_t total = 0;
  for (const auto& b : blocks) total += b.axiom_count();

  const auto dim = static_cast<Eigen::Index>(cache.dim());
  PairSet out{nn::Matrix<float>(static_cast<Eigen::Index>(total), 2 * dim),
              nn::Matrix<float>(static_cast<Eigen::Index>(total), 1)};
  Eigen::Index row = 0;
  const auto& vectors = cache.vectors();
  for (const auto& block : blocks) {
    const auto conjecture = static_cast<Eigen::Index>(cache.row_of(block.conjecture_text));
    const auto emit = [&](const std::string& axiom, float label) {
      out.features.row(row).head(dim) = vectors.row(conjecture);
      out.features.row(row).tail(dim) = vectors.row(static_cast<Eigen::Index>(cache.row_of(axiom)));
      out.labels(row, 0) = label;
      ++row;
    };
    for (const auto& a : block.positives) emit(a, 1.0F);
    for (const auto& a : block.negatives) emit(a, 0.0F);
  }
  return out;
}

std::pair<std::size_t, std::size_t> split_sizes(std::size_t n, double test_fraction) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
    throw Error(ErrorCode::DegenerateSplit, "test fraction must lie in (0, 1)");
  }
  if (n < 2) {
    throw Error(ErrorCode::DegenerateSplit, "split of " + std::to_string(n) + " rows leaves a side empty");
  }
  // The small slack keeps exact products such as 0.1 * 10 from rounding up.
  auto test = static_cast<std::size_t>(std::ceil(test_fraction * static_cast<double>(n) - 1e-9));
  test = std::clamp<std::size_t>(test, 1, n - 1);
  return {n - test, test};
}

std::pair<PairSet, PairSet> split(const PairSet& examples, double test_fraction, Rng& rng) {
  const auto [train_size, test_size] = split_sizes(examples.size(), test_fraction);
  std::vector<std::size_t> order(examples.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  shuffle(std::span<std::size_t>(order), rng);
  const std::span<const std::size_t> all(order);
  return {examples.select(all.first(train_size)), examples.select(all.subspan(train_size, test_size))};
}

nn::TensorContainer StandardizationStats::to_container() const {
  nn::TensorContainer c;
  c.put_vector("mean", std::vector<double>(mean.data(), mean.data() + mean.size()));
  c.put_vector("std", std::vector<double>(std.data(), std.data() + std.size()));
  std::vector<std::uint32_t> flags(constant.begin(), constant.end());
  c.put_vector("constant", std::move(flags));
  return c;
}

StandardizationStats StandardizationStats::from_container(const nn::TensorContainer& c) {
  const auto& mean = c.get<double>("mean");
  const auto& stddev = c.get<double>("std");
  const auto& flags = c.get<std::uint32_t>("constant");
  if (mean.size() != stddev.size() || mean.size() != flags.size()) {
    throw Error(ErrorCode::ShapeMismatch, "standardizer vectors differ in length");
  }
  StandardizationStats s;
  s.mean = Eigen::Map<const nn::Vector<double>>(mean.data(), static_cast<Eigen::Index>(mean.size()));
  s.std = Eigen::Map<const nn::Vector<double>>(stddev.data(), static_cast<Eigen::Index>(stddev.size()));
  s.constant.assign(flags.begin(), flags.end());
  return s;
}

StandardizationStats fit_standardizer(const nn::Matrix<float>& rows) {
  if (rows.rows() < 2) throw Error(ErrorCode::TooFewRows, "standardization needs at least 2 rows");
  const auto n = static_cast<double>(rows.rows());
  const auto cols = rows.cols();
  StandardizationStats s{nn::Vector<double>::Zero(cols), nn::Vector<double>::Zero(cols),
                         std::vector<bool>(static_cast<std::size_t>(cols), true)};
  // Fixed row-major accumulation order keeps the result independent of threading.
  for (Eigen::Index r = 0; r < rows.rows(); ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) {
      s.mean[c] += static_cast<double>(rows(r, c));
      if (rows(r, c) != rows(0, c)) s.constant[static_cast<std::size_t>(c)] = false;
    }
  }
  s.mean /= n;
  for (Eigen::Index r = 0; r < rows.rows(); ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) {
      const double d = static_cast<double>(rows(r, c)) - s.mean[c];
      s.std[c] += d * d;
    }
  }
  for (Eigen::Index c = 0; c < cols; ++c) {
    s.std[c] = s.constant[static_cast<std::size_t>(c)] ? 0.0 : std::sqrt(s.std[c] / n);
  }
  return s;
}

nn::Matrix<float> apply_standardizer(const StandardizationStats& stats, const nn::Matrix<float>& rows) {
  if (rows.cols() != stats.mean.size()) {
    throw Error(ErrorCode::ShapeMismatch, "standardizer fitted on " + std::to_string(stats.mean.size()) +
                                              " columns, rows have " + std::to_string(rows.cols()));
  }
  nn::Matrix<float> out(rows.rows(), rows.cols());
  for (Eigen::Index c = 0; c < rows.cols(); ++c) {
    const double divisor = stats.constant[static_cast<std::size_t>(c)] ? 1.0 : stats.std[c];
    for (Eigen::Index r = 0; r < rows.rows(); ++r) {
      out(r, c) = static_cast<float>((static_cast<double>(rows(r, c)) - stats.mean[c]) / divisor);
    }
  }
  return out;
}

}  // namespace premsel
