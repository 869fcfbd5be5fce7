#pragma once

#include <chrono>
#include <cstdint>
#include <functional>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "premsel/error.hpp"
#include "premsel/nn/loss.hpp"
#include "premsel/nn/network.hpp"
#include "premsel/nn/optimizer.hpp"
#include "premsel/random.hpp"

namespace premsel::nn {

enum class TaskKind { Binary, Categorical };

constexpr TaskKind task_for(LossKind loss) noexcept {
  return loss == LossKind::BinaryCrossentropy ? TaskKind::Binary : TaskKind::Categorical;
}

/// Number of correct rows. Binary: (p >= 0.5) == (y >= 0.5). Categorical:
/// argmax(pred) == argmax(target), ties resolved to the lowest index.
template <typename Scalar>
std::size_t count_correct(const Matrix<Scalar>& pred, const Matrix<Scalar>& target, TaskKind task) {
  if (pred.rows() != target.rows() || pred.cols() != target.cols()) {
    throw Error(ErrorCode::ShapeMismatch, "accuracy: prediction and target shapes differ");
  }
  const auto argmax = [](const auto& row) {
    Eigen::Index best = 0;
    for (Eigen::Index c = 1; c < row.size(); ++c) {
      if (row(c) > row(best)) best = c;
    }
    return best;
  };
  std::size_t correct = 0;
  for (Eigen::Index r = 0; r < pred.rows(); ++r) {
    if (task == TaskKind::Binary) {
      if (pred.cols() != 1) throw Error(ErrorCode::ShapeMismatch, "binary accuracy expects one column");
      correct += (pred(r, 0) >= Scalar(0.5)) == (target(r, 0) >= Scalar(0.5));
    } else {
      correct += argmax(pred.row(r)) == argmax(target.row(r));
    }
  }
  return correct;
}

template <typename Scalar>
double accuracy(const Matrix<Scalar>& pred, const Matrix<Scalar>& target, TaskKind task) {
  if (pred.rows() == 0) return 0.0;
  return static_cast<double>(count_correct(pred, target, task)) / static_cast<double>(pred.rows());
}

template <typename Scalar>
struct Batch {
  InputBatch<Scalar> input;
  Matrix<Scalar> target;
};

/// Dense features with dense targets; a non-owning view.
template <typename Scalar>
class DenseDataset {
 public:
  DenseDataset(const Matrix<Scalar>& features, const Matrix<Scalar>& targets)
      : features_(&features), targets_(&targets) {
    if (features.rows() != targets.rows()) {
      throw Error(ErrorCode::ShapeMismatch, "features and targets have different row counts");
    }
  }

  std::size_t rows() const noexcept { return static_cast<std::size_t>(features_->rows()); }

  Batch<Scalar> batch(std::span<const std::size_t> indices) const {
    const auto n = static_cast<Eigen::Index>(indices.size());
    Matrix<Scalar> x(n, features_->cols());
    Matrix<Scalar> y(n, targets_->cols());
    for (Eigen::Index r = 0; r < n; ++r) {
      const auto src = static_cast<Eigen::Index>(indices[static_cast<std::size_t>(r)]);
      x.row(r) = features_->row(src);
      y.row(r) = targets_->row(src);
    }
    return {InputBatch<Scalar>(std::move(x)), std::move(y)};
  }

 private:
  const Matrix<Scalar>* features_;
  const Matrix<Scalar>* targets_;
};

/// Sparse inputs with sparse targets that are densified per batch; a non-owning view.
template <typename Scalar>
class SparseDataset {
 public:
  SparseDataset(const SparseRows<Scalar>& inputs, const SparseRows<Scalar>& targets)
      : inputs_(&inputs), targets_(&targets) {
    if (inputs.rows() != targets.rows()) {
      throw Error(ErrorCode::ShapeMismatch, "inputs and targets have different row counts");
    }
  }

  std::size_t rows() const noexcept { return static_cast<std::size_t>(inputs_->rows()); }

  Batch<Scalar> batch(std::span<const std::size_t> indices) const {
    const auto n = static_cast<Eigen::Index>(indices.size());
    SparseRows<Scalar> x(n, inputs_->cols());
    std::vector<Eigen::Triplet<Scalar>> entries;
    Matrix<Scalar> y = Matrix<Scalar>::Zero(n, targets_->cols());
    for (Eigen::Index r = 0; r < n; ++r) {
      const auto src = static_cast<Eigen::Index>(indices[static_cast<std::size_t>(r)]);
      for (typename SparseRows<Scalar>::InnerIterator it(*inputs_, src); it; ++it) {
        entries.emplace_back(r, it.col(), it.value());
      }
      for (typename SparseRows<Scalar>::InnerIterator it(*targets_, src); it; ++it) {
        y(r, it.col()) = it.value();
      }
    }
    x.setFromTriplets(entries.begin(), entries.end());
    return {InputBatch<Scalar>(std::move(x)), std::move(y)};
  }

 private:
  const SparseRows<Scalar>* inputs_;
  const SparseRows<Scalar>* targets_;
};

struct EpochRecord {
  std::size_t epoch = 0;  // 1-based
  double loss = 0.0;
  double accuracy = 0.0;
  std::int64_t wall_ms = 0;
  std::optional<double> val_loss;
  std::optional<double> val_accuracy;
};

using TrainingHistory = std::vector<EpochRecord>;

struct TrainOptions {
  std::size_t epochs = 1;
  std::size_t batch_size = 32;
  /// When set, wall_ms is recorded as 0 so histories are byte-reproducible.
  bool deterministic = true;
};

/// Called after every epoch; may fill the validation fields of the record.
using EpochCallback = std::function<void(EpochRecord&)>;

/// Mini-batch training: reshuffle every epoch, consecutive batches (the last
/// may be short), forward / backward / optimizer step. Loss and accuracy of an
/// epoch are means over its training batches, weighted by batch size.
template <typename Scalar, typename Dataset>
TrainingHistory train(DenseNetwork<Scalar>& net, const Dataset& data, LossKind loss_kind,
                      OptimizerState<Scalar>& optimizer, const TrainOptions& options, Rng& rng,
                      const EpochCallback& on_epoch = {}) {
  TrainingHistory history;
  if (options.epochs == 0) return history;
  if (data.rows() == 0) throw Error(ErrorCode::EmptyInput, "training set is empty");
  if (options.batch_size == 0) throw Error(ErrorCode::InvalidSpec, "batch size must be positive");

  const Mode previous_mode = net.mode();
  net.set_mode(Mode::Train);
  const TaskKind task = task_for(loss_kind);

  std::vector<std::size_t> order(data.rows());
  ForwardCache<Scalar> cache;
  for (std::size_t epoch = 1; epoch <= options.epochs; ++epoch) {
    const auto started = std::chrono::steady_clock::now();
    std::iota(order.begin(), order.end(), std::size_t{0});
    shuffle(std::span<std::size_t>(order), rng);

    double loss_sum = 0.0;
    std::size_t correct = 0;
    for (std::size_t begin = 0; begin < order.size(); begin += options.batch_size) {
      const auto count = std::min(options.batch_size, order.size() - begin);
      const auto batch = data.batch(std::span<const std::size_t>(order).subspan(begin, count));
      const Matrix<Scalar> out = forward(net, batch.input, rng, &cache);
      auto loss = compute_loss(loss_kind, out, batch.target);
      loss_sum += loss.loss * static_cast<double>(count);
      correct += count_correct(out, batch.target, task);
      const auto grads = backward(net, cache, std::move(loss.logit_grad));
      optimizer_step(optimizer, net, grads);
    }

    EpochRecord record;
    record.epoch = epoch;
    record.loss = loss_sum / static_cast<double>(order.size());
    record.accuracy = static_cast<double>(correct) / static_cast<double>(order.size());
    if (!options.deterministic) {
      record.wall_ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                           std::chrono::steady_clock::now() - started)
                           .count();
    }
    if (on_epoch) {
      net.set_mode(Mode::Eval);
      on_epoch(record);
      net.set_mode(Mode::Train);
    }
    history.push_back(record);
  }
  net.set_mode(previous_mode);
  return history;
}

/// Eval-mode loss and accuracy over a dataset, processed in chunks.
template <typename Scalar, typename Dataset>
std::pair<double, double> evaluate_dataset(const DenseNetwork<Scalar>& net, const Dataset& data,
                                           LossKind loss_kind, std::size_t chunk = 4096) {
  double loss_sum = 0.0;
  std::size_t correct = 0;
  std::vector<std::size_t> idx;
  for (std::size_t begin = 0; begin < data.rows(); begin += chunk) {
    const auto count = std::min(chunk, data.rows() - begin);
    idx.resize(count);
    std::iota(idx.begin(), idx.end(), begin);
    const auto batch = data.batch(idx);
    const Matrix<Scalar> out = predict(net, batch.input);
    loss_sum += compute_loss(loss_kind, out, batch.target).loss * static_cast<double>(count);
    correct += count_correct(out, batch.target, task_for(loss_kind));
  }
  const auto n = static_cast<double>(std::max<std::size_t>(data.rows(), 1));
  return {loss_sum / n, static_cast<double>(correct) / n};
}

std::string to_json_line(const EpochRecord& record);

}  // namespace premsel::nn
