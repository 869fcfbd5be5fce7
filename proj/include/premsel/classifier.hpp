#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "premsel/nn/network.hpp"
#include "premsel/nn/train.hpp"
#include "premsel/pairs.hpp"
#include "premsel/random.hpp"

namespace premsel {

inline constexpr std::array<std::size_t, 5> kHiddenSizes = {64, 128, 256, 512, 1024};

/// Two ReLU hidden layers (h2 <= h1, both from kHiddenSizes), dropout after each,
/// one sigmoid output.
struct ClassifierSpec {
  std::size_t h1 = 64;
  std::size_t h2 = 64;
  float dropout = 0.5F;
  std::size_t input_dim = 512;

  std::string name() const { return std::to_string(h1) + "x" + std::to_string(h2); }
  bool operator==(const ClassifierSpec&) const = default;
};

/// Parses "H1xH2". Throws Error(InvalidSpec).
ClassifierSpec parse_spec(std::string_view text, std::size_t input_dim = 512, float dropout = 0.5F);

/// Throws Error(InvalidSpec).
void validate(const ClassifierSpec& spec);

/// All 15 valid (h1, h2) cells, h1 ascending then h2 ascending.
std::vector<ClassifierSpec> grid_specs(std::size_t input_dim = 512, float dropout = 0.5F);

/// 64x64, 256x256, 512x128, 1024x1024.
std::vector<ClassifierSpec> default_final_specs(std::size_t input_dim = 512, float dropout = 0.5F);

/// in*h1 + h1 + h1*h2 + h2 + h2 + 1.
std::size_t param_count(const ClassifierSpec& spec);

/// Unvalidated architecture builder, also used at reduced sizes.
template <typename Scalar>
nn::DenseNetwork<Scalar> make_classifier_network(std::size_t input_dim, std::size_t h1, std::size_t h2,
                                                 float dropout, Rng& rng) {
  using nn::Activation;
  const auto in = static_cast<Eigen::Index>(input_dim);
  const auto a = static_cast<Eigen::Index>(h1);
  const auto b = static_cast<Eigen::Index>(h2);
  std::vector<nn::DenseLayer<Scalar>> layers;
  layers.push_back(nn::make_dense_layer<Scalar>(in, a, Activation::Relu, dropout, rng));
  layers.push_back(nn::make_dense_layer<Scalar>(a, b, Activation::Relu, dropout, rng));
  layers.push_back(nn::make_dense_layer<Scalar>(b, 1, Activation::Sigmoid, 0.0F, rng));
  return nn::DenseNetwork<Scalar>(std::move(layers));
}

nn::DenseNetwork<float> build_classifier(const ClassifierSpec& spec, Rng& rng);

enum class Protocol { Dev, Final };

std::string_view to_string(Protocol p) noexcept;
/// "dev" or "final"; throws Error(ConfigError).
Protocol parse_protocol(std::string_view text);

struct ClassifierTrainOptions {
  Protocol protocol = Protocol::Final;
  std::optional<std::size_t> epochs;  // default 1500 (dev) / 2500 (final)
  std::size_t batch_size = 4096;
  double learning_rate = 1e-4;
  double validation_fraction = 0.1;   // dev protocol only
  bool deterministic = true;

  std::size_t resolved_epochs() const noexcept {
    return epochs.value_or(protocol == Protocol::Dev ? 1500 : 2500);
  }
};

struct TrainedClassifier {
  nn::DenseNetwork<float> net;
  nn::TrainingHistory history;
};

/// Adam + binary cross-entropy on standardized rows. The dev protocol holds
/// out a validation slice and records its loss/accuracy every epoch.
TrainedClassifier train_classifier(const ClassifierSpec& spec, const PairSet& train,
                                   const ClassifierTrainOptions& options, Rng& rng,
                                   const nn::EpochCallback& on_epoch = {});

struct EvalReport {
  double loss = 0.0;
  double accuracy = 0.0;
  double fn_rate_pos = 0.0;  // FN / (FN + TP)
  double fn_rate_all = 0.0;  // FN / N
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t tn = 0;
  std::size_t fn = 0;

  std::size_t total() const noexcept { return tp + fp + tn + fn; }
};

/// Threshold 0.5, p >= 0.5 counts as positive.
EvalReport evaluate_predictions(const nn::Matrix<float>& probabilities, const nn::Matrix<float>& labels);
EvalReport evaluate(const nn::DenseNetwork<float>& net, const PairSet& test);

struct GridCell {
  ClassifierSpec spec;
  std::size_t params = 0;
  EvalReport report;
  std::size_t epochs = 0;
  std::uint64_t seed = 0;
  Protocol protocol = Protocol::Final;
  nn::TrainingHistory history;
  nn::DenseNetwork<float> net;
};

/// Called once per finished cell, possibly from a worker thread (serialized by run_grid).
using CellCallback = std::function<void(const GridCell&)>;

/// Trains and evaluates every spec. Cell seeds derive from (seed, spec name),
/// so results do not depend on `jobs` or completion order.
std::vector<GridCell> run_grid(const PairSet& train, const PairSet& test, const std::vector<ClassifierSpec>& specs,
                               const ClassifierTrainOptions& options, std::uint64_t seed, std::size_t jobs = 1,
                               const CellCallback& on_cell = {});

/// One JSON object: h1, h2, params, loss, accuracy, fn_rate_pos, fn_rate_all,
/// epochs, seed, plus protocol and confusion counts.
std::string cell_json(const GridCell& cell);

}  // namespace premsel
