#include "premsel/classifier.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <mutex>
#include <thread>

#include "json.hpp"
#include "premsel/nn/optimizer.hpp"

namespace premsel {

namespace {

bool allowed(std::size_t width) {
  return std::find(kHiddenSizes.begin(), kHiddenSizes.end(), width) != kHiddenSizes.end();
}

std::size_t parse_size(std::string_view text) {
  std::size_t value = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || ptr != text.data() + text.size() || text.empty()) {
    throw Error(ErrorCode::InvalidSpec, "not a layer width: '" + std::string(text) + "'");
  }
  return value;
}

}  // namespace

ClassifierSpec parse_spec(std::string_view text, std::size_t input_dim, float dropout) {
  const auto x = text.find('x');
  if (x == std::string_view::npos) throw Error(ErrorCode::InvalidSpec, "expected H1xH2, got '" + std::string(text) + "'");
  ClassifierSpec spec{parse_size(text.substr(0, x)), parse_size(text.substr(x + 1)), dropout, input_dim};
  validate(spec);
  return spec;
}

void validate(const ClassifierSpec& spec) {
  if (!allowed(spec.h1) || !allowed(spec.h2)) {
    throw Error(ErrorCode::InvalidSpec, spec.name() + ": widths must be one of 64, 128, 256, 512, 1024");
  }
  if (spec.h2 > spec.h1) throw Error(ErrorCode::InvalidSpec, spec.name() + ": second layer wider than first");
  if (spec.input_dim == 0) throw Error(ErrorCode::InvalidSpec, "input dimension must be positive");
  if (!(spec.dropout >= 0.0F && spec.dropout < 1.0F)) throw Error(ErrorCode::InvalidSpec, "dropout must lie in [0, 1)");
}

std::vector<ClassifierSpec> grid_specs(std::size_t input_dim, float dropout) {
  std::vector<ClassifierSpec> specs;
  for (auto h1 : kHiddenSizes) {
    for (auto h2 : kHiddenSizes) {
      if (h2 <= h1) specs.push_back({h1, h2, dropout, input_dim});
    }
  }
  return specs;
}

std::vector<ClassifierSpec> default_final_specs(std::size_t input_dim, float dropout) {
  return {{64, 64, dropout, input_dim},
          {256, 256, dropout, input_dim},
          {512, 128, dropout, input_dim},
          {1024, 1024, dropout, input_dim}};
}

std::size_t param_count(const ClassifierSpec& spec) {
  validate(spec);
  return spec.input_dim * spec.h1 + spec.h1 + spec.h1 * spec.h2 + spec.h2 + spec.h2 + 1;
}

nn::DenseNetwork<float> build_classifier(const ClassifierSpec& spec, Rng& rng) {
  validate(spec);
  return make_classifier_network<float>(spec.input_dim, spec.h1, spec.h2, spec.dropout, rng);
}

std::string_view to_string(Protocol p) noexcept { return p == Protocol::Dev ? "dev" : "final"; }

Protocol parse_protocol(std::string_view text) {
  if (text == "dev") return Protocol::Dev;
  if (text == "final") return Protocol::Final;
  throw Error(ErrorCode::ConfigError, "protocol must be 'dev' or 'final', got '" + std::string(text) + "'");
}

TrainedClassifier train_classifier(const ClassifierSpec& spec, const PairSet& train,
                                   const ClassifierTrainOptions& options, Rng& rng,
                                   const nn::EpochCallback& on_epoch) {
  if (static_cast<std::size_t>(train.features.cols()) != spec.input_dim) {
    throw Error(ErrorCode::ShapeMismatch, "rows have " + std::to_string(train.features.cols()) +
                                              " features, spec expects " + std::to_string(spec.input_dim));
  }
  Rng init_rng = rng.split();
  TrainedClassifier out{build_classifier(spec, init_rng), {}};

  PairSet fit_rows;
  PairSet validation;
  const PairSet* rows = &train;
  if (options.protocol == Protocol::Dev) {
    Rng split_rng = rng.split();
    std::tie(fit_rows, validation) = split(train, options.validation_fraction, split_rng);
    rows = &fit_rows;
  }

  nn::AdamConfig adam;
  adam.learning_rate = options.learning_rate;
  auto optimizer = nn::OptimizerState<float>::make_adam(adam);
  const nn::DenseDataset<float> data(rows->features, rows->labels);

  nn::EpochCallback callback = on_epoch;
  if (options.protocol == Protocol::Dev) {
    callback = [&](nn::EpochRecord& record) {
      const nn::DenseDataset<float> val(validation.features, validation.labels);
      const auto [loss, acc] = nn::evaluate_dataset(out.net, val, nn::LossKind::BinaryCrossentropy);
      record.val_loss = loss;
      record.val_accuracy = acc;
      if (on_epoch) on_epoch(record);
    };
  }
  out.history = nn::train(out.net, data, nn::LossKind::BinaryCrossentropy, optimizer,
                          nn::TrainOptions{options.resolved_epochs(), options.batch_size, options.deterministic},
                          rng, callback);
  out.net.set_mode(nn::Mode::Eval);
  return out;
}

EvalReport evaluate_predictions(const nn::Matrix<float>& probabilities, const nn::Matrix<float>& labels) {
  const auto bce = nn::binary_crossentropy(probabilities, labels);
  EvalReport r;
  r.loss = bce.loss;
  for (Eigen::Index i = 0; i < probabilities.rows(); ++i) {
    const bool predicted = probabilities(i, 0) >= 0.5F;
    const bool actual = labels(i, 0) >= 0.5F;
    if (predicted && actual) ++r.tp;
    if (predicted && !actual) ++r.fp;
    if (!predicted && !actual) ++r.tn;
    if (!predicted && actual) ++r.fn;
  }
  const auto n = static_cast<double>(r.total());
  if (n > 0) {
    r.accuracy = static_cast<double>(r.tp + r.tn) / n;
    r.fn_rate_all = static_cast<double>(r.fn) / n;
  }
  if (r.fn + r.tp > 0) r.fn_rate_pos = static_cast<double>(r.fn) / static_cast<double>(r.fn + r.tp);
  return r;
}

EvalReport evaluate(const nn::DenseNetwork<float>& net, const PairSet& test) {
  if (test.features.cols() != net.input_dim()) {
    throw Error(ErrorCode::ShapeMismatch, "test rows have " + std::to_string(test.features.cols()) +
                                              " features, network expects " + std::to_string(net.input_dim()));
  }
  nn::Matrix<float> probabilities(test.features.rows(), 1);
  constexpr Eigen::Index kChunk = 4096;
  for (Eigen::Index begin = 0; begin < test.features.rows(); begin += kChunk) {
    const auto count = std::min(kChunk, test.features.rows() - begin);
    probabilities.middleRows(begin, count) =
        nn::predict(net, nn::InputBatch<float>(nn::Matrix<float>(test.features.middleRows(begin, count))));
  }
  return evaluate_predictions(probabilities, test.labels);
}

std::vector<GridCell> run_grid(const PairSet& train, const PairSet& test, const std::vector<ClassifierSpec>& specs,
                               const ClassifierTrainOptions& options, std::uint64_t seed, std::size_t jobs,
                               const CellCallback& on_cell) {
  for (const auto& spec : specs) validate(spec);
  std::vector<GridCell> cells(specs.size());
  std::atomic<std::size_t> next{0};
  std::mutex callback_mutex;
  std::exception_ptr failure;

  const auto worker = [&] {
    for (std::size_t i = next++; i < specs.size(); i = next++) {
      try {
        GridCell cell;
        cell.spec = specs[i];
        cell.params = param_count(specs[i]);
        cell.seed = derive_seed(seed, specs[i].name());
        cell.protocol = options.protocol;
        cell.epochs = options.resolved_epochs();
        Rng rng(cell.seed);
        auto trained = train_classifier(specs[i], train, options, rng);
        cell.report = evaluate(trained.net, test);
        cell.history = std::move(trained.history);
        cell.net = std::move(trained.net);
        std::lock_guard lock(callback_mutex);
        if (on_cell) on_cell(cell);
        cells[i] = std::move(cell);
      } catch (...) {
        std::lock_guard lock(callback_mutex);
        if (!failure) failure = std::current_exception();
        next = specs.size();
      }
    }
  };

  const auto threads = std::clamp<std::size_t>(jobs, 1, std::max<std::size_t>(specs.size(), 1));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
  }
  if (failure) std::rethrow_exception(failure);
  return cells;
}

std::string cell_json(const GridCell& cell) {
  nlohmann::ordered_json j;
  j["h1"] = cell.spec.h1;
  j["h2"] = cell.spec.h2;
  j["params"] = cell.params;
  j["loss"] = cell.report.loss;
  j["accuracy"] = cell.report.accuracy;
  j["fn_rate_pos"] = cell.report.fn_rate_pos;
  j["fn_rate_all"] = cell.report.fn_rate_all;
  j["epochs"] = cell.epochs;
  j["seed"] = cell.seed;
  j["protocol"] = std::string(to_string(cell.protocol));
  j["tp"] = cell.report.tp;
  j["fp"] = cell.report.fp;
  j["tn"] = cell.report.tn;
  j["fn"] = cell.report.fn;
  return j.dump();
}

}  // namespace premsel
