#include <gtest/gtest.h>

#include <cmath>
#include <mutex>
#include <set>

#include "json.hpp"
#include "premsel/classifier.hpp"
#include "premsel/error.hpp"
#include "premsel/nn/gradient_check.hpp"
#include "premsel/random.hpp"

using namespace premsel;

namespace {

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no premsel::Error thrown";
  return ErrorCode::ConfigError;
}

// Rows whose label is the side of a random hyperplane, pushed 0.5 away from it.
// Two Gaussian blobs at +-mu, |mu| = 1.5, per-coordinate sd 0.2.
PairSet separable(std::size_t n, std::size_t d, Rng& rng) {
  PairSet p;
  p.features.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
  p.labels.resize(static_cast<Eigen::Index>(n), 1);
  nn::Vector<float> mu(static_cast<Eigen::Index>(d));
  for (Eigen::Index j = 0; j < mu.size(); ++j) mu(j) = static_cast<float>(2.0 * rng.uniform() - 1.0);
  mu *= 1.5F / mu.norm();
  for (Eigen::Index r = 0; r < static_cast<Eigen::Index>(n); ++r) {
    const bool pos = r % 2 == 0;
    for (Eigen::Index j = 0; j < mu.size(); ++j) {
      const double u1 = std::max(rng.uniform(), 1e-300);
      const double noise = std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * rng.uniform()) * 0.2;
      p.features(r, j) = static_cast<float>(noise) + (pos ? mu(j) : -mu(j));
    }
    p.labels(r, 0) = pos ? 1.0F : 0.0F;
  }
  return p;
}

}  // namespace

TEST(Spec, ParseAndValidate) {
  const auto s = parse_spec("512x128");
  EXPECT_EQ(s.h1, 512U);
  EXPECT_EQ(s.h2, 128U);
  EXPECT_EQ(s.name(), "512x128");
  EXPECT_EQ(code_of([] { parse_spec("64x128"); }), ErrorCode::InvalidSpec);
  EXPECT_EQ(code_of([] { parse_spec("100x64"); }), ErrorCode::InvalidSpec);
  EXPECT_EQ(code_of([] { parse_spec("64"); }), ErrorCode::InvalidSpec);
  EXPECT_EQ(code_of([] { parse_spec("64x64x64"); }), ErrorCode::InvalidSpec);
  EXPECT_EQ(code_of([] { validate(ClassifierSpec{64, 128}); }), ErrorCode::InvalidSpec);
}

TEST(Spec, GridAndDefaults) {
  const auto grid = grid_specs();
  ASSERT_EQ(grid.size(), 15U);
  std::set<std::pair<std::size_t, std::size_t>> cells;
  for (const auto& s : grid) {
    EXPECT_LE(s.h2, s.h1);
    cells.insert({s.h1, s.h2});
  }
  EXPECT_EQ(cells.size(), 15U);
  const auto finals = default_final_specs();
  ASSERT_EQ(finals.size(), 4U);
  EXPECT_EQ(finals[2].name(), "512x128");
}

TEST(Spec, ParamCounts) {
  EXPECT_EQ(param_count(parse_spec("64x64")), 37057U);
  EXPECT_EQ(param_count(parse_spec("1024x1024")), 1575937U);
  EXPECT_EQ(param_count(parse_spec("256x128")), 164353U);
  Rng rng(1);
  for (const auto& spec : grid_specs()) {
    const auto net = build_classifier(spec, rng);
    ASSERT_EQ(net.parameter_count(), param_count(spec)) << spec.name();
  }
}

TEST(Build, Layers) {
  Rng rng(2);
  const auto net = build_classifier(parse_spec("64x64"), rng);
  ASSERT_EQ(net.depth(), 3U);
  EXPECT_EQ(net.layer(0).weights.cols(), 512);
  EXPECT_EQ(net.layer(0).weights.rows(), 64);
  EXPECT_EQ(net.layer(1).weights.rows(), 64);
  EXPECT_EQ(net.layer(2).weights.rows(), 1);
  EXPECT_EQ(net.layer(0).activation, nn::Activation::Relu);
  EXPECT_EQ(net.layer(2).activation, nn::Activation::Sigmoid);
  EXPECT_EQ(net.layer(0).dropout, 0.5F);
  EXPECT_EQ(net.layer(1).dropout, 0.5F);
  EXPECT_EQ(net.layer(2).dropout, 0.0F);
  EXPECT_EQ(code_of([&] { build_classifier(ClassifierSpec{64, 128}, rng); }), ErrorCode::InvalidSpec);
  const auto big = build_classifier(parse_spec("1024x1024"), rng);
  EXPECT_EQ(big.parameter_count(), 1575937U);
}

TEST(Build, GradientCheckReduced) {
  Rng rng(3);
  auto net = make_classifier_network<double>(16, 8, 8, 0.0F, rng);
  nn::Matrix<double> x(6, 16);
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = 2.0 * rng.uniform() - 1.0;
  nn::Matrix<double> y(6, 1);
  y << 1, 0, 1, 1, 0, 0;
  EXPECT_LT(nn::gradient_check(net, nn::LossKind::BinaryCrossentropy, nn::InputBatch<double>(x), y), 1e-4);
}

TEST(Protocol, Parse) {
  EXPECT_EQ(parse_protocol("dev"), Protocol::Dev);
  EXPECT_EQ(parse_protocol("final"), Protocol::Final);
  EXPECT_EQ(code_of([] { parse_protocol("other"); }), ErrorCode::ConfigError);
  ClassifierTrainOptions o;
  EXPECT_EQ(o.resolved_epochs(), 2500U);
  o.protocol = Protocol::Dev;
  EXPECT_EQ(o.resolved_epochs(), 1500U);
}

TEST(Evaluate, HandBuiltCase) {
  nn::Matrix<float> p(4, 1), y(4, 1);
  p << 0.9F, 0.2F, 0.6F, 0.4F;
  y << 1, 1, 0, 0;
  const auto r = evaluate_predictions(p, y);
  EXPECT_EQ(r.tp, 1U);
  EXPECT_EQ(r.fn, 1U);
  EXPECT_EQ(r.fp, 1U);
  EXPECT_EQ(r.tn, 1U);
  EXPECT_DOUBLE_EQ(r.accuracy, 0.5);
  EXPECT_DOUBLE_EQ(r.fn_rate_pos, 0.5);
  EXPECT_DOUBLE_EQ(r.fn_rate_all, 0.25);
  EXPECT_EQ(r.total(), 4U);
}

TEST(Evaluate, DegeneratePredictors) {
  nn::Matrix<float> y(4, 1);
  y << 1, 0, 1, 0;
  const auto perfect = evaluate_predictions(y, y);
  EXPECT_EQ(perfect.accuracy, 1.0);
  EXPECT_EQ(perfect.fn_rate_pos, 0.0);
  const auto ones = evaluate_predictions(nn::Matrix<float>::Ones(4, 1), y);
  EXPECT_EQ(ones.fn_rate_pos, 0.0);
  EXPECT_EQ(ones.accuracy, 0.5);
}

TEST(Train, ZeroEpochsUntrained) {
  Rng rng(4);
  const auto data = separable(40, 16, rng);
  ClassifierSpec spec{64, 64, 0.5F, 16};
  ClassifierTrainOptions opts;
  opts.epochs = 0;
  Rng a(5), b(5);
  const auto trained = train_classifier(spec, data, opts, a);
  Rng init = b.split();
  EXPECT_EQ(trained.net, build_classifier(spec, init));
  EXPECT_TRUE(trained.history.empty());
  EXPECT_EQ(code_of([&] { train_classifier(ClassifierSpec{64, 64, 0.5F, 8}, data, opts, a); }),
            ErrorCode::ShapeMismatch);
}

TEST(Train, SeparableAndCapacity) {
  Rng rng(6);
  const auto data = separable(2000, 512, rng);
  ClassifierTrainOptions opts;
  opts.epochs = 100;
  opts.batch_size = 256;
  Rng r1(7);
  const auto small = train_classifier(parse_spec("64x64"), data, opts, r1);
  EXPECT_GE(small.history.back().accuracy, 0.95);
  Rng r2(7);
  const auto large = train_classifier(parse_spec("256x256"), data, opts, r2);
  EXPECT_LE(large.history.back().loss, small.history.back().loss + 0.05);
}

TEST(Train, DevProtocolRecordsValidation) {
  Rng rng(8);
  const auto data = separable(100, 16, rng);
  ClassifierTrainOptions opts;
  opts.protocol = Protocol::Dev;
  opts.epochs = 3;
  opts.batch_size = 32;
  const auto trained = train_classifier(ClassifierSpec{64, 64, 0.5F, 16}, data, opts, rng);
  ASSERT_EQ(trained.history.size(), 3U);
  for (const auto& r : trained.history) {
    EXPECT_TRUE(r.val_loss.has_value());
    EXPECT_TRUE(r.val_accuracy.has_value());
  }
}

TEST(Train, ReproducibleWithoutDropout) {
  Rng rng(9);
  const auto data = separable(80, 16, rng);
  ClassifierTrainOptions opts;
  opts.epochs = 5;
  opts.batch_size = 16;
  ClassifierSpec spec{64, 64, 0.0F, 16};
  Rng a(10), b(10);
  EXPECT_EQ(train_classifier(spec, data, opts, a).net, train_classifier(spec, data, opts, b).net);
}

TEST(Grid, SmokeRunIndependentOfJobs) {
  Rng rng(11);
  const auto all = separable(1000, 8, rng);
  const auto [train, test] = split(all, 0.1, rng);
  ClassifierTrainOptions opts;
  opts.protocol = Protocol::Dev;
  opts.epochs = 5;
  opts.batch_size = 128;
  const auto specs = grid_specs(8);
  std::mutex m;
  std::size_t seen = 0;
  const auto serial = run_grid(train, test, specs, opts, 42, 1, [&](const GridCell&) {
    std::lock_guard lock(m);
    ++seen;
  });
  EXPECT_EQ(seen, 15U);
  const auto parallel = run_grid(train, test, specs, opts, 42, 4);
  ASSERT_EQ(serial.size(), 15U);
  for (std::size_t i = 0; i < 15; ++i) {
    EXPECT_EQ(serial[i].spec, specs[i]);
    EXPECT_EQ(serial[i].params, param_count(specs[i]));
    EXPECT_EQ(serial[i].report.total(), test.size());
    EXPECT_EQ(cell_json(serial[i]), cell_json(parallel[i]));
    EXPECT_EQ(serial[i].history.size(), 5U);
    const auto j = nlohmann::json::parse(cell_json(serial[i]));
    for (const char* key : {"h1", "h2", "params", "loss", "accuracy", "fn_rate_pos", "fn_rate_all", "epochs", "seed"}) {
      EXPECT_TRUE(j.contains(key)) << key;
    }
  }
}
