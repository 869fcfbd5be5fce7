#include <gtest/gtest.h>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <numeric>

#include "premsel/error.hpp"
#include "premsel/nn/activation.hpp"
#include "premsel/nn/bytes.hpp"
#include "premsel/nn/container.hpp"
#include "premsel/nn/gradient_check.hpp"
#include "premsel/nn/loss.hpp"
#include "premsel/nn/network.hpp"
#include "premsel/nn/optimizer.hpp"
#include "premsel/nn/serialize.hpp"
#include "premsel/nn/train.hpp"
#include "premsel/random.hpp"

using namespace premsel;
using namespace premsel::nn;

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

template <typename S>
Matrix<S> random_matrix(Eigen::Index r, Eigen::Index c, Rng& rng, double scale = 1.0) {
  Matrix<S> m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = static_cast<S>(scale * (2.0 * rng.uniform() - 1.0));
  return m;
}

DenseNetwork<double> random_net(const std::vector<Eigen::Index>& dims, const std::vector<Activation>& acts, Rng& rng) {
  std::vector<DenseLayer<double>> layers;
  for (std::size_t k = 0; k + 1 < dims.size(); ++k) {
    auto l = make_dense_layer<double>(dims[k], dims[k + 1], acts[k], 0.0F, rng);
    for (Eigen::Index i = 0; i < l.bias.size(); ++i) l.bias(i) = 0.2 * (2.0 * rng.uniform() - 1.0);
    layers.push_back(std::move(l));
  }
  return DenseNetwork<double>(std::move(layers));
}

Matrix<double> one_hot_rows(Eigen::Index rows, Eigen::Index classes, Rng& rng) {
  Matrix<double> t = Matrix<double>::Zero(rows, classes);
  for (Eigen::Index r = 0; r < rows; ++r) t(r, static_cast<Eigen::Index>(rng.below(classes))) = 1.0;
  return t;
}

}  // namespace

TEST(HeUniform, Bounds) {
  Rng rng(1);
  const auto w6 = he_uniform_init<double>(50, 6, rng);
  EXPECT_LE(w6.cwiseAbs().maxCoeff(), 1.0);
  EXPECT_GT(w6.cwiseAbs().maxCoeff(), 0.9);
  const auto w = he_uniform_init<double>(256, 512, rng);
  const double bound = std::sqrt(6.0 / 512.0);
  EXPECT_NEAR(bound, 0.108253, 1e-6);
  EXPECT_LE(w.cwiseAbs().maxCoeff(), bound);
  EXPECT_NEAR(w.mean(), 0.0, 0.002);
  const auto layer = make_dense_layer<float>(512, 64, Activation::Relu, 0.5F, rng);
  EXPECT_TRUE(layer.bias.isZero());
  EXPECT_EQ(layer.weights.rows(), 64);
  EXPECT_EQ(layer.weights.cols(), 512);
}

TEST(Activation, Analytic) {
  Matrix<double> z = Matrix<double>::Zero(1, 3);
  activate(Activation::Softmax, z);
  for (int j = 0; j < 3; ++j) EXPECT_DOUBLE_EQ(z(0, j), 1.0 / 3.0);
  Matrix<double> s = Matrix<double>::Zero(1, 1);
  activate(Activation::Sigmoid, s);
  EXPECT_DOUBLE_EQ(s(0, 0), 0.5);
  Matrix<double> t = Matrix<double>::Zero(1, 1);
  activate(Activation::Tanh, t);
  EXPECT_DOUBLE_EQ(t(0, 0), 0.0);
  Matrix<double> r(1, 2);
  r << -1.0, 2.0;
  activate(Activation::Relu, r);
  EXPECT_EQ(r(0, 0), 0.0);
  EXPECT_EQ(r(0, 1), 2.0);
  Matrix<float> big(1, 1);
  big(0, 0) = 40.0F;
  activate(Activation::Tanh, big);
  EXPECT_LT(big(0, 0), 1.0F);
}

TEST(ActivationProperty, SoftmaxRowsSumToOne) {
  Rng rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    auto d = random_matrix<double>(4, 7, rng, 30.0);
    auto f = d.cast<float>().eval();
    activate(Activation::Softmax, d);
    activate(Activation::Softmax, f);
    for (int r = 0; r < 4; ++r) {
      EXPECT_NEAR(d.row(r).sum(), 1.0, 1e-9);
      EXPECT_NEAR(f.row(r).sum(), 1.0F, 1e-5F);
      EXPECT_GT(d.row(r).minCoeff(), 0.0);
      EXPECT_LT(d.row(r).maxCoeff(), 1.0);
    }
  }
}

TEST(Forward, IdentityNetwork) {
  DenseLayer<double> l{Matrix<double>::Identity(3, 3), Vector<double>::Zero(3), Activation::Identity, 0.0F};
  DenseNetwork<double> net({l});
  Rng rng(2);
  const auto x = random_matrix<double>(5, 3, rng);
  EXPECT_EQ(predict(net, InputBatch<double>(x)), x);
  EXPECT_EQ(code_of([&] { predict(net, InputBatch<double>(Matrix<double>::Zero(2, 4))); }), ErrorCode::ShapeMismatch);
}

TEST(Forward, SparseAndDenseAgree) {
  Rng rng(3);
  auto net = random_net({6, 4, 3}, {Activation::Tanh, Activation::Softmax}, rng);
  Matrix<double> dense = Matrix<double>::Zero(3, 6);
  dense(0, 1) = 1;
  dense(1, 5) = 2;
  dense(1, 0) = 1;
  SparseRows<double> sparse = dense.sparseView();
  EXPECT_TRUE(predict(net, InputBatch<double>(dense)).isApprox(predict(net, InputBatch<double>(sparse)), 1e-14));
}

TEST(Network, RejectsBadShapes) {
  Rng rng(4);
  auto a = make_dense_layer<float>(4, 3, Activation::Relu, 0.0F, rng);
  auto b = make_dense_layer<float>(5, 1, Activation::Sigmoid, 0.0F, rng);
  EXPECT_EQ(code_of([&] { DenseNetwork<float>({a, b}); }), ErrorCode::ShapeMismatch);
  auto c = make_dense_layer<float>(3, 1, Activation::Sigmoid, 0.5F, rng);
  EXPECT_EQ(code_of([&] { DenseNetwork<float>({a, c}); }), ErrorCode::InvalidSpec);
  a.dropout = 1.0F;
  EXPECT_EQ(code_of([&] { DenseNetwork<float>({a}); }), ErrorCode::InvalidSpec);
}

TEST(Loss, CategoricalExamples) {
  Matrix<double> u = Matrix<double>::Constant(1, 4, 0.25);
  EXPECT_NEAR(categorical_crossentropy(u, u).loss, std::log(4.0), 1e-12);
  Matrix<double> oh = Matrix<double>::Zero(1, 3);
  oh(0, 1) = 1.0;
  EXPECT_LE(categorical_crossentropy(oh, oh).loss, 1e-6);
  Matrix<double> p(1, 2);
  p << 0.75, 0.25;
  EXPECT_NEAR(categorical_crossentropy(p, p).loss, 0.562335, 1e-6);
  const auto r = categorical_crossentropy(p, oh.leftCols(2).eval());
  EXPECT_DOUBLE_EQ(r.logit_grad(0, 0), 0.75);
  EXPECT_DOUBLE_EQ(r.logit_grad(0, 1), -0.75);
  EXPECT_EQ(code_of([&] { categorical_crossentropy(p, u); }), ErrorCode::ShapeMismatch);
}

TEST(Loss, BinaryExamples) {
  Matrix<double> p(1, 1), y(1, 1);
  p << 0.5;
  y << 1.0;
  EXPECT_NEAR(binary_crossentropy(p, y).loss, std::log(2.0), 1e-12);
  p << 1.0;
  EXPECT_LE(binary_crossentropy(p, y).loss, 1e-6);
  p << 0.9;
  y << 0.0;
  EXPECT_NEAR(binary_crossentropy(p, y).loss, 2.302585, 1e-6);
  Matrix<double> p2(2, 1), y2(2, 1);
  p2 << 0.9, 0.2;
  y2 << 1.0, 1.0;
  const auto r = binary_crossentropy(p2, y2);
  EXPECT_NEAR(r.logit_grad(0, 0), -0.05, 1e-15);
  EXPECT_NEAR(r.logit_grad(1, 0), -0.4, 1e-15);
  EXPECT_EQ(code_of([&] { binary_crossentropy(Matrix<double>(Matrix<double>::Zero(2, 2)),
                                              Matrix<double>(Matrix<double>::Zero(2, 2))); }),
            ErrorCode::ShapeMismatch);
}

TEST(Backward, ZeroOutputGradient) {
  Rng rng(6);
  auto net = random_net({5, 4, 2}, {Activation::Relu, Activation::Softmax}, rng);
  ForwardCache<double> cache;
  const auto out = forward(net, InputBatch<double>(random_matrix<double>(3, 5, rng)), rng, &cache);
  for (const auto& g : backward(net, cache, Matrix<double>(Matrix<double>::Zero(out.rows(), out.cols())))) {
    EXPECT_TRUE(g.weights.isZero());
    EXPECT_TRUE(g.bias.isZero());
  }
}

TEST(Backward, SingleLayerBinary) {
  Rng rng(7);
  auto net = random_net({3, 1}, {Activation::Sigmoid}, rng);
  const auto x = random_matrix<double>(4, 3, rng);
  Matrix<double> y(4, 1);
  y << 1, 0, 1, 0;
  ForwardCache<double> cache;
  const auto p = forward(net, InputBatch<double>(x), rng, &cache);
  const auto grads = backward(net, cache, binary_crossentropy(p, y).logit_grad);
  const Matrix<double> expected = (p - y).transpose() * x / 4.0;
  EXPECT_TRUE(grads[0].weights.isApprox(expected, 1e-14));
  EXPECT_NEAR(grads[0].bias(0), (p - y).sum() / 4.0, 1e-15);
}

TEST(Backward, StaleCache) {
  Rng rng(8);
  auto net = random_net({3, 2}, {Activation::Softmax}, rng);
  auto other = net;
  ForwardCache<double> cache;
  const auto out = forward(net, InputBatch<double>(random_matrix<double>(2, 3, rng)), rng, &cache);
  const Matrix<double> g = Matrix<double>::Ones(out.rows(), out.cols());
  EXPECT_EQ(code_of([&] { backward(other, cache, g); }), ErrorCode::StaleCache);
  net.mutable_layer(0).bias(0) += 1.0;
  EXPECT_EQ(code_of([&] { backward(net, cache, g); }), ErrorCode::StaleCache);
  EXPECT_EQ(code_of([&] { backward(net, ForwardCache<double>{}, g); }), ErrorCode::StaleCache);
}

TEST(GradientCheck, RandomNetworks) {
  Rng rng(9);
  for (int trial = 0; trial < 30; ++trial) {
    const auto in = static_cast<Eigen::Index>(2 + rng.below(10));
    const auto hidden = static_cast<Eigen::Index>(2 + rng.below(8));
    const auto out = static_cast<Eigen::Index>(2 + rng.below(6));
    auto cat = random_net({in, hidden, out}, {Activation::Tanh, Activation::Softmax}, rng);
    auto bin = random_net({in, hidden, 1}, {Activation::Sigmoid, Activation::Sigmoid}, rng);
    const auto x = random_matrix<double>(4, in, rng);
    EXPECT_LT(gradient_check(cat, LossKind::CategoricalCrossentropy, InputBatch<double>(x), one_hot_rows(4, out, rng)),
              1e-4);
    Matrix<double> y(4, 1);
    y << 1, 0, 0, 1;
    EXPECT_LT(gradient_check(bin, LossKind::BinaryCrossentropy, InputBatch<double>(x), y), 1e-4);
  }
}

TEST(GradientCheck, IdentitySoftmax) {
  DenseLayer<double> l{Matrix<double>::Identity(4, 4), Vector<double>::Zero(4), Activation::Softmax, 0.0F};
  Rng rng(10);
  Matrix<double> t = Matrix<double>::Constant(3, 4, 0.25);
  EXPECT_LT(gradient_check(DenseNetwork<double>({l}), LossKind::CategoricalCrossentropy,
                           InputBatch<double>(random_matrix<double>(3, 4, rng)), t),
            1e-6);
}

TEST(GradientCheck, ReluAwayFromKink) {
  // Positive inputs, positive first-layer weights and a 0.1 bias keep every
  // hidden pre-activation at least 0.1 from the kink.
  Rng rng(11);
  for (int trial = 0; trial < 10; ++trial) {
    auto net = random_net({6, 5, 1}, {Activation::Relu, Activation::Sigmoid}, rng);
    net.mutable_layer(0).weights = net.layer(0).weights.cwiseAbs();
    net.mutable_layer(0).bias.setConstant(0.1);
    Matrix<double> x = random_matrix<double>(4, 6, rng).cwiseAbs();
    Matrix<double> y(4, 1);
    y << 0, 1, 1, 0;
    EXPECT_LT(gradient_check(net, LossKind::BinaryCrossentropy, InputBatch<double>(x), y), 1e-4);
  }
}

TEST(GradientCheck, SparseInput) {
  Rng rng(12);
  auto net = random_net({8, 3, 8}, {Activation::Tanh, Activation::Softmax}, rng);
  Matrix<double> dense = Matrix<double>::Zero(4, 8);
  for (int r = 0; r < 4; ++r) dense(r, 2 * r) = 1.0 + r;
  SparseRows<double> sparse = dense.sparseView();
  Matrix<double> t = Matrix<double>::Constant(4, 8, 0.125);
  EXPECT_LT(gradient_check(net, LossKind::CategoricalCrossentropy, InputBatch<double>(sparse), t), 1e-4);
}

namespace {

DenseNetwork<double> scalar_net(double w) {
  DenseLayer<double> l{Matrix<double>::Constant(1, 1, w), Vector<double>::Zero(1), Activation::Identity, 0.0F};
  return DenseNetwork<double>({l});
}

Gradients<double> scalar_grad(double g) {
  Gradients<double> grads(1);
  grads[0].weights = Matrix<double>::Constant(1, 1, g);
  grads[0].bias = Vector<double>::Zero(1);
  return grads;
}

}  // namespace

TEST(RmsProp, Steps) {
  auto net = scalar_net(0.5);
  auto state = OptimizerState<double>::make_rmsprop();
  rmsprop_step(state, net, scalar_grad(0.0));
  EXPECT_EQ(net.layer(0).weights(0, 0), 0.5);

  net = scalar_net(0.0);
  state = OptimizerState<double>::make_rmsprop();
  rmsprop_step(state, net, scalar_grad(1.0));
  const double first = net.layer(0).weights(0, 0);
  EXPECT_NEAR(first, -1e-3 / std::sqrt(0.1), 1e-10);
  EXPECT_NEAR(first, -3.1623e-3, 1e-7);

  net = scalar_net(0.0);
  state = OptimizerState<double>::make_rmsprop();
  state.step = 100000000;
  rmsprop_step(state, net, scalar_grad(1.0));
  EXPECT_NEAR(net.layer(0).weights(0, 0), first / 2.0, 1e-12);

  auto adam = OptimizerState<double>::make_adam();
  EXPECT_EQ(code_of([&] { rmsprop_step(adam, net, scalar_grad(1.0)); }), ErrorCode::InvalidSpec);
  Gradients<double> wrong(1);
  wrong[0].weights = Matrix<double>::Zero(2, 1);
  wrong[0].bias = Vector<double>::Zero(1);
  EXPECT_EQ(code_of([&] { rmsprop_step(state, net, wrong); }), ErrorCode::ShapeMismatch);
}

TEST(Adam, Steps) {
  auto net = scalar_net(0.5);
  auto state = OptimizerState<double>::make_adam();
  adam_step(state, net, scalar_grad(0.0));
  EXPECT_EQ(net.layer(0).weights(0, 0), 0.5);

  const double lr = 1e-4;
  for (double g : {1.0, -3.0, 1e-3, 250.0}) {
    net = scalar_net(0.0);
    state = OptimizerState<double>::make_adam();
    adam_step(state, net, scalar_grad(g));
    const double step1 = net.layer(0).weights(0, 0);
    EXPECT_EQ(std::signbit(step1), !std::signbit(g));
    EXPECT_GE(std::abs(step1), 0.99 * lr);
    EXPECT_LE(std::abs(step1), lr);
  }
  net = scalar_net(0.0);
  state = OptimizerState<double>::make_adam();
  adam_step(state, net, scalar_grad(1.0));
  const double d1 = std::abs(net.layer(0).weights(0, 0));
  adam_step(state, net, scalar_grad(1.0));
  const double d2 = std::abs(net.layer(0).weights(0, 0)) - d1;
  EXPECT_LE(d2, d1 * 1.01);
  EXPECT_EQ(state.step, 2U);
}

TEST(Dropout, PreservesExpectation) {
  Rng rng(13);
  const auto a = random_matrix<double>(1, 16, rng).cwiseAbs().eval();
  Matrix<double> sum = Matrix<double>::Zero(1, 16);
  const int draws = 10000;
  for (int i = 0; i < draws; ++i) sum.array() += a.array() * detail::dropout_mask<double>(1, 16, 0.5F, rng).array();
  const double ratio = (sum.sum() / draws) / a.sum();
  EXPECT_NEAR(ratio, 1.0, 0.02);
}

TEST(Dropout, EvalModeIsMaskFree) {
  Rng rng(14);
  std::vector<DenseLayer<double>> layers{make_dense_layer<double>(5, 8, Activation::Relu, 0.5F, rng),
                                         make_dense_layer<double>(8, 1, Activation::Sigmoid, 0.0F, rng)};
  DenseNetwork<double> net(std::move(layers));
  const InputBatch<double> x(random_matrix<double>(6, 5, rng));
  Rng r1(1), r2(2);
  EXPECT_NE(forward(net, x, r1), forward(net, x, r2));
  net.set_mode(Mode::Eval);
  EXPECT_EQ(forward(net, x, r1), forward(net, x, r2));
  EXPECT_EQ(forward(net, x, r1), predict(net, x));
}

TEST(Accuracy, TieRules) {
  Matrix<float> p(2, 1), y(2, 1);
  p << 0.5F, 0.2F;
  y << 1.0F, 0.0F;
  EXPECT_EQ(accuracy(p, y, TaskKind::Binary), 1.0);
  Matrix<float> u = Matrix<float>::Constant(3, 3, 1.0F / 3.0F);
  Matrix<float> t = Matrix<float>::Identity(3, 3);
  EXPECT_EQ(count_correct(u, t, TaskKind::Categorical), 1U);
  EXPECT_EQ(code_of([&] { accuracy(p, t, TaskKind::Binary); }), ErrorCode::ShapeMismatch);
}

namespace {

// Two Gaussian-free separable blobs: label is the sign of the first coordinate, offset by a margin.
std::pair<Matrix<float>, Matrix<float>> blobs(Eigen::Index n, Eigen::Index d, Rng& rng) {
  Matrix<float> x = random_matrix<float>(n, d, rng);
  Matrix<float> y(n, 1);
  for (Eigen::Index r = 0; r < n; ++r) {
    const bool pos = r % 2 == 0;
    x.row(r).array() += pos ? 1.0F : -1.0F;
    y(r, 0) = pos ? 1.0F : 0.0F;
  }
  return {x, y};
}

DenseNetwork<float> mlp(Eigen::Index in, Rng& rng, float dropout = 0.0F) {
  return DenseNetwork<float>({make_dense_layer<float>(in, 64, Activation::Relu, dropout, rng),
                              make_dense_layer<float>(64, 64, Activation::Relu, dropout, rng),
                              make_dense_layer<float>(64, 1, Activation::Sigmoid, 0.0F, rng)});
}

}  // namespace

TEST(Train, ZeroEpochs) {
  Rng rng(15);
  auto [x, y] = blobs(20, 4, rng);
  auto net = mlp(4, rng);
  const auto before = net;
  auto opt = OptimizerState<float>::make_adam();
  const auto history = train(net, DenseDataset<float>(x, y), LossKind::BinaryCrossentropy, opt, {0, 8, true}, rng);
  EXPECT_TRUE(history.empty());
  EXPECT_EQ(net, before);
}

TEST(Train, SeparableBlobs) {
  Rng rng(16);
  auto [x, y] = blobs(200, 8, rng);
  auto net = mlp(8, rng);
  auto opt = OptimizerState<float>::make_adam();
  const auto history = train(net, DenseDataset<float>(x, y), LossKind::BinaryCrossentropy, opt, {200, 32, true}, rng);
  ASSERT_EQ(history.size(), 200U);
  EXPECT_GE(history.back().accuracy, 0.95);
  EXPECT_LT(history.back().loss, history.front().loss);
  net.set_mode(Mode::Eval);
  EXPECT_GE(evaluate_dataset(net, DenseDataset<float>(x, y), LossKind::BinaryCrossentropy).second, 0.95);
}

TEST(Train, Deterministic) {
  auto run = [](std::uint64_t seed) {
    Rng rng(seed);
    auto [x, y] = blobs(50, 6, rng);
    auto net = mlp(6, rng, 0.5F);
    auto opt = OptimizerState<float>::make_adam();
    auto history = train(net, DenseDataset<float>(x, y), LossKind::BinaryCrossentropy, opt, {5, 16, true}, rng);
    return std::pair(net, history);
  };
  const auto [a, ha] = run(17);
  const auto [b, hb] = run(17);
  EXPECT_EQ(a, b);
  ASSERT_EQ(ha.size(), hb.size());
  for (std::size_t i = 0; i < ha.size(); ++i) {
    EXPECT_EQ(to_json_line(ha[i]), to_json_line(hb[i]));
    EXPECT_EQ(ha[i].wall_ms, 0);
  }
  EXPECT_FALSE(a == run(18).first);
}

TEST(History, JsonLine) {
  EpochRecord r;
  r.epoch = 3;
  r.loss = 0.5;
  r.accuracy = 0.75;
  EXPECT_EQ(to_json_line(r), R"({"epoch":3,"loss":0.5,"accuracy":0.75,"wall_ms":0})");
  r.val_loss = 0.25;
  r.val_accuracy = 1.0;
  EXPECT_EQ(to_json_line(r), R"({"epoch":3,"loss":0.5,"accuracy":0.75,"wall_ms":0,"val_loss":0.25,"val_accuracy":1.0})");
}

namespace {

std::filesystem::path temp_path(const std::string& name) {
  return std::filesystem::temp_directory_path() / ("premsel_test_" + name);
}

void put_crc(std::vector<std::byte>& bytes) {
  const auto crc = crc32_of(std::span<const std::byte>(bytes.data(), bytes.size() - 4));
  for (int i = 0; i < 4; ++i) bytes[bytes.size() - 4 + i] = static_cast<std::byte>((crc >> (8 * i)) & 0xFF);
}

}  // namespace

TEST(Serialize, RoundTripAndLayout) {
  Rng rng(19);
  DenseNetwork<float> net({make_dense_layer<float>(3, 2, Activation::Tanh, 0.25F, rng),
                           make_dense_layer<float>(2, 1, Activation::Sigmoid, 0.0F, rng)});
  const auto bytes = serialize_model(net);
  // magic + version + count + 2 * (1 + 4 + 4 + 4) + (6 + 2 + 2 + 1) floats + crc
  EXPECT_EQ(bytes.size(), 4U + 4 + 4 + 2 * 13 + 11 * 4 + 4);
  EXPECT_EQ(std::memcmp(bytes.data(), "PSNN", 4), 0);
  EXPECT_EQ(static_cast<int>(bytes[4]), 1);
  const auto back = deserialize_model(bytes);
  EXPECT_EQ(back, net);
  const auto file = temp_path("model.psnn");
  save_model(net, file);
  EXPECT_EQ(load_model(file), net);
  std::filesystem::remove(file);
  EXPECT_EQ(code_of([&] { load_model(file); }), ErrorCode::IoFailure);
}

TEST(Serialize, CorruptionRejected) {
  Rng rng(20);
  DenseNetwork<float> net({make_dense_layer<float>(4, 3, Activation::Relu, 0.0F, rng),
                           make_dense_layer<float>(3, 2, Activation::Softmax, 0.0F, rng)});
  const auto good = serialize_model(net);

  auto magic = good;
  magic[0] = std::byte{'X'};
  EXPECT_EQ(code_of([&] { deserialize_model(magic); }), ErrorCode::BadMagic);

  auto version = good;
  version[4] = std::byte{2};
  put_crc(version);
  EXPECT_EQ(code_of([&] { deserialize_model(version); }), ErrorCode::VersionMismatch);

  for (std::size_t cut : {std::size_t{0}, std::size_t{3}, std::size_t{10}, good.size() - 1}) {
    std::vector<std::byte> truncated(good.begin(), good.begin() + static_cast<std::ptrdiff_t>(cut));
    const auto code = code_of([&] { deserialize_model(truncated); });
    EXPECT_TRUE(code == ErrorCode::ChecksumMismatch || code == ErrorCode::BadMagic) << cut;
  }
  for (std::size_t i = 4; i < good.size(); ++i) {
    auto flipped = good;
    flipped[i] ^= std::byte{0x10};
    ASSERT_EQ(code_of([&] { deserialize_model(flipped); }), ErrorCode::ChecksumMismatch) << i;
  }
}

TEST(Container, RoundTripAndErrors) {
  TensorContainer c;
  c.put_vector("u", std::vector<std::uint32_t>{1, 2, 3});
  c.put("m", std::vector<double>{1.5, -2, 3, 4, 5, 6}, 2, 3);
  c.put_vector("i", std::vector<std::int64_t>{-7});
  EXPECT_EQ(code_of([&] { c.put("bad", std::vector<float>{1}, 2, 2); }), ErrorCode::ShapeMismatch);
  const auto bytes = c.serialize();
  const auto back = TensorContainer::deserialize(bytes);
  EXPECT_EQ(back.get<std::uint32_t>("u"), (std::vector<std::uint32_t>{1, 2, 3}));
  EXPECT_EQ(back.get_matrix<double>("m")(1, 2), 6.0);
  EXPECT_EQ(back.get<std::int64_t>("i")[0], -7);
  EXPECT_EQ(back.serialize(), bytes);
  EXPECT_EQ(code_of([&] { back.get<float>("u"); }), ErrorCode::ShapeMismatch);
  EXPECT_EQ(code_of([&] { back.entry("missing"); }), ErrorCode::UpstreamMissing);
  auto flipped = bytes;
  flipped[bytes.size() / 2] ^= std::byte{1};
  EXPECT_EQ(code_of([&] { TensorContainer::deserialize(flipped); }), ErrorCode::ChecksumMismatch);
  auto magic = bytes;
  magic[1] = std::byte{'Q'};
  EXPECT_EQ(code_of([&] { TensorContainer::deserialize(magic); }), ErrorCode::BadMagic);
}

TEST(RngTest, ShuffleIsPermutationAndSeeded) {
  std::vector<int> a(100), b(100);
  std::iota(a.begin(), a.end(), 0);
  b = a;
  Rng r1(21), r2(21);
  shuffle(std::span<int>(a), r1);
  shuffle(std::span<int>(b), r2);
  EXPECT_EQ(a, b);
  auto sorted = a;
  std::sort(sorted.begin(), sorted.end());
  for (int i = 0; i < 100; ++i) EXPECT_EQ(sorted[static_cast<std::size_t>(i)], i);
  EXPECT_NE(derive_seed(1, "embed"), derive_seed(1, "pairs"));
  EXPECT_EQ(derive_seed(1, "embed"), derive_seed(1, "embed"));
  Rng r(3);
  for (int i = 0; i < 1000; ++i) {
    const double u = r.uniform();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    ASSERT_LT(r.below(7), 7U);
  }
}
