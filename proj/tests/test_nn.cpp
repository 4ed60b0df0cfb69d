// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cmath>
#include <sstream>
#include <vector>

#include "hybeam/errors.hpp"
#include "hybeam/nn.hpp"
#include "hybeam/nn_io.hpp"
#include "hybeam/rng.hpp"

using namespace hybeam;
using namespace hybeam::nn;

namespace {

Matrix random_batch(Rng& rng, int features, int batch) {
  Matrix x(features, batch);
  for (int j = 0; j < batch; ++j)
    for (int i = 0; i < features; ++i) x(i, j) = rng.gaussian();
  return x;
}

// Central-difference check of every parameter gradient and the input
// gradient. The dropout seed is held fixed so the loss is a deterministic
// function of the perturbation.
void check_gradients(Network& net, Task task, const Matrix& x,
                     const std::vector<std::uint32_t>& labels,
                     const Matrix& targets) {
  const std::uint64_t dseed = 77;
  auto loss_of = [&](const Matrix& input) {
    const Matrix out = net.forward(input, true, dseed);
    return task == Task::kClassification
               ? softmax_cross_entropy(out, labels).first
               : mse_loss(out, targets).first;
  };

  const Matrix out = net.forward(x, true, dseed);
  Matrix grad = task == Task::kClassification
                    ? softmax_cross_entropy(out, labels).second
                    : mse_loss(out, targets).second;
  const Matrix dx = net.backward(grad);

  std::vector<Matrix> gw;
  std::vector<Vector> gb;
  for (auto pv : net.params()) {
    gw.push_back(*pv.gw);
    gb.push_back(*pv.gb);
  }

  const double eps = 1e-5;
  auto close = [&](double analytic, double numeric) {
    CHECK(std::abs(analytic - numeric) <=
          1e-7 + 1e-5 * std::max(std::abs(analytic), std::abs(numeric)));
  };

  auto views = net.params();
  for (std::size_t k = 0; k < views.size(); ++k) {
    Matrix& w = *views[k].w;
    for (Eigen::Index i = 0; i < w.size(); ++i) {
      const double orig = w(i);
      w(i) = orig + eps;
      const double lp = loss_of(x);
      w(i) = orig - eps;
      const double lm = loss_of(x);
      w(i) = orig;
      close(gw[k](i), (lp - lm) / (2 * eps));
    }
    Vector& b = *views[k].b;
    for (Eigen::Index i = 0; i < b.size(); ++i) {
      const double orig = b(i);
      b(i) = orig + eps;
      const double lp = loss_of(x);
      b(i) = orig - eps;
      const double lm = loss_of(x);
      b(i) = orig;
      close(gb[k](i), (lp - lm) / (2 * eps));
    }
  }

  Matrix xp = x;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double orig = xp(i);
    xp(i) = orig + eps;
    const double lp = loss_of(xp);
    xp(i) = orig - eps;
    const double lm = loss_of(xp);
    xp(i) = orig;
    close(dx(i), (lp - lm) / (2 * eps));
  }
}

}  // namespace

TEST_CASE("spec validation and the 14-layer template") {
  const auto spec = NetworkSpec::cnn_14(8, 2, 3, true, 70);
  REQUIRE(spec.layers.size() == 14);
  const auto shapes = spec.validate();
  CHECK(shapes[0] == Shape3{8, 2, 3});
  CHECK(shapes[1] == Shape3{8, 2, 64});   // same-padded conv
  CHECK(shapes[6] == Shape3{8, 2, 64});
  CHECK(shapes[7] == Shape3{1, 1, 512});
  CHECK(shapes[13] == Shape3{1, 1, 70});
  CHECK(spec.layers[13].kind == LayerKind::kSoftmaxOutput);

  const auto reg = NetworkSpec::cnn_14(4, 4, 3, false, 32);
  CHECK(reg.layers[13].kind == LayerKind::kRegressionOutput);
  CHECK(reg.validate()[13].count() == 32);

  NetworkSpec bad;
  bad.layers = {LayerSpec::relu()};
  CHECK_THROWS_AS(bad.validate(), contract_error);

  NetworkSpec bad_conv;
  bad_conv.layers = {LayerSpec::input(2, 2, 1),
                     LayerSpec::conv(4, 3, 3, 1, Padding::kValid)};
  CHECK_THROWS_AS(bad_conv.validate(), contract_error);
}

TEST_CASE("gradient check: fully connected stack with cross-entropy") {
  NetworkSpec spec;
  spec.layers = {LayerSpec::input(1, 1, 3), LayerSpec::fully_connected(4),
                 LayerSpec::relu(), LayerSpec::softmax_output(2)};
  Network net(spec, 11);
  Rng rng(1);
  const Matrix x = random_batch(rng, 3, 5);
  check_gradients(net, Task::kClassification, x, {0, 1, 1, 0, 1}, {});
}

TEST_CASE("gradient check: same-padded convolution with MSE") {
  NetworkSpec spec;
  spec.layers = {LayerSpec::input(3, 3, 2), LayerSpec::conv(3, 2, 2),
                 LayerSpec::relu(), LayerSpec::regression_output(4)};
  Network net(spec, 12);
  Rng rng(2);
  const Matrix x = random_batch(rng, 18, 3);
  const Matrix t = random_batch(rng, 4, 3);
  check_gradients(net, Task::kRegression, x, {}, t);
}

TEST_CASE("gradient check: strided valid convolution") {
  NetworkSpec spec;
  spec.layers = {LayerSpec::input(4, 4, 1),
                 LayerSpec::conv(2, 2, 2, 2, Padding::kValid),
                 LayerSpec::regression_output(3)};
  CHECK(spec.validate()[1] == Shape3{2, 2, 2});
  Network net(spec, 13);
  Rng rng(3);
  const Matrix x = random_batch(rng, 16, 2);
  const Matrix t = random_batch(rng, 3, 2);
  check_gradients(net, Task::kRegression, x, {}, t);
}

TEST_CASE("gradient check: dropout with a pinned mask") {
  NetworkSpec spec;
  spec.layers = {LayerSpec::input(1, 1, 6), LayerSpec::fully_connected(8),
                 LayerSpec::relu(), LayerSpec::dropout(0.5),
                 LayerSpec::regression_output(3)};
  Network net(spec, 14);
  Rng rng(4);
  const Matrix x = random_batch(rng, 6, 4);
  const Matrix t = random_batch(rng, 3, 4);
  check_gradients(net, Task::kRegression, x, {}, t);
}

TEST_CASE("softmax is stable at extreme logits") {
  Matrix logits(3, 2);
  logits << 1000.0, -1000.0, 999.0, -1002.0, -1000.0, 1000.0;
  const Matrix p = softmax(logits);
  for (int j = 0; j < 2; ++j) {
    CHECK(p.col(j).sum() == doctest::Approx(1.0));
    for (int i = 0; i < 3; ++i) CHECK(std::isfinite(p(i, j)));
  }
  CHECK(p(0, 0) > p(1, 0));
  CHECK(p(2, 1) == doctest::Approx(1.0));
}

TEST_CASE("loss oracles") {
  // uniform logits: loss = ln(k), grad = (1/k - onehot)/batch
  Matrix z = Matrix::Zero(3, 2);
  auto [loss, grad] = softmax_cross_entropy(z, {0, 2});
  CHECK(loss == doctest::Approx(std::log(3.0)));
  CHECK(grad(0, 0) == doctest::Approx((1.0 / 3.0 - 1.0) / 2.0));
  CHECK(grad(1, 0) == doctest::Approx((1.0 / 3.0) / 2.0));
  CHECK_THROWS_AS(softmax_cross_entropy(z, {0, 3}), contract_error);
  CHECK_THROWS_AS(softmax_cross_entropy(z, {0}), contract_error);

  Matrix pred(2, 2), target(2, 2);
  pred << 1.0, 0.0, 3.0, 2.0;
  target << 0.0, 0.0, 1.0, 2.0;
  auto [mloss, mgrad] = mse_loss(pred, target);
  CHECK(mloss == doctest::Approx((1.0 + 4.0) / (2.0 * 2.0)));
  CHECK(mgrad(0, 0) == doctest::Approx(2.0 * 1.0 / 4.0));
  CHECK(mgrad(1, 1) == doctest::Approx(0.0));
}

TEST_CASE("dropout keeps about half the activations and scales the rest") {
  // read the mask through a ones-weight affine head: each output equals
  // 2 * (number of kept inputs) with inverted dropout at rate 0.5
  const int n = 2000;
  const int batch = 50;
  NetworkSpec spec;
  spec.layers = {LayerSpec::input(1, 1, n), LayerSpec::dropout(0.5),
                 LayerSpec::regression_output(1)};
  Network net(spec, 21);
  auto pv = net.params();
  REQUIRE(pv.size() == 1);
  pv[0].w->setOnes();
  pv[0].b->setZero();
  const Matrix ones = Matrix::Ones(n, batch);

  const Matrix train_out = net.forward(ones, true, 123);
  double kept = 0.0;
  for (int j = 0; j < batch; ++j) {
    // column sums must be an even integer: every survivor contributes 2
    const double col = train_out(0, j);
    CHECK(std::abs(col / 2.0 - std::round(col / 2.0)) <= 1e-9);
    kept += col / 2.0;
  }
  CHECK(std::abs(kept / double(n * batch) - 0.5) <= 0.01);

  // same seed reproduces the mask; a different seed does not
  CHECK((net.forward(ones, true, 123) - train_out).norm() == 0.0);
  CHECK((net.forward(ones, true, 124) - train_out).norm() > 0.0);

  // inference mode applies dropout as the identity
  const Matrix infer = net.forward(ones, false);
  for (int j = 0; j < batch; ++j) {
    CHECK(infer(0, j) == doctest::Approx(double(n)));
  }
}

TEST_CASE("initialization is seed-deterministic") {
  const auto spec = NetworkSpec::cnn_14(4, 2, 3, true, 6);
  Network a(spec, 42), b(spec, 42), c(spec, 43);
  auto pa = a.params(), pb = b.params(), pc = c.params();
  REQUIRE(pa.size() == pb.size());
  bool any_diff = false;
  for (std::size_t k = 0; k < pa.size(); ++k) {
    CHECK((*pa[k].w - *pb[k].w).norm() == 0.0);
    CHECK((*pa[k].b - *pb[k].b).norm() == 0.0);
    if ((*pa[k].w - *pc[k].w).norm() > 0.0) any_diff = true;
  }
  CHECK(any_diff);
}

TEST_CASE("sgd step applies w <- w - lr * grad") {
  NetworkSpec spec;
  spec.layers = {LayerSpec::input(1, 1, 2), LayerSpec::regression_output(2)};
  Network net(spec, 5);
  auto pv = net.params();
  REQUIRE(pv.size() == 1);
  const Matrix w0 = *pv[0].w;
  pv[0].gw->setConstant(3.0);
  pv[0].gb->setConstant(-1.0);
  const Vector b0 = *pv[0].b;
  net.sgd_step(0.5);
  CHECK((*pv[0].w - (w0.array() - 1.5).matrix()).norm() <= 1e-15);
  CHECK((*pv[0].b - (b0.array() + 0.5).matrix()).norm() <= 1e-15);
}

TEST_CASE("training separates a two-class toy") {
  Rng rng(6);
  const int n = 200;
  TrainData data;
  data.inputs = Matrix(2, n);
  data.labels.resize(n);
  for (int i = 0; i < n; ++i) {
    const int cls = i % 2;
    data.inputs(0, i) = rng.gaussian() * 0.3 + (cls ? 2.0 : -2.0);
    data.inputs(1, i) = rng.gaussian() * 0.3 + (cls ? -1.0 : 1.0);
    data.labels[i] = static_cast<std::uint32_t>(cls);
  }

  NetworkSpec spec;
  spec.layers = {LayerSpec::input(1, 1, 2), LayerSpec::fully_connected(16),
                 LayerSpec::relu(), LayerSpec::softmax_output(2)};
  Network net(spec, 7);

  TrainOptions opts;
  opts.epochs = 50;
  opts.batch_size = 50;
  opts.learning_rate = 0.1;
  opts.seed = 99;
  const auto hist = train(net, Task::kClassification, data, data, opts);
  REQUIRE(hist.train_loss.size() == 50);
  REQUIRE(hist.val_loss.size() == 50);
  CHECK(hist.train_loss.back() < hist.train_loss.front());
  CHECK(net.meta().epochs_seen == 50);

  int correct = 0;
  for (int i = 0; i < n; ++i) {
    if (predict_class(net, data.inputs.col(i)).first == data.labels[i]) ++correct;
  }
  CHECK(correct >= int(0.95 * n));

  // identical reruns produce identical losses
  Network net2(spec, 7);
  const auto hist2 = train(net2, Task::kClassification, data, data, opts);
  for (int e = 0; e < 50; ++e) {
    CHECK(hist2.train_loss[e] == hist.train_loss[e]);
    CHECK(hist2.val_loss[e] == hist.val_loss[e]);
  }
}

TEST_CASE("regression training recovers a linear map") {
  Rng rng(8);
  const int n = 256;
  Matrix w_true(2, 3);
  w_true << 0.5, -1.0, 0.25, 1.5, 0.0, -0.75;
  TrainData data;
  data.inputs = random_batch(rng, 3, n);
  data.targets = w_true * data.inputs;

  NetworkSpec spec;
  spec.layers = {LayerSpec::input(1, 1, 3), LayerSpec::regression_output(2)};
  Network net(spec, 9);
  TrainOptions opts;
  opts.epochs = 200;
  opts.batch_size = 64;
  opts.learning_rate = 0.05;
  opts.seed = 17;
  const auto hist = train(net, Task::kRegression, data, data, opts);
  CHECK(hist.val_loss.back() < 1e-4);
  const Vector probe = data.inputs.col(0);
  const Vector pred = predict_regression(net, probe);
  CHECK((pred - Vector(w_true * probe)).norm() <= 0.05);
}

TEST_CASE("zero epochs leaves the network untouched") {
  NetworkSpec spec;
  spec.layers = {LayerSpec::input(1, 1, 2), LayerSpec::regression_output(2)};
  Network net(spec, 10);
  const Matrix w0 = *net.params()[0].w;
  TrainData data;
  data.inputs = Matrix::Ones(2, 4);
  data.targets = Matrix::Zero(2, 4);
  TrainOptions opts;
  opts.epochs = 0;
  const auto hist = train(net, Task::kRegression, data, data, opts);
  CHECK(hist.train_loss.empty());
  CHECK((*net.params()[0].w - w0).norm() == 0.0);
}

TEST_CASE("diverging loss raises a numeric error") {
  NetworkSpec spec;
  spec.layers = {LayerSpec::input(1, 1, 1), LayerSpec::regression_output(1)};
  Network net(spec, 11);
  TrainData data;
  data.inputs = Matrix::Ones(1, 4);
  data.targets = Matrix::Constant(1, 4, 1e200);
  TrainOptions opts;
  opts.epochs = 5;
  opts.batch_size = 4;
  opts.learning_rate = 1.0;
  CHECK_THROWS_AS(train(net, Task::kRegression, data, data, opts), numeric_error);
}

TEST_CASE("model files round-trip bit-exactly") {
  const auto spec = NetworkSpec::cnn_14(4, 2, 3, true, 6);
  Network net(spec, 31);
  net.input_scale = 2.75;
  net.meta().epochs_seen = 12;
  net.meta().final_train_loss = 0.125;
  net.meta().final_val_loss = 0.25;

  std::ostringstream os(std::ios::binary);
  save_model(net, os);
  const std::string bytes = os.str();
  CHECK(bytes.substr(0, 4) == "HBNN");

  std::istringstream is(bytes, std::ios::binary);
  Network loaded = load_model(is);
  CHECK(loaded.spec().layers.size() == 14);
  CHECK(loaded.input_scale == 2.75);
  CHECK(loaded.init_seed() == 31);
  CHECK(loaded.meta().epochs_seen == 12);
  CHECK(loaded.meta().final_train_loss == 0.125);
  CHECK(loaded.meta().final_val_loss == 0.25);

  auto pa = net.params(), pb = loaded.params();
  REQUIRE(pa.size() == pb.size());
  for (std::size_t k = 0; k < pa.size(); ++k) {
    CHECK((*pa[k].w - *pb[k].w).norm() == 0.0);
    CHECK((*pa[k].b - *pb[k].b).norm() == 0.0);
  }

  std::ostringstream os2(std::ios::binary);
  save_model(loaded, os2);
  CHECK(os2.str() == bytes);

  // identical forward behaviour
  Rng rng(12);
  const Matrix x = random_batch(rng, 24, 3);
  CHECK((net.forward(x, false) - loaded.forward(x, false)).norm() == 0.0);

  std::string corrupt = bytes;
  corrupt[0] = 'X';
  std::istringstream bad(corrupt, std::ios::binary);
  CHECK_THROWS_AS(load_model(bad), format_error);

  std::istringstream truncated(bytes.substr(0, bytes.size() / 2),
                               std::ios::binary);
  CHECK_THROWS_AS(load_model(truncated), format_error);
}
