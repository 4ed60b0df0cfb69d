// SPDX-License-Identifier: Apache-2.0
//
// Minimal CNN engine: conv / relu / fully-connected / dropout layers with
// exact analytic gradients, softmax cross-entropy and MSE losses, plain
// mini-batch SGD. Heavy lifting is expressed as Eigen matrix products
// (im2col for convolutions), everything else is hand-written so training is
// fully deterministic for a given seed.
#ifndef HYBEAM_NN_HPP
#define HYBEAM_NN_HPP

#include <Eigen/Dense>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "hybeam/rng.hpp"

namespace hybeam::nn {

// Build-wide precision switch; tests and shipped binaries use double.
#ifdef HYBEAM_NN_SINGLE_PRECISION
using Scalar = float;
#else
using Scalar = double;
#endif

using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

// Activations are flattened per sample in (row, col, channel) order with the
// channel index fastest; a batch is one column per sample.
struct Shape3 {
  int h = 0, w = 0, c = 0;
  int count() const { return h * w * c; }
  bool operator==(const Shape3&) const = default;
};

enum class LayerKind : std::uint32_t {
  kInput = 0,
  kConv = 1,
  kRelu = 2,
  kFullyConnected = 3,
  kDropout = 4,
  kSoftmaxOutput = 5,      // affine map to class logits
  kRegressionOutput = 6,   // affine map to the regression vector
};

enum class Padding : std::uint32_t { kSame = 0, kValid = 1 };

struct LayerSpec {
  LayerKind kind = LayerKind::kInput;
  int p0 = 0, p1 = 0, p2 = 0, p3 = 0;  // meaning depends on kind
  Padding padding = Padding::kSame;
  double rate = 0.0;  // dropout only

  static LayerSpec input(int h, int w, int c);
  static LayerSpec conv(int filters, int kh, int kw, int stride = 1,
                        Padding padding = Padding::kSame);
  static LayerSpec relu();
  static LayerSpec fully_connected(int nodes);
  static LayerSpec dropout(double rate);
  static LayerSpec softmax_output(int classes);
  static LayerSpec regression_output(int dim);
};

struct NetworkSpec {
  std::vector<LayerSpec> layers;

  // Checks layer ordering and shape chaining; returns the per-layer output
  // shapes. Throws contract_error on any inconsistency.
  std::vector<Shape3> validate() const;

  // The architecture used for both of the toolkit's networks: input,
  // 3 x (conv 64@2x2 + relu), fc 512, relu, dropout .5, fc 512, relu,
  // dropout .5, output. 14 layers in total.
  static NetworkSpec cnn_14(int h, int w, int c, bool classification,
                            int output_dim);
};

class Layer;

struct TrainingMeta {
  std::uint32_t epochs_seen = 0;
  double final_train_loss = 0.0;
  double final_val_loss = 0.0;
};

// A network plus its parameters. Construction initializes weights with
// He-scaled Gaussians drawn from the given seed.
class Network {
 public:
  Network(NetworkSpec spec, std::uint64_t init_seed);
  Network(Network&&) noexcept;
  Network& operator=(Network&&) noexcept;
  ~Network();

  const NetworkSpec& spec() const { return spec_; }
  Shape3 input_shape() const;
  int output_dim() const;
  std::uint64_t init_seed() const { return init_seed_; }

  // One forward pass over a batch (columns = samples). In training mode
  // dropout masks are drawn from derive_seed(dropout_seed, layer index) and
  // layer inputs are cached for backward(). Inference mode caches nothing
  // and applies dropout as the identity.
  Matrix forward(const Matrix& x, bool train, std::uint64_t dropout_seed = 0);

  // Backpropagates d(loss)/d(output); accumulates parameter gradients in the
  // layers and returns d(loss)/d(input).
  Matrix backward(const Matrix& dout);

  // Momentum SGD with L2 weight decay: v <- momentum*v + grad + decay*w;
  // w <- w - lr*v. Velocity buffers live in the network and start at zero;
  // momentum=0 is plain SGD. Decay applies to weights only, not biases.
  void sgd_step(double lr, double momentum = 0.0, double weight_decay = 0.0);

  struct ParamView {
    Matrix* w;
    Vector* b;
    Matrix* gw;
    Vector* gb;
  };
  // One entry per parameterized layer, in network order.
  std::vector<ParamView> params();

  TrainingMeta& meta() { return meta_; }
  const TrainingMeta& meta() const { return meta_; }
  double input_scale = 1.0;  // dataset normalization carried with the model

 private:
  NetworkSpec spec_;
  std::vector<std::unique_ptr<Layer>> layers_;
  std::uint64_t init_seed_ = 0;
  TrainingMeta meta_;
  std::vector<Matrix> vw_;  // momentum velocities, lazily sized
  std::vector<Vector> vb_;
};

// --- losses ---------------------------------------------------------------

// Mean cross-entropy over the batch with max-subtracted softmax.
// grad has the same shape as logits and already carries the 1/batch factor.
std::pair<double, Matrix> softmax_cross_entropy(
    const Matrix& logits, const std::vector<std::uint32_t>& labels);

// Mean over batch of (1/dim) * sum (pred - target)^2; grad includes 1/batch.
std::pair<double, Matrix> mse_loss(const Matrix& pred, const Matrix& target);

Matrix softmax(const Matrix& logits);

// --- training -------------------------------------------------------------

enum class Task { kClassification, kRegression };

struct TrainData {
  Matrix inputs;                        // features x samples
  std::vector<std::uint32_t> labels;    // classification
  Matrix targets;                       // regression (dim x samples)
};

struct TrainOptions {
  int epochs = 200;
  int batch_size = 500;
  double learning_rate = 0.005;
  double momentum = 0.9;       // classic SGD-with-momentum default
  double weight_decay = 1e-4;  // L2 penalty on weights (not biases)
  std::uint64_t seed = 0;
};

struct TrainHistory {
  std::vector<double> train_loss;  // one entry per epoch
  std::vector<double> val_loss;
};

// Shuffled mini-batch SGD. Throws numeric_error (with the epoch index in the
// message) if the loss goes non-finite. Deterministic given the seed.
TrainHistory train(Network& net, Task task, const TrainData& train_set,
                   const TrainData& val_set, const TrainOptions& opts);

std::pair<std::uint32_t, Vector> predict_class(Network& net, const Vector& x);
Vector predict_regression(Network& net, const Vector& x);

}  // namespace hybeam::nn

#endif  // HYBEAM_NN_HPP
