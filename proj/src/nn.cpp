// SPDX-License-Identifier: Apache-2.0
#include "hybeam/nn.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "hybeam/errors.hpp"

namespace hybeam::nn {

// --- layer specs ------------------------------------------------------------

LayerSpec LayerSpec::input(int h, int w, int c) {
  return {LayerKind::kInput, h, w, c, 0};
}
LayerSpec LayerSpec::conv(int filters, int kh, int kw, int stride, Padding padding) {
  LayerSpec s{LayerKind::kConv, filters, kh, kw, stride};
  s.padding = padding;
  return s;
}
LayerSpec LayerSpec::relu() { return {LayerKind::kRelu}; }
LayerSpec LayerSpec::fully_connected(int nodes) {
  return {LayerKind::kFullyConnected, nodes};
}
LayerSpec LayerSpec::dropout(double rate) {
  LayerSpec s{LayerKind::kDropout};
  s.rate = rate;
  return s;
}
LayerSpec LayerSpec::softmax_output(int classes) {
  return {LayerKind::kSoftmaxOutput, classes};
}
LayerSpec LayerSpec::regression_output(int dim) {
  return {LayerKind::kRegressionOutput, dim};
}

namespace {

bool is_output(LayerKind k) {
  return k == LayerKind::kSoftmaxOutput || k == LayerKind::kRegressionOutput;
}

int conv_out_extent(int in, int k, int stride, Padding padding) {
  if (padding == Padding::kSame) return (in + stride - 1) / stride;
  return (in - k) / stride + 1;
}

}  // namespace

std::vector<Shape3> NetworkSpec::validate() const {
  if (layers.size() < 2 || layers.front().kind != LayerKind::kInput) {
    throw contract_error("NetworkSpec: first layer must be input");
  }
  if (!is_output(layers.back().kind)) {
    throw contract_error("NetworkSpec: last layer must be an output layer");
  }
  std::vector<Shape3> shapes;
  Shape3 cur{layers[0].p0, layers[0].p1, layers[0].p2};
  if (cur.count() <= 0) throw contract_error("NetworkSpec: empty input shape");
  shapes.push_back(cur);
  for (std::size_t i = 1; i < layers.size(); ++i) {
    const LayerSpec& l = layers[i];
    if (l.kind == LayerKind::kInput) {
      throw contract_error("NetworkSpec: interior input layer");
    }
    if (is_output(l.kind) && i + 1 != layers.size()) {
      throw contract_error("NetworkSpec: output layer must be last");
    }
    switch (l.kind) {
      case LayerKind::kConv: {
        if (l.p0 <= 0 || l.p1 <= 0 || l.p2 <= 0 || l.p3 <= 0) {
          throw contract_error("NetworkSpec: bad conv parameters");
        }
        if (l.padding == Padding::kValid && (l.p1 > cur.h || l.p2 > cur.w)) {
          throw contract_error("NetworkSpec: conv kernel larger than input");
        }
        cur = {conv_out_extent(cur.h, l.p1, l.p3, l.padding),
               conv_out_extent(cur.w, l.p2, l.p3, l.padding), l.p0};
        break;
      }
      case LayerKind::kRelu:
        break;
      case LayerKind::kDropout:
        if (l.rate < 0.0 || l.rate >= 1.0) {
          throw contract_error("NetworkSpec: dropout rate must be in [0,1)");
        }
        break;
      case LayerKind::kFullyConnected:
      case LayerKind::kSoftmaxOutput:
      case LayerKind::kRegressionOutput:
        if (l.p0 <= 0) throw contract_error("NetworkSpec: bad layer width");
        cur = {1, 1, l.p0};
        break;
      default:
        throw contract_error("NetworkSpec: unknown layer kind");
    }
    if (cur.count() <= 0) throw contract_error("NetworkSpec: degenerate shape");
    shapes.push_back(cur);
  }
  return shapes;
}

NetworkSpec NetworkSpec::cnn_14(int h, int w, int c, bool classification,
                                int output_dim) {
  NetworkSpec s;
  s.layers = {LayerSpec::input(h, w, c),
              LayerSpec::conv(64, 2, 2),
              LayerSpec::relu(),
              LayerSpec::conv(64, 2, 2),
              LayerSpec::relu(),
              LayerSpec::conv(64, 2, 2),
              LayerSpec::relu(),
              LayerSpec::fully_connected(512),
              LayerSpec::relu(),
              LayerSpec::dropout(0.5),
              LayerSpec::fully_connected(512),
              LayerSpec::relu(),
              LayerSpec::dropout(0.5),
              classification ? LayerSpec::softmax_output(output_dim)
                             : LayerSpec::regression_output(output_dim)};
  return s;
}

// --- layers -----------------------------------------------------------------

class Layer {
 public:
  virtual ~Layer() = default;
  virtual Matrix forward(const Matrix& x, bool train, Rng* dropout_rng) = 0;
  virtual Matrix backward(const Matrix& dy) = 0;
  virtual Matrix* w() { return nullptr; }
  virtual Vector* b() { return nullptr; }
  virtual Matrix* gw() { return nullptr; }
  virtual Vector* gb() { return nullptr; }
};

namespace {

class InputLayer final : public Layer {
 public:
  explicit InputLayer(Shape3 shape) : shape_(shape) {}
  Matrix forward(const Matrix& x, bool, Rng*) override {
    if (x.rows() != shape_.count()) {
      throw contract_error("input layer: expected " +
                           std::to_string(shape_.count()) + " features, got " +
                           std::to_string(x.rows()));
    }
    return x;
  }
  Matrix backward(const Matrix& dy) override { return dy; }

 private:
  Shape3 shape_;
};

class ReluLayer final : public Layer {
 public:
  Matrix forward(const Matrix& x, bool train, Rng*) override {
    Matrix y = x.cwiseMax(Scalar(0));
    if (train) {
      mask_.resize(static_cast<std::size_t>(x.size()));
      const Scalar* xp = x.data();
      for (std::size_t i = 0; i < mask_.size(); ++i) {
        mask_[i] = xp[i] > Scalar(0);  // gradient at 0 is 0
      }
    }
    return y;
  }
  Matrix backward(const Matrix& dy) override {
    Matrix dx(dy.rows(), dy.cols());
    const Scalar* dp = dy.data();
    Scalar* op = dx.data();
    for (std::size_t i = 0; i < mask_.size(); ++i) {
      op[i] = mask_[i] ? dp[i] : Scalar(0);
    }
    return dx;
  }

 private:
  std::vector<std::uint8_t> mask_;
};

class DropoutLayer final : public Layer {
 public:
  explicit DropoutLayer(double rate) : rate_(rate) {}
  Matrix forward(const Matrix& x, bool train, Rng* rng) override {
    if (!train || rate_ == 0.0) {
      if (train) mask_ = Matrix::Ones(x.rows(), x.cols());
      return x;
    }
    const Scalar keep_scale = Scalar(1.0 / (1.0 - rate_));
    mask_.resize(x.rows(), x.cols());
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
      for (Eigen::Index i = 0; i < x.rows(); ++i) {
        mask_(i, j) = rng->uniform() >= rate_ ? keep_scale : Scalar(0);
      }
    }
    return x.cwiseProduct(mask_);
  }
  Matrix backward(const Matrix& dy) override { return dy.cwiseProduct(mask_); }

 private:
  double rate_;
  Matrix mask_;
};

class AffineLayer final : public Layer {
 public:
  AffineLayer(int in_dim, int out_dim, Rng& init_rng)
      : w_(out_dim, in_dim), b_(Vector::Zero(out_dim)) {
    const double std = std::sqrt(2.0 / in_dim);
    for (Eigen::Index i = 0; i < w_.rows(); ++i)
      for (Eigen::Index j = 0; j < w_.cols(); ++j)
        w_(i, j) = Scalar(std * init_rng.gaussian());
    gw_ = Matrix::Zero(w_.rows(), w_.cols());
    gb_ = Vector::Zero(b_.size());
  }

  Matrix forward(const Matrix& x, bool train, Rng*) override {
    if (x.rows() != w_.cols()) {
      throw contract_error("fully connected layer: input dim mismatch");
    }
    if (train) x_ = x;
    Matrix y(w_.rows(), x.cols());
    if (!train && x.cols() == 1) {
      // Single-sample online inference is memory-bound on the weight matrix;
      // a single-precision copy halves the traffic. Training and storage
      // stay in Scalar precision.
      if (wf_stale_) {
        wf_ = w_.cast<float>();
        wf_stale_ = false;
      }
      const Eigen::VectorXf xf = x.col(0).cast<float>();
      Eigen::VectorXf yf(w_.rows());
      yf.noalias() = wf_ * xf;
      y.col(0) = yf.cast<Scalar>();
    } else {
      y.noalias() = w_ * x;
    }
    y.colwise() += b_;
    return y;
  }

  Matrix backward(const Matrix& dy) override {
    gw_.noalias() = dy * x_.transpose();
    gb_ = dy.rowwise().sum();
    return w_.transpose() * dy;
  }

  Matrix* w() override {
    wf_stale_ = true;  // any caller holding this pointer may write
    return &w_;
  }
  Vector* b() override { return &b_; }
  Matrix* gw() override { return &gw_; }
  Vector* gb() override { return &gb_; }

 private:
  Matrix w_, gw_, x_;
  Eigen::MatrixXf wf_;
  bool wf_stale_ = true;
  Vector b_, gb_;
};

// Convolution as im2col + GEMM. Activation layout is (row, col, channel)
// with channel fastest; patch columns are ordered (ky, kx, cin) to match.
// With that layout a (p*filters + f, sample) activation matrix and the
// (f, sample*positions + p) GEMM product are the same buffer, so the
// product is written through a map with no reshape pass. Training forward
// keeps the patch matrix (k x batch*positions) alive for backward.
class ConvLayer final : public Layer {
 public:
  ConvLayer(Shape3 in, const LayerSpec& spec, Rng& init_rng)
      : in_(in),
        filters_(spec.p0),
        kh_(spec.p1),
        kw_(spec.p2),
        stride_(spec.p3),
        padding_(spec.padding) {
    out_ = {conv_out_extent(in.h, kh_, stride_, padding_),
            conv_out_extent(in.w, kw_, stride_, padding_), filters_};
    if (padding_ == Padding::kSame) {
      pad_top_ = std::max((out_.h - 1) * stride_ + kh_ - in_.h, 0) / 2;
      pad_left_ = std::max((out_.w - 1) * stride_ + kw_ - in_.w, 0) / 2;
    }
    const int k = kh_ * kw_ * in_.c;
    const double std = std::sqrt(2.0 / k);
    w_.resize(filters_, k);
    for (Eigen::Index i = 0; i < w_.rows(); ++i)
      for (Eigen::Index j = 0; j < w_.cols(); ++j)
        w_(i, j) = Scalar(std * init_rng.gaussian());
    b_ = Vector::Zero(filters_);
    gw_ = Matrix::Zero(filters_, k);
    gb_ = Vector::Zero(filters_);
  }

  Matrix forward(const Matrix& x, bool train, Rng*) override {
    if (x.rows() != in_.count()) {
      throw contract_error("conv layer: input dim mismatch");
    }
    const Eigen::Index batch = x.cols();
    const int positions = out_.h * out_.w;
    Matrix scratch;
    Matrix& cols = train ? cols_ : scratch;
    im2col(x, cols);
    Matrix y(out_.count(), batch);
    Eigen::Map<Matrix> prod(y.data(), filters_, batch * positions);
    prod.noalias() = w_ * cols;
    prod.colwise() += b_;
    return y;
  }

  Matrix backward(const Matrix& dy) override {
    const Eigen::Index batch = dy.cols();
    const int positions = out_.h * out_.w;
    Eigen::Map<const Matrix> dprod(dy.data(), filters_, batch * positions);
    gw_.noalias() = dprod * cols_.transpose();
    gb_ = dprod.rowwise().sum();
    dcols_.resize(w_.cols(), dprod.cols());
    dcols_.noalias() = w_.transpose() * dprod;
    Matrix dx = Matrix::Zero(in_.count(), batch);
    col2im(dcols_, dx);
    return dx;
  }

  Matrix* w() override { return &w_; }
  Vector* b() override { return &b_; }
  Matrix* gw() override { return &gw_; }
  Vector* gb() override { return &gb_; }

 private:
  void im2col(const Matrix& x, Matrix& cols) const {
    const Eigen::Index batch = x.cols();
    const int positions = out_.h * out_.w;
    const int k = kh_ * kw_ * in_.c;
    cols.resize(k, batch * positions);
    for (Eigen::Index s = 0; s < batch; ++s) {
      const Scalar* xs = x.data() + s * x.rows();
      for (int oy = 0; oy < out_.h; ++oy) {
        for (int ox = 0; ox < out_.w; ++ox) {
          Scalar* cp =
              cols.data() + (s * positions + oy * out_.w + ox) * cols.rows();
          for (int ky = 0; ky < kh_; ++ky) {
            const int iy = oy * stride_ - pad_top_ + ky;
            for (int kx = 0; kx < kw_; ++kx) {
              const int ix = ox * stride_ - pad_left_ + kx;
              if (iy < 0 || iy >= in_.h || ix < 0 || ix >= in_.w) {
                std::fill(cp, cp + in_.c, Scalar(0));
              } else {
                const Scalar* src = xs + (iy * in_.w + ix) * in_.c;
                std::copy(src, src + in_.c, cp);
              }
              cp += in_.c;
            }
          }
        }
      }
    }
  }

  void col2im(const Matrix& dcols, Matrix& dx) const {
    const Eigen::Index batch = dx.cols();
    const int positions = out_.h * out_.w;
    for (Eigen::Index s = 0; s < batch; ++s) {
      Scalar* dxs = dx.data() + s * dx.rows();
      for (int oy = 0; oy < out_.h; ++oy) {
        for (int ox = 0; ox < out_.w; ++ox) {
          const Scalar* cp =
              dcols.data() + (s * positions + oy * out_.w + ox) * dcols.rows();
          for (int ky = 0; ky < kh_; ++ky) {
            const int iy = oy * stride_ - pad_top_ + ky;
            for (int kx = 0; kx < kw_; ++kx) {
              const int ix = ox * stride_ - pad_left_ + kx;
              if (iy >= 0 && iy < in_.h && ix >= 0 && ix < in_.w) {
                Scalar* dst = dxs + (iy * in_.w + ix) * in_.c;
                for (int ci = 0; ci < in_.c; ++ci) dst[ci] += cp[ci];
              }
              cp += in_.c;
            }
          }
        }
      }
    }
  }

  Shape3 in_, out_;
  int filters_, kh_, kw_, stride_;
  Padding padding_;
  int pad_top_ = 0, pad_left_ = 0;
  Matrix w_, gw_, cols_, dcols_;
  Vector b_, gb_;
};

std::unique_ptr<Layer> make_layer(const LayerSpec& spec, Shape3 in, Rng& init_rng) {
  switch (spec.kind) {
    case LayerKind::kInput:
      return std::make_unique<InputLayer>(in);
    case LayerKind::kConv:
      return std::make_unique<ConvLayer>(in, spec, init_rng);
    case LayerKind::kRelu:
      return std::make_unique<ReluLayer>();
    case LayerKind::kDropout:
      return std::make_unique<DropoutLayer>(spec.rate);
    case LayerKind::kFullyConnected:
    case LayerKind::kSoftmaxOutput:
    case LayerKind::kRegressionOutput:
      return std::make_unique<AffineLayer>(in.count(), spec.p0, init_rng);
  }
  throw contract_error("make_layer: unknown layer kind");
}

}  // namespace

// --- network ----------------------------------------------------------------

Network::Network(NetworkSpec spec, std::uint64_t init_seed)
    : spec_(std::move(spec)), init_seed_(init_seed) {
  const auto shapes = spec_.validate();
  layers_.reserve(spec_.layers.size());
  for (std::size_t i = 0; i < spec_.layers.size(); ++i) {
    Rng layer_rng(derive_seed(init_seed_, i));
    const Shape3 in = i == 0 ? shapes[0] : shapes[i - 1];
    layers_.push_back(make_layer(spec_.layers[i], in, layer_rng));
  }
}

Network::Network(Network&&) noexcept = default;
Network& Network::operator=(Network&&) noexcept = default;
Network::~Network() = default;

Shape3 Network::input_shape() const {
  const auto& l = spec_.layers.front();
  return {l.p0, l.p1, l.p2};
}

int Network::output_dim() const { return spec_.layers.back().p0; }

Matrix Network::forward(const Matrix& x, bool train, std::uint64_t dropout_seed) {
  Matrix act = x;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    if (spec_.layers[i].kind == LayerKind::kDropout && train) {
      Rng rng(derive_seed(dropout_seed, i));
      act = layers_[i]->forward(act, train, &rng);
    } else {
      act = layers_[i]->forward(act, train, nullptr);
    }
  }
  return act;
}

Matrix Network::backward(const Matrix& dout) {
  Matrix grad = dout;
  for (auto it = layers_.rbegin(); it != layers_.rend(); ++it) {
    grad = (*it)->backward(grad);
  }
  return grad;
}

void Network::sgd_step(double lr, double momentum, double weight_decay) {
  std::size_t k = 0;
  for (auto& layer : layers_) {
    if (!layer->w()) continue;
    if (momentum == 0.0 && weight_decay == 0.0) {
      *layer->w() -= Scalar(lr) * *layer->gw();
      *layer->b() -= Scalar(lr) * *layer->gb();
      continue;
    }
    if (vw_.size() <= k) {
      vw_.push_back(Matrix::Zero(layer->gw()->rows(), layer->gw()->cols()));
      vb_.push_back(Vector::Zero(layer->gb()->size()));
    }
    vw_[k] = Scalar(momentum) * vw_[k] + *layer->gw() +
             Scalar(weight_decay) * *layer->w();
    vb_[k] = Scalar(momentum) * vb_[k] + *layer->gb();
    *layer->w() -= Scalar(lr) * vw_[k];
    *layer->b() -= Scalar(lr) * vb_[k];
    ++k;
  }
}

std::vector<Network::ParamView> Network::params() {
  std::vector<ParamView> out;
  for (auto& layer : layers_) {
    if (layer->w()) {
      out.push_back({layer->w(), layer->b(), layer->gw(), layer->gb()});
    }
  }
  return out;
}

// --- losses -----------------------------------------------------------------

Matrix softmax(const Matrix& logits) {
  Matrix p(logits.rows(), logits.cols());
  for (Eigen::Index j = 0; j < logits.cols(); ++j) {
    const Scalar m = logits.col(j).maxCoeff();
    p.col(j) = (logits.col(j).array() - m).exp();
    p.col(j) /= p.col(j).sum();
  }
  return p;
}

std::pair<double, Matrix> softmax_cross_entropy(
    const Matrix& logits, const std::vector<std::uint32_t>& labels) {
  if (static_cast<Eigen::Index>(labels.size()) != logits.cols()) {
    throw contract_error("softmax_cross_entropy: one label per column required");
  }
  const Eigen::Index batch = logits.cols();
  Matrix grad = softmax(logits);
  double loss = 0.0;
  for (Eigen::Index j = 0; j < batch; ++j) {
    if (labels[j] >= static_cast<std::uint32_t>(logits.rows())) {
      throw contract_error("softmax_cross_entropy: label out of range");
    }
    loss -= std::log(std::max<double>(grad(labels[j], j), 1e-300));
    grad(labels[j], j) -= Scalar(1);
  }
  grad /= Scalar(batch);
  return {loss / batch, grad};
}

std::pair<double, Matrix> mse_loss(const Matrix& pred, const Matrix& target) {
  if (pred.rows() != target.rows() || pred.cols() != target.cols()) {
    throw contract_error("mse_loss: shape mismatch");
  }
  const double n = static_cast<double>(pred.rows());
  const double batch = static_cast<double>(pred.cols());
  const Matrix diff = pred - target;
  const double loss = diff.squaredNorm() / (n * batch);
  Matrix grad = (Scalar(2.0 / (n * batch)) * diff.array()).matrix();
  return {loss, grad};
}

// --- training ---------------------------------------------------------------

namespace {

double eval_loss(Network& net, Task task, const TrainData& data, int batch_size) {
  const Eigen::Index n = data.inputs.cols();
  if (n == 0) return 0.0;
  double total = 0.0;
  for (Eigen::Index b0 = 0; b0 < n; b0 += batch_size) {
    const Eigen::Index len = std::min<Eigen::Index>(batch_size, n - b0);
    const Matrix out = net.forward(data.inputs.middleCols(b0, len), false);
    if (task == Task::kClassification) {
      std::vector<std::uint32_t> lab(data.labels.begin() + b0,
                                     data.labels.begin() + b0 + len);
      total += softmax_cross_entropy(out, lab).first * len;
    } else {
      total += mse_loss(out, data.targets.middleCols(b0, len)).first * len;
    }
  }
  return total / n;
}

}  // namespace

TrainHistory train(Network& net, Task task, const TrainData& train_set,
                   const TrainData& val_set, const TrainOptions& opts) {
  const Eigen::Index n = train_set.inputs.cols();
  if (n == 0) throw contract_error("train: empty training set");
  if (task == Task::kClassification &&
      train_set.labels.size() != static_cast<std::size_t>(n)) {
    throw contract_error("train: label count mismatch");
  }
  if (task == Task::kRegression && train_set.targets.cols() != n) {
    throw contract_error("train: target count mismatch");
  }

  TrainHistory hist;
  std::vector<Eigen::Index> order(n);
  std::iota(order.begin(), order.end(), Eigen::Index{0});

  for (int epoch = 0; epoch < opts.epochs; ++epoch) {
    Rng shuffle_rng(derive_seed(opts.seed, 0x5A5A0000ULL + epoch));
    shuffle_rng.shuffle(order);

    double epoch_loss = 0.0;
    Eigen::Index seen = 0;
    int batch_index = 0;
    for (Eigen::Index b0 = 0; b0 < n; b0 += opts.batch_size, ++batch_index) {
      const Eigen::Index len = std::min<Eigen::Index>(opts.batch_size, n - b0);
      Matrix xb(train_set.inputs.rows(), len);
      std::vector<std::uint32_t> lab(len);
      Matrix tb;
      if (task == Task::kRegression) tb.resize(train_set.targets.rows(), len);
      for (Eigen::Index i = 0; i < len; ++i) {
        const Eigen::Index src = order[b0 + i];
        xb.col(i) = train_set.inputs.col(src);
        if (task == Task::kClassification) {
          lab[i] = train_set.labels[src];
        } else {
          tb.col(i) = train_set.targets.col(src);
        }
      }

      const std::uint64_t dropout_seed =
          derive_seed(derive_seed(opts.seed, 0xD509 + epoch), batch_index);
      const Matrix out = net.forward(xb, true, dropout_seed);
      double loss;
      Matrix grad;
      if (task == Task::kClassification) {
        std::tie(loss, grad) = softmax_cross_entropy(out, lab);
      } else {
        // Descend on the per-sample sum of squared errors (mean over the
        // batch) so the regression gradient magnitude matches the
        // cross-entropy gradient at the same learning rate; the reported
        // loss stays in mean-MSE units for comparability with validation.
        std::tie(loss, grad) = mse_loss(out, tb);
        grad *= static_cast<double>(out.rows());
      }
      if (!std::isfinite(loss)) {
        throw numeric_error("train: loss diverged at epoch " +
                            std::to_string(epoch));
      }
      net.backward(grad);
      net.sgd_step(opts.learning_rate, opts.momentum, opts.weight_decay);
      epoch_loss += loss * len;
      seen += len;
    }

    hist.train_loss.push_back(epoch_loss / seen);
    hist.val_loss.push_back(eval_loss(net, task, val_set, opts.batch_size));
  }

  net.meta().epochs_seen += static_cast<std::uint32_t>(opts.epochs);
  if (!hist.train_loss.empty()) {
    net.meta().final_train_loss = hist.train_loss.back();
    net.meta().final_val_loss = hist.val_loss.back();
  }
  return hist;
}

std::pair<std::uint32_t, Vector> predict_class(Network& net, const Vector& x) {
  const Matrix out = net.forward(x, false);
  const Matrix p = softmax(out);
  Eigen::Index best = 0;
  p.col(0).maxCoeff(&best);
  return {static_cast<std::uint32_t>(best), p.col(0)};
}

Vector predict_regression(Network& net, const Vector& x) {
  return net.forward(x, false).col(0);
}

}  // namespace hybeam::nn
