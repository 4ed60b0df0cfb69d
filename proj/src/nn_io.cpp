// SPDX-License-Identifier: Apache-2.0
#include "hybeam/nn_io.hpp"

#include <fstream>

#include "hybeam/binio.hpp"

namespace hybeam::nn {

namespace {

constexpr char kMagic[4] = {'H', 'B', 'N', 'N'};

void write_matrix(std::ostream& os, const Matrix& m) {
  binio::write_pod<std::uint64_t>(os, static_cast<std::uint64_t>(m.size()));
  for (Eigen::Index j = 0; j < m.cols(); ++j)
    for (Eigen::Index i = 0; i < m.rows(); ++i)
      binio::write_pod<double>(os, static_cast<double>(m(i, j)));
}

void read_matrix(std::istream& is, Matrix& m, const char* what) {
  const auto count = binio::read_pod<std::uint64_t>(is, what);
  if (count != static_cast<std::uint64_t>(m.size())) {
    throw format_error(std::string("parameter count mismatch in ") + what);
  }
  for (Eigen::Index j = 0; j < m.cols(); ++j)
    for (Eigen::Index i = 0; i < m.rows(); ++i)
      m(i, j) = static_cast<Scalar>(binio::read_pod<double>(is, what));
}

void write_vector(std::ostream& os, const Vector& v) {
  binio::write_pod<std::uint64_t>(os, static_cast<std::uint64_t>(v.size()));
  for (Eigen::Index i = 0; i < v.size(); ++i)
    binio::write_pod<double>(os, static_cast<double>(v(i)));
}

void read_vector(std::istream& is, Vector& v, const char* what) {
  const auto count = binio::read_pod<std::uint64_t>(is, what);
  if (count != static_cast<std::uint64_t>(v.size())) {
    throw format_error(std::string("parameter count mismatch in ") + what);
  }
  for (Eigen::Index i = 0; i < v.size(); ++i)
    v(i) = static_cast<Scalar>(binio::read_pod<double>(is, what));
}

}  // namespace

void save_model(const Network& net, std::ostream& os) {
  binio::write_bytes(os, kMagic, 4);
  binio::write_pod<std::uint32_t>(os, kModelFormatVersion);

  const auto& layers = net.spec().layers;
  binio::write_pod<std::uint32_t>(os, static_cast<std::uint32_t>(layers.size()));
  for (const auto& l : layers) {
    binio::write_pod<std::uint32_t>(os, static_cast<std::uint32_t>(l.kind));
    binio::write_pod<std::int32_t>(os, l.p0);
    binio::write_pod<std::int32_t>(os, l.p1);
    binio::write_pod<std::int32_t>(os, l.p2);
    binio::write_pod<std::int32_t>(os, l.p3);
    binio::write_pod<std::uint32_t>(os, static_cast<std::uint32_t>(l.padding));
    binio::write_pod<double>(os, l.rate);
  }

  binio::write_pod<double>(os, net.input_scale);
  binio::write_pod<std::uint64_t>(os, net.init_seed());
  binio::write_pod<std::uint32_t>(os, net.meta().epochs_seen);
  binio::write_pod<double>(os, net.meta().final_train_loss);
  binio::write_pod<double>(os, net.meta().final_val_loss);

  auto& mutable_net = const_cast<Network&>(net);  // parameter views only
  for (const auto& pv : mutable_net.params()) {
    write_matrix(os, *pv.w);
    write_vector(os, *pv.b);
  }
}

void save_model(const Network& net, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw format_error("cannot open " + path + " for writing");
  save_model(net, os);
  if (!os) throw format_error("write failure on " + path);
}

Network load_model(std::istream& is) {
  binio::expect_magic(is, kMagic, "HBNN");
  const auto version = binio::read_pod<std::uint32_t>(is, "version");
  if (version != kModelFormatVersion) {
    throw format_error("unsupported HBNN version " + std::to_string(version));
  }

  NetworkSpec spec;
  const auto n_layers = binio::read_pod<std::uint32_t>(is, "layer count");
  if (n_layers == 0 || n_layers > 1024) {
    throw format_error("implausible HBNN layer count");
  }
  spec.layers.resize(n_layers);
  for (auto& l : spec.layers) {
    l.kind = static_cast<LayerKind>(binio::read_pod<std::uint32_t>(is, "layer kind"));
    l.p0 = binio::read_pod<std::int32_t>(is, "layer param");
    l.p1 = binio::read_pod<std::int32_t>(is, "layer param");
    l.p2 = binio::read_pod<std::int32_t>(is, "layer param");
    l.p3 = binio::read_pod<std::int32_t>(is, "layer param");
    l.padding = static_cast<Padding>(binio::read_pod<std::uint32_t>(is, "layer padding"));
    l.rate = binio::read_pod<double>(is, "dropout rate");
  }

  const double input_scale = binio::read_pod<double>(is, "input scale");
  const auto init_seed = binio::read_pod<std::uint64_t>(is, "init seed");
  TrainingMeta meta;
  meta.epochs_seen = binio::read_pod<std::uint32_t>(is, "epochs seen");
  meta.final_train_loss = binio::read_pod<double>(is, "train loss");
  meta.final_val_loss = binio::read_pod<double>(is, "val loss");

  Network net(std::move(spec), init_seed);  // validates the descriptor list
  net.input_scale = input_scale;
  net.meta() = meta;
  for (const auto& pv : net.params()) {
    read_matrix(is, *pv.w, "weights");
    read_vector(is, *pv.b, "bias");
  }
  return net;
}

Network load_model(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw format_error("cannot open " + path);
  return load_model(is);
}

}  // namespace hybeam::nn
