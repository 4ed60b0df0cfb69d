// SPDX-License-Identifier: Apache-2.0
#include "hybeam/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <set>

#include "hybeam/binio.hpp"
#include "hybeam/channel.hpp"
#include "hybeam/errors.hpp"
#include "hybeam/precoder.hpp"
#include "hybeam/selection.hpp"

namespace hybeam::dataset {

namespace {

constexpr char kMagic[4] = {'H', 'B', 'D', 'S'};
constexpr std::uint32_t kFormatVersion = 1;

std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::uint64_t noise_seed(std::uint64_t base, int realization, int copy, int copies) {
  return derive_seed(base ^ 0x9D2C5680AAD1ULL,
                     static_cast<std::uint64_t>(realization) * copies + copy);
}

}  // namespace

void GenConfig::validate() const {
  if (n_t <= 0 || n_r_total <= 0 || n_sel <= 0 || n_rf <= 0 || n_s <= 0) {
    throw config_error("gen config: all dimensions must be positive");
  }
  if (n_t % n_rf != 0) {
    throw config_error("gen config: n_t must be divisible by n_rf");
  }
  if (n_sel > n_r_total) {
    throw config_error("gen config: n_sel must not exceed n_r_total");
  }
  if (n_s > n_rf) throw config_error("gen config: n_s must not exceed n_rf");
  if (n_s > n_sel) throw config_error("gen config: n_s must not exceed n_sel");
  if (n_rf > std::min(n_sel, n_t)) {
    throw config_error("gen config: n_rf exceeds selected-channel rank bound");
  }
  if (num_paths < 1) throw config_error("gen config: need at least one path");
  if (pathloss <= 0.0) throw config_error("gen config: pathloss must be positive");
  if (num_realizations < 1 || copies_per_realization < 1) {
    throw config_error("gen config: N and L must be at least 1");
  }
  if (label_snr <= 0.0) throw config_error("gen config: label_snr must be positive");
}

std::vector<float> encode_channel(const CMatrix& h, double scale) {
  std::vector<float> t(static_cast<std::size_t>(h.rows()) * h.cols() * 3);
  std::size_t k = 0;
  for (Eigen::Index r = 0; r < h.rows(); ++r) {
    for (Eigen::Index c = 0; c < h.cols(); ++c) {
      const std::complex<double> z = h(r, c);
      t[k++] = static_cast<float>(std::abs(z) / scale);
      t[k++] = static_cast<float>(z.real() / scale);
      t[k++] = static_cast<float>(z.imag() / scale);
    }
  }
  return t;
}

DatasetPair generate(const GenConfig& config) {
  config.validate();
  const auto tx = channel::ArrayGeometry::from_total(config.n_t);
  const auto rx = channel::ArrayGeometry::from_total(config.n_r_total);
  const precoder::PartitionSpec part(config.n_t, config.n_rf);
  const int n = config.num_realizations;
  const int l = config.copies_per_realization;

  struct Labeled {
    CMatrix h;
    std::uint32_t label;
    std::vector<double> target;
    std::vector<int> subset;
  };
  std::vector<Labeled> realizations;
  realizations.reserve(n);

  for (int i = 0; i < n; ++i) {
    Rng rng(derive_seed(config.seed, i));
    const auto paths = channel::draw_paths(rng, config.num_paths);
    auto chan = channel::assemble_channel(tx, rx, paths, config.pathloss);
    selection::BestSubsetResult best;
    try {
      best = selection::exhaustive_best_subset(chan.h, config.n_sel,
                                               config.label_snr, config.n_s,
                                               config.subset_budget);
    } catch (const budget_error& e) {
      throw budget_error("generate: realization " + std::to_string(i) + ": " +
                             e.what(),
                         e.count());
    }
    const CMatrix h_sel = selection::apply_selection(chan.h, best.subset);
    // Phase target from the first n_rf right singular vectors of the
    // selected channel (column j feeds subarray j).
    const auto f_opt = precoder::optimal_precoder(h_sel, config.n_rf);
    const CMatrix pinned = precoder::pin_block_phases(f_opt.f, part);
    realizations.push_back({std::move(chan.h),
                            static_cast<std::uint32_t>(best.subset.class_index),
                            precoder::rf_phase_pairs(pinned, part),
                            best.subset.indices});
  }

  // Two passes: find each task's dataset-wide max |h~| first, then encode.
  double sel_scale = 0.0, pre_scale = 0.0;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < l; ++j) {
      Rng rng(noise_seed(config.seed, i, j, l));
      const auto noisy =
          channel::add_channel_noise(realizations[i].h, config.train_snr_db, rng);
      sel_scale = std::max(sel_scale, noisy.h_tilde.cwiseAbs().maxCoeff());
      selection::AntennaSubset sub{realizations[i].subset, realizations[i].label};
      const CMatrix reduced = selection::apply_selection(noisy.h_tilde, sub);
      pre_scale = std::max(pre_scale, reduced.cwiseAbs().maxCoeff());
    }
  }
  if (sel_scale <= 0.0) sel_scale = 1.0;
  if (pre_scale <= 0.0) pre_scale = 1.0;

  DatasetPair out;
  out.selection = {TaskKind::kSelection, config.n_r_total, config.n_t, config,
                   sel_scale, {}};
  out.precoder = {TaskKind::kPrecoder, config.n_sel, config.n_t, config,
                  pre_scale, {}};
  out.selection.samples.reserve(static_cast<std::size_t>(n) * l);
  out.precoder.samples.reserve(static_cast<std::size_t>(n) * l);

  for (int i = 0; i < n; ++i) {
    const auto& lab = realizations[i];
    selection::AntennaSubset sub{lab.subset, lab.label};
    for (int j = 0; j < l; ++j) {
      Rng rng(noise_seed(config.seed, i, j, l));
      const auto noisy =
          channel::add_channel_noise(lab.h, config.train_snr_db, rng);
      Sample s_sel;
      s_sel.tensor = encode_channel(noisy.h_tilde, sel_scale);
      s_sel.label = lab.label;
      s_sel.realization = static_cast<std::uint32_t>(i);
      s_sel.copy = static_cast<std::uint32_t>(j);
      out.selection.samples.push_back(std::move(s_sel));

      Sample s_pre;
      s_pre.tensor =
          encode_channel(selection::apply_selection(noisy.h_tilde, sub), pre_scale);
      s_pre.target = lab.target;
      s_pre.realization = static_cast<std::uint32_t>(i);
      s_pre.copy = static_cast<std::uint32_t>(j);
      out.precoder.samples.push_back(std::move(s_pre));
    }
  }
  return out;
}

std::pair<Dataset, Dataset> split(const Dataset& d, double validation_fraction,
                                  Rng& rng) {
  if (validation_fraction <= 0.0 || validation_fraction >= 1.0) {
    throw contract_error("split: fraction must be in (0,1)");
  }
  std::set<std::uint32_t> ids;
  for (const auto& s : d.samples) ids.insert(s.realization);
  std::vector<std::uint32_t> order(ids.begin(), ids.end());
  rng.shuffle(order);
  const std::size_t n_val = static_cast<std::size_t>(
      std::llround(validation_fraction * static_cast<double>(order.size())));
  std::set<std::uint32_t> val_ids(order.begin(), order.begin() + n_val);

  Dataset train{d.task, d.rows, d.cols, d.config, d.norm_scale, {}};
  Dataset val = train;
  for (const auto& s : d.samples) {
    (val_ids.count(s.realization) ? val : train).samples.push_back(s);
  }
  return {std::move(train), std::move(val)};
}

std::string manifest_text(const Dataset& d) {
  const GenConfig& c = d.config;
  std::string m;
  m += "format=HBDS\n";
  m += "format_version=" + std::to_string(kFormatVersion) + "\n";
  m += "task=" + std::string(d.task == TaskKind::kSelection ? "selection" : "precoder") + "\n";
  m += "tensor_rows=" + std::to_string(d.rows) + "\n";
  m += "tensor_cols=" + std::to_string(d.cols) + "\n";
  m += "tensor_channels=3\n";
  m += "n_t=" + std::to_string(c.n_t) + "\n";
  m += "n_r_total=" + std::to_string(c.n_r_total) + "\n";
  m += "n_sel=" + std::to_string(c.n_sel) + "\n";
  m += "n_rf=" + std::to_string(c.n_rf) + "\n";
  m += "n_s=" + std::to_string(c.n_s) + "\n";
  m += "num_paths=" + std::to_string(c.num_paths) + "\n";
  m += "pathloss=" + fmt_double(c.pathloss) + "\n";
  m += "train_snr_db=" + fmt_double(c.train_snr_db) + "\n";
  m += "label_snr=" + fmt_double(c.label_snr) + "\n";
  m += "num_realizations=" + std::to_string(c.num_realizations) + "\n";
  m += "copies_per_realization=" + std::to_string(c.copies_per_realization) + "\n";
  m += "seed=" + std::to_string(c.seed) + "\n";
  m += "subset_budget=" + std::to_string(c.subset_budget) + "\n";
  m += "norm_scale=" + fmt_double(d.norm_scale) + "\n";
  m += "sample_count=" + std::to_string(d.samples.size()) + "\n";
  return m;
}

void save(const Dataset& d, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw format_error("cannot open " + path + " for writing");

  binio::write_bytes(os, kMagic, 4);
  binio::write_pod<std::uint32_t>(os, kFormatVersion);
  binio::write_string(os, manifest_text(d));
  binio::write_pod<std::uint32_t>(os, static_cast<std::uint32_t>(d.task));
  binio::write_pod<std::int32_t>(os, d.rows);
  binio::write_pod<std::int32_t>(os, d.cols);
  binio::write_pod<double>(os, d.norm_scale);

  const GenConfig& c = d.config;
  binio::write_pod<std::int32_t>(os, c.n_t);
  binio::write_pod<std::int32_t>(os, c.n_r_total);
  binio::write_pod<std::int32_t>(os, c.n_sel);
  binio::write_pod<std::int32_t>(os, c.n_rf);
  binio::write_pod<std::int32_t>(os, c.n_s);
  binio::write_pod<std::int32_t>(os, c.num_paths);
  binio::write_pod<double>(os, c.pathloss);
  binio::write_pod<double>(os, c.train_snr_db);
  binio::write_pod<double>(os, c.label_snr);
  binio::write_pod<std::int32_t>(os, c.num_realizations);
  binio::write_pod<std::int32_t>(os, c.copies_per_realization);
  binio::write_pod<std::uint64_t>(os, c.seed);
  binio::write_pod<std::uint64_t>(os, c.subset_budget);

  binio::write_pod<std::uint64_t>(os, d.samples.size());
  const std::size_t tensor_len = static_cast<std::size_t>(d.rows) * d.cols * 3;
  const std::size_t target_len =
      d.task == TaskKind::kPrecoder ? 2 * static_cast<std::size_t>(c.n_t) : 0;
  for (const auto& s : d.samples) {
    if (s.tensor.size() != tensor_len || s.target.size() != target_len) {
      throw contract_error("save: sample payload does not match manifest dims");
    }
    binio::write_pod<std::uint32_t>(os, s.realization);
    binio::write_pod<std::uint32_t>(os, s.copy);
    binio::write_bytes(os, s.tensor.data(), s.tensor.size() * sizeof(float));
    if (d.task == TaskKind::kSelection) {
      binio::write_pod<std::uint32_t>(os, s.label);
    } else {
      binio::write_bytes(os, s.target.data(), s.target.size() * sizeof(double));
    }
  }
  if (!os) throw format_error("write failure on " + path);
}

Dataset load(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw format_error("cannot open " + path);

  binio::expect_magic(is, kMagic, "HBDS");
  const auto version = binio::read_pod<std::uint32_t>(is, "version");
  if (version != kFormatVersion) {
    throw format_error("unsupported HBDS version " + std::to_string(version));
  }
  binio::read_string(is, "manifest");  // regenerated from the fields below

  Dataset d;
  d.task = static_cast<TaskKind>(binio::read_pod<std::uint32_t>(is, "task"));
  if (d.task != TaskKind::kSelection && d.task != TaskKind::kPrecoder) {
    throw format_error("unknown task kind in HBDS header");
  }
  d.rows = binio::read_pod<std::int32_t>(is, "rows");
  d.cols = binio::read_pod<std::int32_t>(is, "cols");
  d.norm_scale = binio::read_pod<double>(is, "norm scale");

  GenConfig& c = d.config;
  c.n_t = binio::read_pod<std::int32_t>(is, "n_t");
  c.n_r_total = binio::read_pod<std::int32_t>(is, "n_r_total");
  c.n_sel = binio::read_pod<std::int32_t>(is, "n_sel");
  c.n_rf = binio::read_pod<std::int32_t>(is, "n_rf");
  c.n_s = binio::read_pod<std::int32_t>(is, "n_s");
  c.num_paths = binio::read_pod<std::int32_t>(is, "num_paths");
  c.pathloss = binio::read_pod<double>(is, "pathloss");
  c.train_snr_db = binio::read_pod<double>(is, "train_snr_db");
  c.label_snr = binio::read_pod<double>(is, "label_snr");
  c.num_realizations = binio::read_pod<std::int32_t>(is, "num_realizations");
  c.copies_per_realization = binio::read_pod<std::int32_t>(is, "copies_per_realization");
  c.seed = binio::read_pod<std::uint64_t>(is, "seed");
  c.subset_budget = binio::read_pod<std::uint64_t>(is, "subset_budget");

  if (d.rows <= 0 || d.cols <= 0) throw format_error("bad tensor dims in HBDS header");
  const auto count = binio::read_pod<std::uint64_t>(is, "sample count");
  const std::size_t tensor_len = static_cast<std::size_t>(d.rows) * d.cols * 3;
  const std::size_t target_len =
      d.task == TaskKind::kPrecoder ? 2 * static_cast<std::size_t>(c.n_t) : 0;
  d.samples.resize(count);
  for (auto& s : d.samples) {
    s.realization = binio::read_pod<std::uint32_t>(is, "sample provenance");
    s.copy = binio::read_pod<std::uint32_t>(is, "sample provenance");
    s.tensor.resize(tensor_len);
    binio::read_bytes(is, s.tensor.data(), tensor_len * sizeof(float), "sample tensor");
    if (d.task == TaskKind::kSelection) {
      s.label = binio::read_pod<std::uint32_t>(is, "sample label");
    } else {
      s.target.resize(target_len);
      binio::read_bytes(is, s.target.data(), target_len * sizeof(double), "sample target");
    }
  }
  return d;
}

nn::TrainData to_train_data(const Dataset& d) {
  nn::TrainData out;
  const Eigen::Index features = static_cast<Eigen::Index>(d.rows) * d.cols * 3;
  const Eigen::Index n = static_cast<Eigen::Index>(d.samples.size());
  out.inputs.resize(features, n);
  if (d.task == TaskKind::kSelection) {
    out.labels.reserve(n);
  } else {
    out.targets.resize(2 * d.config.n_t, n);
  }
  for (Eigen::Index j = 0; j < n; ++j) {
    const Sample& s = d.samples[j];
    for (Eigen::Index i = 0; i < features; ++i) {
      out.inputs(i, j) = static_cast<nn::Scalar>(s.tensor[i]);
    }
    if (d.task == TaskKind::kSelection) {
      out.labels.push_back(s.label);
    } else {
      for (Eigen::Index i = 0; i < out.targets.rows(); ++i) {
        out.targets(i, j) = static_cast<nn::Scalar>(s.target[i]);
      }
    }
  }
  return out;
}

}  // namespace hybeam::dataset
