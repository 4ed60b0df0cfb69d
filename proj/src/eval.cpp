// SPDX-License-Identifier: Apache-2.0
#include "hybeam/eval.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "hybeam/channel.hpp"
#include "hybeam/dataset.hpp"
#include "hybeam/errors.hpp"
#include "hybeam/precoder.hpp"
#include "hybeam/selection.hpp"

namespace hybeam::eval {

namespace {

double now_s() {
  return std::chrono::duration<double>(
             std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

// Model input as the training pipeline would encode it: scaled, then
// squeezed through float32.
nn::Vector encode_for_model(const CMatrix& h, const nn::Network& net) {
  const auto raw = dataset::encode_channel(h, net.input_scale);
  nn::Vector x(raw.size());
  for (std::size_t i = 0; i < raw.size(); ++i) {
    x(static_cast<Eigen::Index>(i)) = static_cast<nn::Scalar>(raw[i]);
  }
  return x;
}

nn::Network& require_model(std::optional<nn::Network>& model, Method method,
                           const char* which, int rows, int cols) {
  if (!model) {
    throw config_error("method " + method_name(method) + " requires a " +
                       which + " model");
  }
  const nn::Shape3 in = model->input_shape();
  if (in.h != rows || in.w != cols || in.c != 3) {
    throw config_error("method " + method_name(method) + ": " + which +
                       " model expects input " + std::to_string(in.h) + "x" +
                       std::to_string(in.w) + "x" + std::to_string(in.c) +
                       " but the channel is " + std::to_string(rows) + "x" +
                       std::to_string(cols) + "x3");
  }
  return *model;
}

}  // namespace

std::string method_name(Method m) {
  switch (m) {
    case Method::kFullArrayOptimal: return "full";
    case Method::kOracleDasPhaseExtraction: return "oracle-pe";
    case Method::kCnnDasCnnRf: return "cnn";
    case Method::kCnnDasSic: return "sic";
    case Method::kRasCnnRf: return "ras-cnn";
    case Method::kRasSic: return "ras-sic";
  }
  throw config_error("unknown method enum value");
}

Method parse_method(const std::string& name) {
  for (Method m : {Method::kFullArrayOptimal, Method::kOracleDasPhaseExtraction,
                   Method::kCnnDasCnnRf, Method::kCnnDasSic, Method::kRasCnnRf,
                   Method::kRasSic}) {
    if (method_name(m) == name) return m;
  }
  throw config_error("unknown method '" + name +
                     "' (expected full, oracle-pe, cnn, sic, ras-cnn, ras-sic)");
}

void EvalConfig::validate() const {
  if (n_t <= 0 || n_r_total <= 0 || n_sel <= 0 || n_rf <= 0 || n_s <= 0) {
    throw config_error("eval config: all dimensions must be positive");
  }
  if (n_sel > n_r_total) throw config_error("eval config: n_sel > n_r_total");
  if (n_s > n_rf) throw config_error("eval config: n_s > n_rf");
  if (n_t % n_rf != 0) throw config_error("eval config: n_t not divisible by n_rf");
  if (n_rf > std::min(n_sel, n_t)) {
    throw config_error("eval config: n_rf exceeds selected-channel rank bound");
  }
  if (snr_db_grid.empty()) throw config_error("eval config: empty snr grid");
  if (trials < 1) throw config_error("eval config: trials must be >= 1");
  if (methods.empty()) throw config_error("eval config: no methods requested");
}

PipelineOutcome run_pipeline(const CMatrix& h, Method method, double snr,
                             const EvalConfig& config, Models& models,
                             std::uint64_t ras_seed) {
  const precoder::PartitionSpec part(config.n_t, config.n_rf);
  const double t0 = now_s();
  PipelineOutcome out;

  if (method == Method::kFullArrayOptimal) {
    const auto f_opt = precoder::optimal_precoder(h, config.n_s);
    out.rate = precoder::spectral_efficiency(h, f_opt.f, snr, config.n_s);
    out.elapsed_s = now_s() - t0;
    return out;
  }

  // Selection stage.
  selection::AntennaSubset subset;
  switch (method) {
    case Method::kOracleDasPhaseExtraction:
      subset = selection::exhaustive_best_subset(h, config.n_sel, snr,
                                                 config.n_s, config.subset_budget)
                   .subset;
      break;
    case Method::kCnnDasCnnRf:
    case Method::kCnnDasSic: {
      nn::Network& net = require_model(models.cnn_as, method, "selection",
                                       config.n_r_total, config.n_t);
      const auto [cls, probs] = nn::predict_class(net, encode_for_model(h, net));
      (void)probs;
      subset = selection::subset_from_class(cls, config.n_r_total, config.n_sel);
      break;
    }
    case Method::kRasCnnRf:
    case Method::kRasSic: {
      Rng rng(ras_seed);
      subset = selection::random_subset(config.n_r_total, config.n_sel, rng);
      break;
    }
    default:
      break;
  }
  const CMatrix h_sel = selection::apply_selection(h, subset);

  // Precoder stage.
  switch (method) {
    case Method::kOracleDasPhaseExtraction: {
      const auto f_opt = precoder::optimal_precoder(h_sel, config.n_rf);
      const CMatrix f_rf = precoder::phase_extraction_rf(f_opt.f, part);
      const CMatrix f_bb =
          precoder::waterfilled_bb(h_sel, f_rf, config.n_s, config.n_rf, snr);
      out.rate = precoder::spectral_efficiency(h_sel, f_rf * f_bb, snr, config.n_s);
      break;
    }
    case Method::kCnnDasCnnRf:
    case Method::kRasCnnRf: {
      nn::Network& net = require_model(models.cnn_rf, method, "precoder",
                                       config.n_sel, config.n_t);
      const nn::Vector pred = nn::predict_regression(net, encode_for_model(h_sel, net));
      std::vector<double> pairs(pred.data(), pred.data() + pred.size());
      const CMatrix f_rf = precoder::rf_from_phase_pairs(pairs, part);
      const CMatrix f_bb =
          precoder::waterfilled_bb(h_sel, f_rf, config.n_s, config.n_rf, snr);
      out.rate = precoder::spectral_efficiency(h_sel, f_rf * f_bb, snr, config.n_s);
      break;
    }
    case Method::kCnnDasSic:
    case Method::kRasSic: {
      const auto hp = precoder::sic_precoder(h_sel, part, snr, config.n_s);
      out.rate =
          precoder::spectral_efficiency(h_sel, hp.f_rf * hp.f_bb, snr, config.n_s);
      break;
    }
    default:
      break;
  }
  out.elapsed_s = now_s() - t0;
  return out;
}

EvalResult sweep(const EvalConfig& config_in, Models& models) {
  EvalConfig config = config_in;
  std::sort(config.snr_db_grid.begin(), config.snr_db_grid.end());
  config.validate();
  const auto tx = channel::ArrayGeometry::from_total(config.n_t);
  const auto rx = channel::ArrayGeometry::from_total(config.n_r_total);

  EvalResult result;
  result.methods = config.methods;
  result.snr_db = config.snr_db_grid;
  const std::size_t n_m = config.methods.size();
  const std::size_t n_s = config.snr_db_grid.size();

  // rates[m][s][t]; aggregated after the trial loop so the reduction order
  // is fixed no matter how trials are scheduled.
  std::vector<std::vector<std::vector<double>>> rates(
      n_m, std::vector<std::vector<double>>(n_s,
                                            std::vector<double>(config.trials)));
  std::vector<double> time_sum(n_m, 0.0);

  for (int t = 0; t < config.trials; ++t) {
    const std::uint64_t trial_seed = derive_seed(config.seed, t);
    Rng rng(trial_seed);
    const auto paths = channel::draw_paths(rng, config.num_paths);
    const auto chan = channel::assemble_channel(tx, rx, paths, config.pathloss);
    for (std::size_t mi = 0; mi < n_m; ++mi) {
      const std::uint64_t ras_seed = derive_seed(trial_seed, 0xA5000 + mi);
      for (std::size_t si = 0; si < n_s; ++si) {
        const double snr = std::pow(10.0, config.snr_db_grid[si] / 10.0);
        PipelineOutcome o;
        try {
          o = run_pipeline(chan.h, config.methods[mi], snr, config, models, ras_seed);
        } catch (const numeric_error& e) {
          throw numeric_error(std::string(e.what()) + " (trial " +
                              std::to_string(t) + ")");
        }
        rates[mi][si][t] = o.rate;
        time_sum[mi] += o.elapsed_s;
      }
    }
  }

  result.cells.assign(n_m, std::vector<Cell>(n_s));
  result.mean_time_s.assign(n_m, 0.0);
  for (std::size_t mi = 0; mi < n_m; ++mi) {
    for (std::size_t si = 0; si < n_s; ++si) {
      const auto& r = rates[mi][si];
      double mean = 0.0;
      for (double v : r) mean += v;
      mean /= r.size();
      double ss = 0.0;
      for (double v : r) ss += (v - mean) * (v - mean);
      result.cells[mi][si] = {mean,
                              r.size() > 1 ? std::sqrt(ss / (r.size() - 1)) : 0.0,
                              static_cast<int>(r.size())};
    }
    result.mean_time_s[mi] =
        config.measure_time ? time_sum[mi] / (config.trials * n_s) : 0.0;
  }
  return result;
}

void emit_csv(const EvalResult& result, std::ostream& os) {
  os << "method,snr_db,mean_rate_bps_hz,std_rate,trials,mean_time_s\n";
  for (std::size_t mi = 0; mi < result.methods.size(); ++mi) {
    for (std::size_t si = 0; si < result.snr_db.size(); ++si) {
      const Cell& c = result.cells[mi][si];
      os << method_name(result.methods[mi]) << ',' << fmt(result.snr_db[si])
         << ',' << fmt(c.mean_rate) << ',' << fmt(c.std_rate) << ','
         << c.trials << ',' << fmt(result.mean_time_s[mi]) << '\n';
    }
  }
}

void emit_csv(const EvalResult& result, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw format_error("cannot open " + path + " for writing");
  emit_csv(result, os);
  if (!os) throw format_error("write failure on " + path);
}

}  // namespace hybeam::eval
