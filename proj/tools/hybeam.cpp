// SPDX-License-Identifier: Apache-2.0
//
// hybeam: data generation, training, evaluation and benchmarking for joint
// CNN antenna selection + partially connected hybrid precoding.
#include <CLI11.hpp>
#include <Eigen/Core>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <thread>

#include "hybeam/channel.hpp"
#include "hybeam/dataset.hpp"
#include "hybeam/errors.hpp"
#include "hybeam/eval.hpp"
#include "hybeam/nn.hpp"
#include "hybeam/nn_io.hpp"
#include "hybeam/precoder.hpp"
#include "hybeam/selection.hpp"

namespace {

using namespace hybeam;

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitNumeric = 3;
constexpr int kExitIo = 4;

std::uint64_t default_seed() {
  if (const char* env = std::getenv("HBLAB_SEED")) {
    return std::strtoull(env, nullptr, 10);
  }
  return 0;
}

// "lo:step:hi" or a comma-separated list of dB values.
std::vector<double> parse_snr_grid(const std::string& spec) {
  std::vector<double> grid;
  const auto c1 = spec.find(':');
  if (c1 != std::string::npos) {
    const auto c2 = spec.find(':', c1 + 1);
    if (c2 == std::string::npos) {
      throw config_error("snr grid: expected lo:step:hi, got '" + spec + "'");
    }
    const double lo = std::stod(spec.substr(0, c1));
    const double step = std::stod(spec.substr(c1 + 1, c2 - c1 - 1));
    const double hi = std::stod(spec.substr(c2 + 1));
    if (step <= 0.0 || hi < lo) throw config_error("snr grid: bad range '" + spec + "'");
    for (double v = lo; v <= hi + 1e-9; v += step) grid.push_back(v);
  } else {
    std::size_t pos = 0;
    while (pos < spec.size()) {
      const auto comma = spec.find(',', pos);
      const auto chunk = spec.substr(pos, comma == std::string::npos ? std::string::npos
                                                                     : comma - pos);
      grid.push_back(std::stod(chunk));
      if (comma == std::string::npos) break;
      pos = comma + 1;
    }
  }
  if (grid.empty()) throw config_error("snr grid: empty specification");
  return grid;
}

std::vector<eval::Method> parse_methods(const std::string& list) {
  std::vector<eval::Method> methods;
  std::size_t pos = 0;
  while (pos <= list.size()) {
    const auto comma = list.find(',', pos);
    const auto name = list.substr(pos, comma == std::string::npos ? std::string::npos
                                                                  : comma - pos);
    if (!name.empty()) methods.push_back(eval::parse_method(name));
    if (comma == std::string::npos) break;
    pos = comma + 1;
  }
  if (methods.empty()) throw config_error("no methods requested");
  return methods;
}

struct GenArgs {
  dataset::GenConfig config;
  double label_snr_db = 0.0;
  std::string out_dir = "data";
};

int cmd_gen_data(const GenArgs& args) {
  dataset::GenConfig config = args.config;
  config.label_snr = std::pow(10.0, args.label_snr_db / 10.0);
  config.validate();

  namespace fs = std::filesystem;
  fs::create_directories(args.out_dir);
  const std::string sel_path = args.out_dir + "/selection.hbds";
  const std::string pre_path = args.out_dir + "/precoder.hbds";
  try {
    const auto pair = dataset::generate(config);
    dataset::save(pair.selection, sel_path);
    dataset::save(pair.precoder, pre_path);
    std::ofstream(args.out_dir + "/selection.manifest.txt", std::ios::binary)
        << dataset::manifest_text(pair.selection);
    std::ofstream(args.out_dir + "/precoder.manifest.txt", std::ios::binary)
        << dataset::manifest_text(pair.precoder);
    std::cout << "wrote " << pair.selection.samples.size() << " selection and "
              << pair.precoder.samples.size() << " precoder samples to "
              << args.out_dir << "\n";
  } catch (...) {
    std::error_code ec;
    fs::remove(sel_path, ec);
    fs::remove(pre_path, ec);
    throw;
  }
  return kExitOk;
}

struct TrainArgs {
  std::string task = "as";
  std::string data_path;
  std::string out_path = "model.hbnn";
  std::string loss_csv;  // defaults to out_path + ".loss.csv"
  nn::TrainOptions opts;
  double val_fraction = 0.3;
};

int cmd_train(const TrainArgs& args) {
  const auto data = dataset::load(args.data_path);
  const dataset::TaskKind want = args.task == "as" ? dataset::TaskKind::kSelection
                                                   : dataset::TaskKind::kPrecoder;
  if (data.task != want) {
    throw config_error("dataset " + args.data_path + " holds the " +
                       (data.task == dataset::TaskKind::kSelection ? "selection"
                                                                   : "precoder") +
                       " task but --task " + args.task + " was requested");
  }

  nn::NetworkSpec spec;
  nn::Task task;
  if (want == dataset::TaskKind::kSelection) {
    const auto classes = selection::subset_count(data.config.n_r_total,
                                                 data.config.n_sel);
    spec = nn::NetworkSpec::cnn_14(data.rows, data.cols, 3, true,
                                   static_cast<int>(classes));
    task = nn::Task::kClassification;
  } else {
    spec = nn::NetworkSpec::cnn_14(data.rows, data.cols, 3, false,
                                   2 * data.config.n_t);
    task = nn::Task::kRegression;
  }

  Rng split_rng(derive_seed(args.opts.seed, 0x59171));
  const auto [train_set, val_set] = dataset::split(data, args.val_fraction, split_rng);
  std::cout << "training on " << train_set.samples.size() << " samples, validating on "
            << val_set.samples.size() << "\n";

  nn::Network net(spec, derive_seed(args.opts.seed, 0x11171));
  net.input_scale = data.norm_scale;
  const auto hist = nn::train(net, task, dataset::to_train_data(train_set),
                              dataset::to_train_data(val_set), args.opts);
  nn::save_model(net, args.out_path);

  const std::string loss_path =
      args.loss_csv.empty() ? args.out_path + ".loss.csv" : args.loss_csv;
  std::ofstream os(loss_path, std::ios::binary);
  if (!os) throw format_error("cannot open " + loss_path + " for writing");
  os << "epoch,train_loss,val_loss\n";
  char buf[96];
  for (std::size_t e = 0; e < hist.train_loss.size(); ++e) {
    std::snprintf(buf, sizeof buf, "%zu,%.12g,%.12g\n", e, hist.train_loss[e],
                  hist.val_loss[e]);
    os << buf;
  }
  std::cout << "wrote " << args.out_path << " and " << loss_path << "\n";
  return kExitOk;
}

struct EvalArgs {
  eval::EvalConfig config;
  std::string methods = "full,oracle-pe,sic,ras-sic";
  std::string snr = "-15:5:10";
  std::string model_as, model_rf;
  std::string out_path = "eval.csv";
  bool paper_scale = false;
};

void apply_paper_scale(int& n_t, int& n_r_total, int& n_sel, int& n_rf) {
  n_t = 144;
  n_r_total = 16;
  n_sel = 8;
  n_rf = 4;
}

int cmd_eval(const EvalArgs& args) {
  eval::EvalConfig config = args.config;
  if (args.paper_scale) {
    apply_paper_scale(config.n_t, config.n_r_total, config.n_sel, config.n_rf);
  }
  config.methods = parse_methods(args.methods);
  config.snr_db_grid = parse_snr_grid(args.snr);

  eval::Models models;
  if (!args.model_as.empty()) models.cnn_as = nn::load_model(args.model_as);
  if (!args.model_rf.empty()) models.cnn_rf = nn::load_model(args.model_rf);
  for (auto m : config.methods) {
    if ((m == eval::Method::kCnnDasCnnRf || m == eval::Method::kCnnDasSic) &&
        !models.cnn_as) {
      throw config_error("method " + eval::method_name(m) +
                         " requires --model-as");
    }
    if ((m == eval::Method::kCnnDasCnnRf || m == eval::Method::kRasCnnRf) &&
        !models.cnn_rf) {
      throw config_error("method " + eval::method_name(m) +
                         " requires --model-rf");
    }
  }

  const auto result = eval::sweep(config, models);
  eval::emit_csv(result, args.out_path);

  // Ordering summary: methods ranked by mean rate at each grid point.
  for (std::size_t si = 0; si < result.snr_db.size(); ++si) {
    std::vector<std::size_t> order(result.methods.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return result.cells[a][si].mean_rate > result.cells[b][si].mean_rate;
    });
    std::printf("snr %+6.1f dB: ", result.snr_db[si]);
    for (std::size_t i = 0; i < order.size(); ++i) {
      std::printf("%s%s (%.3f)", i ? " > " : "",
                  eval::method_name(result.methods[order[i]]).c_str(),
                  result.cells[order[i]][si].mean_rate);
    }
    std::printf("\n");
  }
  std::cout << "wrote " << args.out_path << "\n";
  return kExitOk;
}

struct BenchArgs {
  int n_t = 36, n_r_total = 16, n_sel = 8, n_rf = 4, n_s = 4;
  int trials = 100;
  std::uint64_t seed = 0;
  std::string model_as, model_rf;
  std::string out_path = "bench.csv";
  bool paper_scale = false;
};

int cmd_bench(const BenchArgs& args) {
  int n_t = args.n_t, n_r = args.n_r_total, n_sel = args.n_sel, n_rf = args.n_rf;
  if (args.paper_scale) apply_paper_scale(n_t, n_r, n_sel, n_rf);

  eval::EvalConfig config;
  config.n_t = n_t;
  config.n_r_total = n_r;
  config.n_sel = n_sel;
  config.n_rf = n_rf;
  config.n_s = args.n_s;
  config.trials = args.trials;
  config.seed = args.seed;
  config.snr_db_grid = {0.0};
  config.methods = {eval::Method::kCnnDasCnnRf, eval::Method::kCnnDasSic};
  config.validate();

  // Timing depends on the architecture, not the weights, so random
  // initialization stands in when no trained model is supplied.
  eval::Models models;
  if (!args.model_as.empty()) {
    models.cnn_as = nn::load_model(args.model_as);
  } else {
    const auto classes = selection::subset_count(n_r, n_sel);
    models.cnn_as = nn::Network(
        nn::NetworkSpec::cnn_14(n_r, n_t, 3, true, static_cast<int>(classes)),
        args.seed);
  }
  if (!args.model_rf.empty()) {
    models.cnn_rf = nn::load_model(args.model_rf);
  } else {
    models.cnn_rf =
        nn::Network(nn::NetworkSpec::cnn_14(n_sel, n_t, 3, false, 2 * n_t),
                    derive_seed(args.seed, 1));
  }

  const auto tx = channel::ArrayGeometry::from_total(n_t);
  const auto rx = channel::ArrayGeometry::from_total(n_r);
  struct Row {
    std::string method;
    int trials;
    double mean_s, median_s;
  };
  std::vector<Row> rows;

  auto time_method = [&](eval::Method m, int trials) {
    std::vector<double> times(trials);
    for (int t = 0; t < trials; ++t) {
      Rng rng(derive_seed(args.seed, t));
      const auto paths = channel::draw_paths(rng, 4);
      const auto chan = channel::assemble_channel(tx, rx, paths, 1.0);
      times[t] = eval::run_pipeline(chan.h, m, 1.0, config, models,
                                    derive_seed(args.seed, 0xBE))
                     .elapsed_s;
    }
    std::sort(times.begin(), times.end());
    double mean = 0.0;
    for (double v : times) mean += v;
    mean /= trials;
    rows.push_back({eval::method_name(m), trials, mean, times[trials / 2]});
  };

  time_method(eval::Method::kCnnDasCnnRf, args.trials);
  time_method(eval::Method::kCnnDasSic, args.trials);

  // Exhaustive-selection reference when the subset count is enumerable.
  try {
    selection::subset_count(n_r, n_sel);  // may overflow for silly dims
    const int ref_trials = std::min(args.trials, 5);
    std::vector<double> times(ref_trials);
    for (int t = 0; t < ref_trials; ++t) {
      Rng rng(derive_seed(args.seed, t));
      const auto paths = channel::draw_paths(rng, 4);
      const auto chan = channel::assemble_channel(tx, rx, paths, 1.0);
      const auto t0 = std::chrono::steady_clock::now();
      selection::exhaustive_best_subset(chan.h, n_sel, 1.0, args.n_s,
                                        config.subset_budget);
      times[t] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
                     .count();
    }
    std::sort(times.begin(), times.end());
    double mean = 0.0;
    for (double v : times) mean += v;
    rows.push_back({"exhaustive-selection", ref_trials, mean / ref_trials,
                    times[ref_trials / 2]});
  } catch (const budget_error&) {
    // dims too large to enumerate; skip the reference row
  }

  std::ofstream os(args.out_path, std::ios::binary);
  if (!os) throw format_error("cannot open " + args.out_path + " for writing");
  os << "method,trials,mean_time_s,median_time_s\n";
  for (const auto& r : rows) {
    char buf[128];
    std::snprintf(buf, sizeof buf, "%s,%d,%.9g,%.9g\n", r.method.c_str(), r.trials,
                  r.mean_s, r.median_s);
    os << buf;
    std::cout << buf;
  }
  std::cout << "wrote " << args.out_path << "\n";
  return kExitOk;
}

int cmd_show_manifest(const std::string& path) {
  std::cout << dataset::manifest_text(dataset::load(path));
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"joint CNN antenna selection and partially connected hybrid precoding"};
  app.require_subcommand(1);
  int threads = static_cast<int>(std::thread::hardware_concurrency());
  app.add_option("--threads", threads,
                 "worker threads (1 guarantees bit-reproducible training)");

  GenArgs gen;
  gen.config.seed = default_seed();
  auto* sc_gen = app.add_subcommand("gen-data", "generate HBDS training datasets");
  sc_gen->add_option("--nt", gen.config.n_t, "transmit antennas");
  sc_gen->add_option("--nr", gen.config.n_r_total, "receive antennas");
  sc_gen->add_option("--nsel", gen.config.n_sel, "selected receive antennas");
  sc_gen->add_option("--nrf", gen.config.n_rf, "transmit RF chains");
  sc_gen->add_option("--ns", gen.config.n_s, "data streams");
  sc_gen->add_option("--paths", gen.config.num_paths, "propagation paths K");
  sc_gen->add_option("--epsilon", gen.config.pathloss, "pathloss");
  sc_gen->add_option("--train-snr-db", gen.config.train_snr_db,
                     "noise level of the L imperfect copies");
  sc_gen->add_option("--label-snr-db", gen.label_snr_db,
                     "snr used when ranking subsets for labels");
  sc_gen->add_option("--n", gen.config.num_realizations, "channel realizations N");
  sc_gen->add_option("--l", gen.config.copies_per_realization, "noisy copies L");
  sc_gen->add_option("--seed", gen.config.seed, "generator seed");
  sc_gen->add_option("--budget", gen.config.subset_budget, "subset enumeration budget");
  sc_gen->add_option("--out", gen.out_dir, "output directory");

  TrainArgs train;
  train.opts.seed = default_seed();
  auto* sc_train = app.add_subcommand("train", "train a CNN on an HBDS dataset");
  sc_train->add_option("--task", train.task, "as (selection) or rf (precoder)")
      ->check(CLI::IsMember({"as", "rf"}));
  sc_train->add_option("--data", train.data_path, "HBDS dataset path")->required();
  sc_train->add_option("--epochs", train.opts.epochs, "training epochs");
  sc_train->add_option("--batch", train.opts.batch_size, "mini-batch size");
  sc_train->add_option("--lr", train.opts.learning_rate, "SGD learning rate");
  sc_train->add_option("--momentum", train.opts.momentum, "SGD momentum");
  sc_train->add_option("--weight-decay", train.opts.weight_decay,
                       "L2 penalty on weights");
  sc_train->add_option("--val-fraction", train.val_fraction, "validation fraction");
  sc_train->add_option("--seed", train.opts.seed, "training seed");
  sc_train->add_option("--out", train.out_path, "output HBNN model path");
  sc_train->add_option("--loss-csv", train.loss_csv, "per-epoch loss CSV path");

  EvalArgs ev;
  ev.config.seed = default_seed();
  auto* sc_eval = app.add_subcommand("eval", "Monte Carlo spectral-efficiency sweep");
  sc_eval->add_option("--nt", ev.config.n_t, "transmit antennas");
  sc_eval->add_option("--nr", ev.config.n_r_total, "receive antennas");
  sc_eval->add_option("--nsel", ev.config.n_sel, "selected receive antennas");
  sc_eval->add_option("--nrf", ev.config.n_rf, "transmit RF chains");
  sc_eval->add_option("--ns", ev.config.n_s, "data streams");
  sc_eval->add_option("--paths", ev.config.num_paths, "propagation paths K");
  sc_eval->add_option("--epsilon", ev.config.pathloss, "pathloss");
  sc_eval->add_option("--trials", ev.config.trials, "Monte Carlo trials");
  sc_eval->add_option("--seed", ev.config.seed, "trial seed");
  sc_eval->add_option("--methods", ev.methods, "comma list: full,oracle-pe,cnn,sic,ras-cnn,ras-sic");
  sc_eval->add_option("--snr", ev.snr, "dB grid, lo:step:hi or comma list");
  sc_eval->add_option("--model-as", ev.model_as, "HBNN selection model");
  sc_eval->add_option("--model-rf", ev.model_rf, "HBNN precoder model");
  sc_eval->add_option("--out", ev.out_path, "results CSV path");
  sc_eval->add_flag("--paper-scale", ev.paper_scale, "preset N_T=144 N_R=16 N_r=8 N_RF=4");
  sc_eval->add_flag("!--no-timing", ev.config.measure_time,
                    "report zero times for byte-reproducible output");

  BenchArgs bench;
  bench.seed = default_seed();
  auto* sc_bench = app.add_subcommand("bench", "online latency benchmark");
  sc_bench->add_option("--nt", bench.n_t, "transmit antennas");
  sc_bench->add_option("--nr", bench.n_r_total, "receive antennas");
  sc_bench->add_option("--nsel", bench.n_sel, "selected receive antennas");
  sc_bench->add_option("--nrf", bench.n_rf, "transmit RF chains");
  sc_bench->add_option("--ns", bench.n_s, "data streams");
  sc_bench->add_option("--trials", bench.trials, "timed channels");
  sc_bench->add_option("--seed", bench.seed, "channel seed");
  sc_bench->add_option("--model-as", bench.model_as, "HBNN selection model");
  sc_bench->add_option("--model-rf", bench.model_rf, "HBNN precoder model");
  sc_bench->add_option("--out", bench.out_path, "timing CSV path");
  sc_bench->add_flag("--paper-scale", bench.paper_scale, "preset N_T=144 N_R=16 N_r=8 N_RF=4");

  std::string manifest_path;
  auto* sc_manifest = app.add_subcommand("show-manifest", "print an HBDS manifest");
  sc_manifest->add_option("file", manifest_path, "HBDS dataset path")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    Eigen::setNbThreads(std::max(1, threads));
    if (sc_gen->parsed()) return cmd_gen_data(gen);
    if (sc_train->parsed()) return cmd_train(train);
    if (sc_eval->parsed()) return cmd_eval(ev);
    if (sc_bench->parsed()) return cmd_bench(bench);
    if (sc_manifest->parsed()) return cmd_show_manifest(manifest_path);
  } catch (const numeric_error& e) {
    std::cerr << "numeric failure: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const format_error& e) {
    std::cerr << "file error: " << e.what() << "\n";
    return kExitIo;
  } catch (const std::ios_base::failure& e) {
    std::cerr << "i/o error: " << e.what() << "\n";
    return kExitIo;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  }
  return kExitOk;
}
