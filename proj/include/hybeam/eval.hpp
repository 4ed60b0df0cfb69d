// SPDX-License-Identifier: Apache-2.0
//
// Monte Carlo comparison harness: every method sees the same channel per
// trial (paired design), rates come from the selected-subset log-det
// expression, and per-method online latency is measured alongside.
#ifndef HYBEAM_EVAL_HPP
#define HYBEAM_EVAL_HPP

#include <optional>
#include <string>
#include <vector>

#include "hybeam/linalg.hpp"
#include "hybeam/nn.hpp"

namespace hybeam::eval {

enum class Method {
  kFullArrayOptimal,          // "full": unconstrained optimum on the full array
  kOracleDasPhaseExtraction,  // "oracle-pe": exhaustive selection + phase extraction
  kCnnDasCnnRf,               // "cnn": CNN selection + CNN analog precoder
  kCnnDasSic,                 // "sic": CNN selection + SIC precoder
  kRasCnnRf,                  // "ras-cnn": random selection + CNN precoder
  kRasSic,                    // "ras-sic": random selection + SIC precoder
};

std::string method_name(Method m);
Method parse_method(const std::string& name);  // throws config_error

struct EvalConfig {
  int n_t = 16;
  int n_r_total = 8;
  int n_sel = 4;
  int n_rf = 4;
  int n_s = 4;
  int num_paths = 4;
  double pathloss = 1.0;
  std::vector<double> snr_db_grid = {-15, -10, -5, 0, 5, 10};
  int trials = 100;
  std::uint64_t seed = 0;
  std::vector<Method> methods;
  std::uint64_t subset_budget = 1000000;
  bool measure_time = true;  // when false all reported times are exactly 0

  void validate() const;
};

// Trained (or deliberately untrained, for timing) networks. Methods that do
// not use a CNN stage run with both fields empty.
struct Models {
  std::optional<nn::Network> cnn_as;
  std::optional<nn::Network> cnn_rf;
};

struct PipelineOutcome {
  double rate = 0.0;     // bits/s/Hz
  double elapsed_s = 0.0;  // selection + precoder stages only
};

// One channel, one method, one linear snr. ras_seed pins the random-selection
// draw so a trial's RAS subset is identical across the snr grid.
PipelineOutcome run_pipeline(const CMatrix& h, Method method, double snr,
                             const EvalConfig& config, Models& models,
                             std::uint64_t ras_seed);

struct Cell {
  double mean_rate = 0.0;
  double std_rate = 0.0;
  int trials = 0;
};

struct EvalResult {
  std::vector<Method> methods;
  std::vector<double> snr_db;
  std::vector<std::vector<Cell>> cells;   // [method][snr]
  std::vector<double> mean_time_s;        // [method]
};

EvalResult sweep(const EvalConfig& config, Models& models);

// Header `method,snr_db,mean_rate_bps_hz,std_rate,trials,mean_time_s`, one
// row per (method, snr) in method-list order then ascending grid order.
// Byte-identical on re-emission of the same result.
void emit_csv(const EvalResult& result, std::ostream& os);
void emit_csv(const EvalResult& result, const std::string& path);

}  // namespace hybeam::eval

#endif  // HYBEAM_EVAL_HPP
