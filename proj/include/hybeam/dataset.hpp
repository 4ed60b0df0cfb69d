// SPDX-License-Identifier: Apache-2.0
//
// Training-data generation for both networks and the HBDS on-disk container.
// Each clean channel realization is labeled once (best subset class and
// analog-phase regression target), then emits L noisy encoded copies that all
// carry the clean-channel label.
#ifndef HYBEAM_DATASET_HPP
#define HYBEAM_DATASET_HPP

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "hybeam/linalg.hpp"
#include "hybeam/nn.hpp"
#include "hybeam/rng.hpp"

namespace hybeam::dataset {

enum class TaskKind : std::uint32_t { kSelection = 0, kPrecoder = 1 };

struct GenConfig {
  int n_t = 16;        // transmit antennas
  int n_r_total = 8;   // receive antennas before selection
  int n_sel = 4;       // selected receive antennas
  int n_rf = 4;        // transmit RF chains
  int n_s = 4;         // data streams
  int num_paths = 4;
  double pathloss = 1.0;
  double train_snr_db = 15.0;  // noise level of the L imperfect copies
  double label_snr = 1.0;      // linear ratio used when ranking subsets
  int num_realizations = 100;  // N
  int copies_per_realization = 100;  // L
  std::uint64_t seed = 0;
  std::uint64_t subset_budget = 1000000;

  void validate() const;  // throws config_error on cross-field violations
};

// 3-channel encoding of one (possibly noisy) channel matrix:
// channel 0 = |h|, channel 1 = Re h, channel 2 = Im h, entries divided by
// `scale` before the float32 cast. Layout (row, col, channel), channel
// fastest — the nn input layout.
std::vector<float> encode_channel(const CMatrix& h, double scale);

struct Sample {
  std::vector<float> tensor;       // rows*cols*3
  std::uint32_t label = 0;         // selection task only
  std::vector<double> target;      // precoder task only, 2*n_t values
  std::uint32_t realization = 0;   // provenance
  std::uint32_t copy = 0;
};

struct Dataset {
  TaskKind task = TaskKind::kSelection;
  int rows = 0;  // n_r_total for selection, n_sel for precoder
  int cols = 0;  // n_t
  GenConfig config;
  double norm_scale = 1.0;  // dataset-wide max |h~| used for normalization
  std::vector<Sample> samples;
};

struct DatasetPair {
  Dataset selection;
  Dataset precoder;
};

// Draws N realizations, labels each on the clean channel, then emits L noisy
// copies per realization into both task datasets. Deterministic given
// config.seed.
DatasetPair generate(const GenConfig& config);

// Split by realization index so noisy siblings never straddle the split.
// Returns (train, validation); validation gets round(fraction * N)
// realizations.
std::pair<Dataset, Dataset> split(const Dataset& d, double validation_fraction,
                                  Rng& rng);

void save(const Dataset& d, const std::string& path);
Dataset load(const std::string& path);

// Canonical key=value manifest block, identical for identical datasets.
std::string manifest_text(const Dataset& d);

// Bridge into the nn module's column-per-sample layout.
nn::TrainData to_train_data(const Dataset& d);

}  // namespace hybeam::dataset

#endif  // HYBEAM_DATASET_HPP
