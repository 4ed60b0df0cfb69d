// SPDX-License-Identifier: Apache-2.0
//
// Receive-antenna subset enumeration: combinadic class <-> subset mapping,
// selection matrices, the exhaustive-search labeler and the random baseline.
#ifndef HYBEAM_SELECTION_HPP
#define HYBEAM_SELECTION_HPP

#include <cstdint>
#include <vector>

#include "hybeam/linalg.hpp"
#include "hybeam/rng.hpp"

namespace hybeam::selection {

struct AntennaSubset {
  std::vector<int> indices;     // strictly increasing, all < n_total
  std::uint64_t class_index = 0;  // lexicographic (combinadic) rank
};

// Exact C(n, k); throws budget_error when the value does not fit in 64 bits.
std::uint64_t subset_count(int n_total, int n_sel);

// Combinadic unranking: class_index -> the class_index-th k-subset in
// lexicographic order. Inverse of class_from_subset.
AntennaSubset subset_from_class(std::uint64_t class_index, int n_total, int n_sel);
std::uint64_t class_from_subset(const std::vector<int>& indices, int n_total);

// N_sel x N_total binary matrix with Q Q^H = I.
CMatrix build_selection_matrix(const AntennaSubset& subset, int n_total);

// Rows of h picked by the subset, in subset order. Equals Q * h exactly.
CMatrix apply_selection(const CMatrix& h, const AntennaSubset& subset);

// Rate used to rank subsets: the top-n_s right singular vectors of the
// selected channel with equal power snr/n_s, i.e.
// sum_{i<n_s} log2(1 + (snr/n_s) sigma_i^2). This is the unconstrained
// optimum for the selected channel, the same target the hybrid designs chase.
double subset_rate(const CMatrix& h_sel, double snr, int n_s);

struct BestSubsetResult {
  AntennaSubset subset;
  double rate = 0.0;
};

// Evaluates subset_rate for every one of the C(rows, n_sel) subsets and
// returns the maximizer; exact ties go to the smallest class index. Throws
// budget_error when the enumeration exceeds max_subsets.
BestSubsetResult exhaustive_best_subset(const CMatrix& h, int n_sel, double snr,
                                        int n_s,
                                        std::uint64_t max_subsets = 1000000);

// Uniform over all C(n_total, n_sel) subsets.
AntennaSubset random_subset(int n_total, int n_sel, Rng& rng);

}  // namespace hybeam::selection

#endif  // HYBEAM_SELECTION_HPP
