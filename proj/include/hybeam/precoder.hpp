// SPDX-License-Identifier: Apache-2.0
//
// Precoder design for the partially connected hybrid architecture: the
// unconstrained SVD optimum, block-diagonal analog precoders under the
// equal-magnitude (C1) and power (C2) constraints, the equivalent-channel
// baseband stage, spectral efficiency, and the SIC baseline.
#ifndef HYBEAM_PRECODER_HPP
#define HYBEAM_PRECODER_HPP

#include <vector>

#include "hybeam/linalg.hpp"

namespace hybeam::precoder {

// Contiguous subarray mapping: RF chain i drives antenna rows
// [i*m, (i+1)*m) with m = n_t / n_rf.
struct PartitionSpec {
  int n_t = 0;
  int n_rf = 0;

  PartitionSpec(int n_t_, int n_rf_);
  int m() const { return n_t / n_rf; }
};

struct HybridPrecoder {
  CMatrix f_rf;  // n_t x n_rf, block diagonal, |entry| = 1/sqrt(m) on support
  CMatrix f_bb;  // n_rf x n_s, scaled so ||f_rf f_bb||_F = n_rf
};

struct OptimalPrecoder {
  CMatrix f;  // n_t x n_s, semi-unitary, phase-fixed columns
  bool rank_deficient = false;  // columns beyond rank(h) span the null space
};

// Top-n_s right singular vectors of h.
OptimalPrecoder optimal_precoder(const CMatrix& h, int n_s);

// log2 det(I + (snr/n_s) H F F^H H^H), bits/s/Hz. snr is a linear ratio.
double spectral_efficiency(const CMatrix& h, const CMatrix& f, double snr, int n_s);

// Per-entry phase extraction of f_opt on the block support: antenna i in
// subarray j gets (1/sqrt(m)) exp(i*arg(f_opt(i, j))); a zero entry maps to
// phase 0. Minimizes the Frobenius distance to f_opt under C1 on the fixed
// block support.
CMatrix phase_extraction_rf(const CMatrix& f_opt, const PartitionSpec& spec);

// Baseband precoder from the equivalent channel h * f_rf: top-n_s right
// singular vectors, then scaled so the C2 power constraint holds with
// equality.
CMatrix equivalent_channel_bb(const CMatrix& h, const CMatrix& f_rf, int n_s,
                              int n_rf);

// Baseband precoder with waterfilling power allocation across the streams of
// the equivalent channel at the given linear snr, then scaled so the C2 power
// constraint holds with equality. Reduces to equivalent_channel_bb stream
// directions with snr-dependent per-stream weights; at low snr power
// concentrates on the dominant stream.
CMatrix waterfilled_bb(const CMatrix& h, const CMatrix& f_rf, int n_s,
                       int n_rf, double snr);

// Successive interference cancellation baseline: subarrays are optimized one
// at a time via the dominant eigenvector of the interference-whitened Gram
// matrix of their antenna columns, then the baseband stage closes the design.
HybridPrecoder sic_precoder(const CMatrix& h, const PartitionSpec& spec,
                            double snr, int n_s);

// || f_opt - f_rf f_bb ||_F^2
double precoder_distance(const CMatrix& f_opt, const HybridPrecoder& hp);

// (cos, sin) pair per transmit antenna encoding the analog phases of f_opt's
// block-support entries; the regression network's training target.
std::vector<double> rf_phase_pairs(const CMatrix& f_opt, const PartitionSpec& spec);

// Rotate each column of f_opt by a unit scalar so the entry feeding the
// first antenna of its subarray has phase zero. The achieved rate is
// invariant (a per-column global phase of the analog stage is absorbed by
// the baseband stage computed from the equivalent channel), but pinning
// makes phase targets a stable function of the channel instead of
// inheriting the SVD sign convention.
CMatrix pin_block_phases(const CMatrix& f_opt, const PartitionSpec& spec);

// Rebuild the block-diagonal analog precoder from 2*n_t (cos, sin) values.
// Pairs are renormalized to unit modulus; an all-zero pair maps to phase 0.
CMatrix rf_from_phase_pairs(const std::vector<double>& pairs,
                            const PartitionSpec& spec);

// True when hp has exact zeros off the block support, C1 within tol and
// ||f_rf f_bb||_F = n_rf within tol.
bool satisfies_constraints(const HybridPrecoder& hp, const PartitionSpec& spec,
                           double tol = 1e-9);

}  // namespace hybeam::precoder

#endif  // HYBEAM_PRECODER_HPP
