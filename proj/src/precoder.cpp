// SPDX-License-Identifier: Apache-2.0
#include "hybeam/precoder.hpp"

#include <cmath>

#include "hybeam/errors.hpp"

namespace hybeam::precoder {

PartitionSpec::PartitionSpec(int n_t_, int n_rf_) : n_t(n_t_), n_rf(n_rf_) {
  if (n_t <= 0 || n_rf <= 0 || n_t % n_rf != 0) {
    throw contract_error("PartitionSpec: n_t must be a positive multiple of n_rf");
  }
}

OptimalPrecoder optimal_precoder(const CMatrix& h, int n_s) {
  if (n_s <= 0 || n_s > std::min(h.rows(), h.cols())) {
    throw contract_error("optimal_precoder: n_s out of range");
  }
  const auto dec = linalg::svd(h);
  OptimalPrecoder out;
  out.f = dec.v.leftCols(n_s);
  const double sigma_max = dec.s(0);
  out.rank_deficient = dec.s(n_s - 1) <= 1e-12 * std::max(1.0, sigma_max);
  return out;
}

double spectral_efficiency(const CMatrix& h, const CMatrix& f, double snr, int n_s) {
  if (f.rows() != h.cols()) {
    throw contract_error("spectral_efficiency: f.rows() != h.cols()");
  }
  if (snr < 0.0) throw contract_error("spectral_efficiency: snr must be >= 0");
  const CMatrix hf = h * f;
  CMatrix arg = CMatrix::Identity(h.rows(), h.rows());
  arg.noalias() += (snr / n_s) * (hf * hf.adjoint());
  // (I + X X^H) drifts off Hermitian only by rounding; resymmetrize.
  arg = 0.5 * (arg + arg.adjoint()).eval();
  return linalg::logdet_hermitian_psd(arg);
}

CMatrix phase_extraction_rf(const CMatrix& f_opt, const PartitionSpec& spec) {
  if (f_opt.rows() != spec.n_t || f_opt.cols() < spec.n_rf) {
    throw contract_error("phase_extraction_rf: f_opt shape incompatible with partition");
  }
  const int m = spec.m();
  const double amp = 1.0 / std::sqrt(static_cast<double>(m));
  CMatrix f_rf = CMatrix::Zero(spec.n_t, spec.n_rf);
  for (int j = 0; j < spec.n_rf; ++j) {
    for (int i = j * m; i < (j + 1) * m; ++i) {
      const double phase = std::arg(f_opt(i, j));  // arg(0) == 0
      f_rf(i, j) = amp * std::complex<double>(std::cos(phase), std::sin(phase));
    }
  }
  return f_rf;
}

CMatrix equivalent_channel_bb(const CMatrix& h, const CMatrix& f_rf, int n_s,
                              int n_rf) {
  if (h.cols() != f_rf.rows() || f_rf.cols() != n_rf) {
    throw contract_error("equivalent_channel_bb: shape chain mismatch");
  }
  const CMatrix h_eq = h * f_rf;  // N_r x n_rf
  if (n_s > std::min(h_eq.rows(), h_eq.cols())) {
    throw contract_error("equivalent_channel_bb: n_s exceeds equivalent channel rank bound");
  }
  const auto dec = linalg::svd(h_eq);
  CMatrix f_bb = dec.v.leftCols(n_s);
  const double norm = (f_rf * f_bb).norm();
  if (norm > 0.0) f_bb *= static_cast<double>(n_rf) / norm;
  return f_bb;
}

CMatrix waterfilled_bb(const CMatrix& h, const CMatrix& f_rf, int n_s,
                       int n_rf, double snr) {
  if (h.cols() != f_rf.rows() || f_rf.cols() != n_rf) {
    throw contract_error("waterfilled_bb: shape chain mismatch");
  }
  if (!(snr > 0.0)) {
    throw contract_error("waterfilled_bb: snr must be positive");
  }
  const CMatrix h_eq = h * f_rf;  // N_r x n_rf
  if (n_s > std::min(h_eq.rows(), h_eq.cols())) {
    throw contract_error("waterfilled_bb: n_s exceeds equivalent channel rank bound");
  }
  const auto dec = linalg::svd(h_eq);
  // Waterfill sum_i max(0, mu - noise/sigma_i^2) = n_rf^2 by bisection on mu.
  const double noise = static_cast<double>(n_s) / snr;
  const double budget = static_cast<double>(n_rf) * n_rf;
  const double s0 = dec.s(0);
  if (!(s0 > 0.0)) return equivalent_channel_bb(h, f_rf, n_s, n_rf);
  double lo = 0.0, hi = budget + noise / (s0 * s0) + 1.0;
  for (int it = 0; it < 200; ++it) {
    const double mu = 0.5 * (lo + hi);
    double total = 0.0;
    for (int i = 0; i < n_s; ++i) {
      const double s = dec.s(i);
      if (s > 0.0) total += std::max(0.0, mu - noise / (s * s));
    }
    (total > budget ? hi : lo) = mu;
  }
  const double mu = 0.5 * (lo + hi);
  CMatrix f_bb = CMatrix::Zero(n_rf, n_s);
  for (int i = 0; i < n_s; ++i) {
    const double s = dec.s(i);
    if (s > 0.0) {
      const double p = std::max(0.0, mu - noise / (s * s));
      f_bb.col(i) = dec.v.col(i) * std::sqrt(p);
    }
  }
  const double norm = (f_rf * f_bb).norm();
  if (norm > 0.0) f_bb *= static_cast<double>(n_rf) / norm;
  return f_bb;
}

HybridPrecoder sic_precoder(const CMatrix& h, const PartitionSpec& spec,
                            double snr, int n_s) {
  if (h.cols() != spec.n_t) {
    throw contract_error("sic_precoder: channel columns != n_t");
  }
  const int m = spec.m();
  const double amp = 1.0 / std::sqrt(static_cast<double>(m));
  const Eigen::Index n_r = h.rows();

  CMatrix f_rf = CMatrix::Zero(spec.n_t, spec.n_rf);
  // Accumulated covariance of the already-designed subarrays; whitening by
  // its inverse makes each step maximize the residual rate contribution.
  CMatrix cov = CMatrix::Identity(n_r, n_r);
  for (int j = 0; j < spec.n_rf; ++j) {
    const CMatrix h_j = h.middleCols(j * m, m);  // N_r x m
    const CMatrix whitened = cov.llt().solve(h_j);
    CMatrix gram = h_j.adjoint() * whitened;  // m x m
    gram = 0.5 * (gram + gram.adjoint()).eval();
    const auto eig = linalg::principal_eigvec_hermitian(gram, 1e-10, 20000);
    CVector f_j(m);
    for (int i = 0; i < m; ++i) {
      const double phase = std::arg(eig.vector(i));
      f_j(i) = amp * std::complex<double>(std::cos(phase), std::sin(phase));
    }
    f_rf.block(j * m, j, m, 1) = f_j;
    const CVector effective = h_j * f_j;
    cov.noalias() += (snr / n_s) * (effective * effective.adjoint());
  }
  HybridPrecoder hp;
  hp.f_rf = std::move(f_rf);
  hp.f_bb = equivalent_channel_bb(h, hp.f_rf, n_s, spec.n_rf);
  return hp;
}

double precoder_distance(const CMatrix& f_opt, const HybridPrecoder& hp) {
  const CMatrix prod = hp.f_rf * hp.f_bb;
  if (prod.rows() != f_opt.rows() || prod.cols() != f_opt.cols()) {
    throw contract_error("precoder_distance: shape mismatch");
  }
  return (f_opt - prod).squaredNorm();
}

std::vector<double> rf_phase_pairs(const CMatrix& f_opt, const PartitionSpec& spec) {
  if (f_opt.rows() != spec.n_t || f_opt.cols() < spec.n_rf) {
    throw contract_error("rf_phase_pairs: f_opt shape incompatible with partition");
  }
  const int m = spec.m();
  std::vector<double> pairs(2 * spec.n_t);
  for (int j = 0; j < spec.n_rf; ++j) {
    for (int i = j * m; i < (j + 1) * m; ++i) {
      const double phase = std::arg(f_opt(i, j));
      pairs[2 * i] = std::cos(phase);
      pairs[2 * i + 1] = std::sin(phase);
    }
  }
  return pairs;
}

CMatrix pin_block_phases(const CMatrix& f_opt, const PartitionSpec& spec) {
  if (f_opt.rows() != spec.n_t || f_opt.cols() < spec.n_rf) {
    throw contract_error("pin_block_phases: f_opt shape incompatible with partition");
  }
  const int m = spec.m();
  CMatrix pinned = f_opt;
  for (int j = 0; j < spec.n_rf; ++j) {
    const std::complex<double> lead = f_opt(j * m, j);
    const double mag = std::abs(lead);
    if (mag > 0.0) pinned.col(j) *= std::conj(lead) / mag;
  }
  return pinned;
}

CMatrix rf_from_phase_pairs(const std::vector<double>& pairs,
                            const PartitionSpec& spec) {
  if (pairs.size() != static_cast<std::size_t>(2 * spec.n_t)) {
    throw contract_error("rf_from_phase_pairs: expected 2*n_t values");
  }
  const int m = spec.m();
  const double amp = 1.0 / std::sqrt(static_cast<double>(m));
  CMatrix f_rf = CMatrix::Zero(spec.n_t, spec.n_rf);
  for (int i = 0; i < spec.n_t; ++i) {
    double c = pairs[2 * i], s = pairs[2 * i + 1];
    const double norm = std::hypot(c, s);
    if (norm > 0.0) {
      c /= norm;
      s /= norm;
    } else {
      c = 1.0;
      s = 0.0;
    }
    f_rf(i, i / m) = amp * std::complex<double>(c, s);
  }
  return f_rf;
}

bool satisfies_constraints(const HybridPrecoder& hp, const PartitionSpec& spec,
                           double tol) {
  if (hp.f_rf.rows() != spec.n_t || hp.f_rf.cols() != spec.n_rf) return false;
  const int m = spec.m();
  const double amp = 1.0 / std::sqrt(static_cast<double>(m));
  for (int i = 0; i < spec.n_t; ++i) {
    for (int j = 0; j < spec.n_rf; ++j) {
      const std::complex<double> z = hp.f_rf(i, j);
      if (j == i / m) {
        if (std::abs(std::abs(z) - amp) > tol) return false;  // C1
      } else if (z != std::complex<double>(0.0, 0.0)) {
        return false;  // exact zeros off the block support
      }
    }
  }
  return std::abs((hp.f_rf * hp.f_bb).norm() - spec.n_rf) <= tol;  // C2
}

}  // namespace hybeam::precoder
