// SPDX-License-Identifier: Apache-2.0
#include "hybeam/linalg.hpp"

#include <cmath>

#include "hybeam/errors.hpp"

namespace hybeam::linalg {

CMatrix matmul(const CMatrix& a, const CMatrix& b) {
  if (a.cols() != b.rows()) {
    throw contract_error("matmul: inner dimensions differ (" +
                         std::to_string(a.cols()) + " vs " +
                         std::to_string(b.rows()) + ")");
  }
  return a * b;
}

double frobenius_norm(const CMatrix& a) { return a.norm(); }

bool is_hermitian(const CMatrix& a, double tol) {
  if (a.rows() != a.cols()) return false;
  const double scale = std::max(1.0, a.norm());
  return (a - a.adjoint()).norm() <= tol * scale;
}

SvdResult svd(const CMatrix& a) {
  if (a.size() == 0) throw contract_error("svd: empty matrix");
  Eigen::JacobiSVD<CMatrix> solver(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  SvdResult r{solver.matrixU(), solver.singularValues(), solver.matrixV()};

  // Phase convention: largest-magnitude entry of each right singular vector
  // made real positive, lowest row index on ties. Keeps label generation
  // reproducible across runs.
  for (Eigen::Index j = 0; j < r.v.cols(); ++j) {
    Eigen::Index p = 0;
    double best = -1.0;
    for (Eigen::Index i = 0; i < r.v.rows(); ++i) {
      const double m = std::abs(r.v(i, j));
      if (m > best + 1e-15) {
        best = m;
        p = i;
      }
    }
    const std::complex<double> z = r.v(p, j);
    if (std::abs(z) > 0.0) {
      const std::complex<double> rot = std::conj(z) / std::abs(z);
      r.v.col(j) *= rot;
      if (j < r.u.cols()) r.u.col(j) *= rot;
    }
  }
  return r;
}

double logdet_hermitian_psd(const CMatrix& a, double psd_slack) {
  if (a.rows() != a.cols()) {
    throw contract_error("logdet_hermitian_psd: matrix not square");
  }
  if (!is_hermitian(a)) {
    throw contract_error("logdet_hermitian_psd: matrix not Hermitian");
  }
  Eigen::SelfAdjointEigenSolver<CMatrix> es(a, Eigen::EigenvaluesOnly);
  const double scale = std::max(1.0, a.norm());
  double acc = 0.0;
  for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) {
    double ev = es.eigenvalues()(i);
    if (ev < 0.0) {
      if (ev < -psd_slack * scale) {
        throw contract_error("logdet_hermitian_psd: eigenvalue " +
                             std::to_string(ev) + " below PSD slack");
      }
      ev = 0.0;
    }
    if (ev == 0.0) return -std::numeric_limits<double>::infinity();
    acc += std::log2(ev);
  }
  return acc;
}

EigPair principal_eigvec_hermitian(const CMatrix& a, double tol, int max_iter) {
  if (a.rows() != a.cols() || a.size() == 0) {
    throw contract_error("principal_eigvec_hermitian: matrix not square");
  }
  if (!is_hermitian(a)) {
    throw contract_error("principal_eigvec_hermitian: matrix not Hermitian");
  }
  const Eigen::Index n = a.rows();
  const double anorm = a.norm();
  if (anorm == 0.0) {
    CVector v = CVector::Zero(n);
    v(0) = 1.0;
    return {0.0, v};
  }

  // Deterministic start with nonzero projection on any eigenvector.
  CVector v(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double t = static_cast<double>(i + 1);
    v(i) = std::complex<double>(1.0 + 0.11 * t, 0.07 * t);
  }
  v.normalize();

  double lambda = 0.0;
  for (int it = 0; it < max_iter; ++it) {
    CVector av = a * v;
    lambda = std::real(v.dot(av));
    if ((av - lambda * v).norm() <= tol * anorm) {
      // Same phase convention as svd(): largest entry real positive.
      Eigen::Index p = 0;
      v.cwiseAbs().maxCoeff(&p);
      if (std::abs(v(p)) > 0.0) v *= std::conj(v(p)) / std::abs(v(p));
      return {lambda, v};
    }
    const double nrm = av.norm();
    if (nrm == 0.0) {
      // Started in the null space of a PSD matrix: eigenvalue 0.
      return {0.0, v};
    }
    v = av / nrm;
  }
  throw numeric_error("principal_eigvec_hermitian: no convergence after " +
                          std::to_string(max_iter) + " iterations",
                      max_iter);
}

}  // namespace hybeam::linalg
