// SPDX-License-Identifier: Apache-2.0
//
// Dense complex linear algebra used by every other module. Backed by Eigen;
// this header pins the conventions (descending singular values, column phase
// normalization) the rest of the toolkit relies on.
#ifndef HYBEAM_LINALG_HPP
#define HYBEAM_LINALG_HPP

#include <Eigen/Dense>
#include <complex>
#include <vector>

namespace hybeam {

using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;

namespace linalg {

struct SvdResult {
  CMatrix u;                // left singular vectors, orthonormal columns
  Eigen::VectorXd s;        // singular values, descending, non-negative
  CMatrix v;                // right singular vectors, orthonormal columns
};

struct EigPair {
  double value;
  CVector vector;  // unit norm
};

// Checked product; throws contract_error on inner-dimension mismatch.
CMatrix matmul(const CMatrix& a, const CMatrix& b);

// Thin SVD (min(m,n) singular triplets) via Jacobi iteration. Deterministic:
// the same input always yields the same factors. Column phases are fixed by
// rotating each right singular vector so its largest-magnitude entry is real
// positive (ties broken by lowest row index); the matching left vector gets
// the same rotation, so u * diag(s) * v^H is unchanged.
SvdResult svd(const CMatrix& a);

// log2 det of a Hermitian PSD matrix. Eigenvalues in [-psd_slack, 0) are
// clamped to zero to absorb rounding in I + H F F^H H^H arguments; anything
// more negative, or a non-Hermitian input, throws contract_error.
double logdet_hermitian_psd(const CMatrix& a, double psd_slack = 1e-9);

// Dominant eigenpair of a Hermitian PSD matrix by power iteration.
// Terminates when ||A v - lambda v|| <= tol * ||A||_F; throws numeric_error
// carrying the iteration count if max_iter is exhausted first.
EigPair principal_eigvec_hermitian(const CMatrix& a, double tol = 1e-10,
                                   int max_iter = 10000);

double frobenius_norm(const CMatrix& a);

// True when ||a - a^H||_F <= tol * max(1, ||a||_F).
bool is_hermitian(const CMatrix& a, double tol = 1e-9);

}  // namespace linalg
}  // namespace hybeam

#endif  // HYBEAM_LINALG_HPP
