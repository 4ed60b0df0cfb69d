// SPDX-License-Identifier: Apache-2.0
#include "hybeam/channel.hpp"

#include <cmath>

#include "hybeam/errors.hpp"

namespace hybeam::channel {

ArrayGeometry ArrayGeometry::from_total(int n) {
  if (n <= 0) throw contract_error("ArrayGeometry: element count must be positive");
  int h = static_cast<int>(std::sqrt(static_cast<double>(n)));
  while (h > 1 && n % h != 0) --h;
  return {n / h, h};
}

CVector array_response_upa(const ArrayGeometry& geom, double azimuth,
                           double elevation) {
  const int n = geom.total();
  if (n <= 0) throw contract_error("array_response_upa: invalid geometry");
  const double scale = 1.0 / std::sqrt(static_cast<double>(n));
  const double kx = M_PI * std::sin(azimuth) * std::sin(elevation);
  const double kz = M_PI * std::cos(elevation);
  CVector a(n);
  for (int idx = 0; idx < n; ++idx) {
    const int w = idx % geom.width;
    const int h = idx / geom.width;
    const double phase = kx * w + kz * h;
    a(idx) = scale * std::complex<double>(std::cos(phase), std::sin(phase));
  }
  return a;
}

std::vector<PathParams> draw_paths(Rng& rng, int num_paths) {
  if (num_paths < 1) throw contract_error("draw_paths: need at least one path");
  std::vector<PathParams> paths(num_paths);
  for (auto& p : paths) {
    p.gain = rng.complex_gaussian();
    p.aod_azimuth = rng.uniform(-M_PI, M_PI);
    p.aod_elevation = rng.uniform(0.0, M_PI);
    p.aoa_azimuth = rng.uniform(-M_PI, M_PI);
    p.aoa_elevation = rng.uniform(0.0, M_PI);
  }
  return paths;
}

ChannelRealization assemble_channel(const ArrayGeometry& tx,
                                    const ArrayGeometry& rx,
                                    const std::vector<PathParams>& paths,
                                    double pathloss) {
  if (paths.empty()) throw contract_error("assemble_channel: no paths");
  if (pathloss <= 0.0) throw contract_error("assemble_channel: pathloss must be positive");
  const int nt = tx.total();
  const int nr = rx.total();
  const double scale =
      std::sqrt(static_cast<double>(nt) * nr / (pathloss * paths.size()));
  CMatrix h = CMatrix::Zero(nr, nt);
  for (const auto& p : paths) {
    const CVector ar = array_response_upa(rx, p.aoa_azimuth, p.aoa_elevation);
    const CVector at = array_response_upa(tx, p.aod_azimuth, p.aod_elevation);
    h.noalias() += (scale * p.gain) * (ar * at.adjoint());
  }
  return {std::move(h), paths, pathloss};
}

NoisySample add_channel_noise(const CMatrix& h, double snr_db, Rng& rng) {
  if (std::isinf(snr_db) && snr_db > 0) return {h, 0.0};
  if (!std::isfinite(snr_db)) throw contract_error("add_channel_noise: snr_db must be finite or +inf");
  const double sig_power = h.squaredNorm() / static_cast<double>(h.size());
  const double var = sig_power * std::pow(10.0, -snr_db / 10.0);
  const double amp = std::sqrt(var);
  CMatrix out = h;
  // Row-major draw order so the noise stream is layout-independent.
  for (Eigen::Index i = 0; i < out.rows(); ++i)
    for (Eigen::Index j = 0; j < out.cols(); ++j)
      out(i, j) += amp * rng.complex_gaussian();
  return {std::move(out), var};
}

CVector received_signal(const CMatrix& h, const CMatrix& f_rf,
                        const CMatrix& f_bb, const CVector& s, double p_avg,
                        double noise_variance, Rng& rng) {
  if (h.cols() != f_rf.rows() || f_rf.cols() != f_bb.rows() ||
      f_bb.cols() != s.size()) {
    throw contract_error("received_signal: dimension chain mismatch");
  }
  if (p_avg < 0.0) throw contract_error("received_signal: p_avg must be >= 0");
  CVector y = std::sqrt(p_avg) * (h * (f_rf * (f_bb * s)));
  const double amp = std::sqrt(noise_variance);
  for (Eigen::Index i = 0; i < y.size(); ++i) y(i) += amp * rng.complex_gaussian();
  return y;
}

}  // namespace hybeam::channel
