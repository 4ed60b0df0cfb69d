// SPDX-License-Identifier: Apache-2.0
//
// Clustered Saleh-Valenzuela channel generation over uniform planar arrays,
// plus the element-wise noisy copies used to build training data.
#ifndef HYBEAM_CHANNEL_HPP
#define HYBEAM_CHANNEL_HPP

#include <vector>

#include "hybeam/linalg.hpp"
#include "hybeam/rng.hpp"

namespace hybeam::channel {

// Half-wavelength uniform planar array. Element n sits at grid position
// (w, h) with w = n % width (fast axis) and h = n / width.
struct ArrayGeometry {
  int width = 0;
  int height = 0;

  int total() const { return width * height; }

  // Factors n into the most square grid possible (height <= width).
  static ArrayGeometry from_total(int n);
};

struct PathParams {
  std::complex<double> gain;    // eta_k, CN(0,1)
  double aod_azimuth = 0.0;     // theta_k, uniform [-pi, pi)
  double aod_elevation = 0.0;   // uniform [0, pi]
  double aoa_azimuth = 0.0;     // mu_k
  double aoa_elevation = 0.0;
};

struct ChannelRealization {
  CMatrix h;  // N_R x N_T
  std::vector<PathParams> paths;
  double pathloss = 1.0;
};

struct NoisySample {
  CMatrix h_tilde;
  double noise_variance = 0.0;  // per complex element
};

// Unit-norm steering vector: element (w,h) carries phase
// pi * (w sin(az) sin(el) + h cos(el)).
CVector array_response_upa(const ArrayGeometry& geom, double azimuth,
                           double elevation);

std::vector<PathParams> draw_paths(Rng& rng, int num_paths);

// H = sqrt(N_T N_R / (pathloss K)) * sum_k eta_k a_R(mu_k) a_T(theta_k)^H
ChannelRealization assemble_channel(const ArrayGeometry& tx,
                                    const ArrayGeometry& rx,
                                    const std::vector<PathParams>& paths,
                                    double pathloss = 1.0);

// Element-wise complex Gaussian noise with per-element variance
// (||h||_F^2 / (rows*cols)) * 10^(-snr_db/10). snr_db = +inf returns h
// unchanged with zero variance.
NoisySample add_channel_noise(const CMatrix& h, double snr_db, Rng& rng);

// y = sqrt(p_avg) H F_RF F_BB s + n with n ~ CN(0, noise_variance) i.i.d.
CVector received_signal(const CMatrix& h, const CMatrix& f_rf,
                        const CMatrix& f_bb, const CVector& s, double p_avg,
                        double noise_variance, Rng& rng);

}  // namespace hybeam::channel

#endif  // HYBEAM_CHANNEL_HPP
