// SPDX-License-Identifier: Apache-2.0

#ifndef CFSIM_NETMODEL_HPP
#define CFSIM_NETMODEL_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "cfsim/rng.hpp"
#include "cfsim/types.hpp"

namespace cfsim {

/// Static scenario parameters. Powers in mW, distances in meters, linear
/// scale unless a name says dB.
struct ScenarioConfig {
  int aps = 16;            // L
  int antennas = 2;        // N, per AP (half-wavelength ULA)
  int users = 8;           // K, single-antenna
  double area_side_m = 1000.0;
  double height_delta_m = 10.0;  // AP/user height difference, folded into distance
  double carrier_hz = 2e9;
  double bandwidth_hz = 2e7;
  double noise_psd_dbm_hz = -174.0;
  double noise_figure_db = 5.0;
  int tau_c = 140;  // coherence block length, symbols
  int tau_u = 128;  // data symbols per block
  int tau_p = 12;   // pilot symbols per block, tau_c - tau_u
  double asd_deg = 15.0;       // angular standard deviation
  double shadow_std_db = 4.0;  // shadow fading standard deviation
  double p_max_mw = 100.0;     // per-user transmit power ceiling
  double fpc_exponent = 0.5;   // fractional power control exponent

  /// Thermal noise power over the configured band including the noise figure.
  double noise_power_mw() const;

  /// Throws std::invalid_argument on inconsistent parameters.
  void validate() const;
};

/// One large-scale network snapshot: geometry, fading statistics, pilot plan,
/// transmit powers and the current small-scale channel draw with its MMSE
/// estimates. Built in stages by the trial driver and treated as read-only
/// afterwards.
struct NetworkRealization {
  ScenarioConfig cfg;
  std::vector<Eigen::Vector2d> ap_pos;    // L
  std::vector<Eigen::Vector2d> user_pos;  // K
  MatD beta;                              // K x L, linear scale
  std::vector<int> pilot_of;              // K, pilot index in [0, tau_p)
  std::vector<std::vector<int>> users_on_pilot;  // tau_p lists
  std::vector<int> active_pilots;         // pilots with at least one user

  LinkGrid<MatC> R;       // spatial correlation, N x N Hermitian PSD
  LinkGrid<MatC> R_sqrt;  // cached square roots for channel draws
  LinkGrid<MatC> C;       // MMSE error covariance
  LinkGrid<MatC> estimator;  // sqrt(p tau_p) R Phi^-1, applied to pilot observations

  LinkGrid<VecC> h_true;  // current channel draw
  LinkGrid<VecC> h_hat;   // current MMSE estimates

  VecD eta;             // K uplink data (= pilot) powers, mW
  double sigma2 = 0.0;  // receiver noise power, mW
  bool phi_regularized = false;  // estimation used a ridged pilot Gram matrix
};

/// 3GPP-style pathloss at 3-D distance `distance_m` (no shadowing), in dB.
double pathloss_db(double distance_m);

/// Geometry and pilot plan only: APs on a regular grid when L is a perfect
/// square (uniform random otherwise), users uniform in the square, pilots
/// round-robin by user index.
NetworkRealization build_layout(const ScenarioConfig& cfg, std::uint64_t seed);

/// Fills `beta` with pathloss plus i.i.d. log-normal shadowing.
void large_scale_fading(NetworkRealization& rz, rng::Stream& rng);

/// Gaussian local scattering correlation matrix for a half-wavelength ULA.
/// Hermitian PSD with trace N * beta; negative eigenvalues from the
/// small-ASD closed form are clipped to zero. Throws on asd < 0.
MatC spatial_correlation(double beta, double angle_rad, double asd_rad, int n);

/// Fills R and R_sqrt from the geometry in `rz`.
void build_correlation(NetworkRealization& rz);

/// Precomputes per-link estimation operators and error covariances from the
/// pilot plan, powers and noise level. Requires eta and sigma2 to be set.
void prepare_estimation(NetworkRealization& rz);

/// Draws h ~ CN(0, R) independently across links into `out`.
void draw_channels(const NetworkRealization& rz, rng::Stream& rng,
                   LinkGrid<VecC>& out);
/// Same, into rz.h_true.
void draw_channels(NetworkRealization& rz, rng::Stream& rng);

/// Correlates pilots, applies the MMSE estimator. `h` is the channel draw the
/// pilot observations are formed from.
void mmse_estimate(const NetworkRealization& rz, const LinkGrid<VecC>& h,
                   rng::Stream& rng, LinkGrid<VecC>& h_hat_out);
/// Same, rz.h_true -> rz.h_hat.
void mmse_estimate(NetworkRealization& rz, rng::Stream& rng);

/// Versioned JSON snapshot for regression tests (geometry, beta, pilots,
/// powers; channel draw and estimates when `include_channels`).
std::string realization_snapshot(const NetworkRealization& rz,
                                 bool include_channels);

}  // namespace cfsim

#endif  // CFSIM_NETMODEL_HPP
