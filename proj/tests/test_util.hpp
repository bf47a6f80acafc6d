// SPDX-License-Identifier: Apache-2.0
//
// Shared helpers for the unit and acceptance suites.

#ifndef CFSIM_TEST_UTIL_HPP
#define CFSIM_TEST_UTIL_HPP

#include <cmath>
#include <cstdint>

#include "cfsim/ap_frontend.hpp"
#include "cfsim/harness.hpp"
#include "cfsim/netmodel.hpp"
#include "cfsim/rng.hpp"
#include "cfsim/selection.hpp"

namespace cfsim::test {

/// Builds geometry, fading, correlation, initial access, FPC powers, noise
/// calibration and channel estimation for one trial-like setup. Returns the
/// realization (with eta/sigma2 set) and the initial-access map.
inline std::pair<NetworkRealization, ServiceMap> make_scenario(
    const ScenarioConfig& cfg, std::uint64_t seed, double snr_db,
    double r_ldpc = 0.5) {
  NetworkRealization rz =
      build_layout(cfg, rng::substream_seed(seed, 0, "layout"));
  rng::Stream shadow = rng::make_stream(seed, 0, "shadow");
  large_scale_fading(rz, shadow);
  build_correlation(rz);
  ServiceMap initial = initial_access(rz.beta, cfg.tau_p);
  rz.eta = assign_powers_fpc(rz.beta, initial, cfg.p_max_mw, cfg.fpc_exponent);
  rz.sigma2 = calibrate_snr(rz.beta, rz.eta, r_ldpc, snr_db);
  prepare_estimation(rz);
  rng::Stream ch = rng::make_stream(seed, 0, "channel");
  draw_channels(rz, ch);
  rng::Stream pn = rng::make_stream(seed, 0, "pilot_noise");
  mmse_estimate(rz, pn);
  return {std::move(rz), std::move(initial)};
}

inline ScenarioConfig desk_config(int aps = 16, int antennas = 2,
                                  int users = 8) {
  ScenarioConfig cfg;
  cfg.aps = aps;
  cfg.antennas = antennas;
  cfg.users = users;
  return cfg;
}

/// Direct-domain evaluation of the extrinsic LLR pair: literal four-term
/// likelihood/prior sums, rescaled by the peak exponent (an exact operation
/// on the ratio), independent of the log-domain production path.
inline std::pair<double, double> bit_llr_direct(cplx x_hat, cplx alpha,
                                                double gamma2, double lc1,
                                                double lc2) {
  lc1 = clamp_llr(lc1);
  lc2 = clamp_llr(lc2);
  double p1[2] = {1.0 / (1.0 + std::exp(lc1)), 1.0 / (1.0 + std::exp(-lc1))};
  double p2[2] = {1.0 / (1.0 + std::exp(lc2)), 1.0 / (1.0 + std::exp(-lc2))};

  double expo[4], prior[4];
  double peak = -1e300;
  for (int s = 0; s < 4; ++s) {
    int b1 = (s >> 1) & 1, b2 = s & 1;
    cplx diff = x_hat - alpha * qpsk_point(s);
    expo[s] = -std::norm(diff) / gamma2;
    prior[s] = p1[b1] * p2[b2];
    peak = std::max(peak, expo[s]);
  }
  double w[4];
  for (int s = 0; s < 4; ++s) w[s] = std::exp(expo[s] - peak) * prior[s];

  double l1 = std::log((w[2] + w[3]) / (w[0] + w[1])) - lc1;
  double l2 = std::log((w[1] + w[3]) / (w[0] + w[2])) - lc2;
  return {clamp_llr(l1), clamp_llr(l2)};
}

/// Exhaustive 4-cycle search: two bit columns sharing two checks.
inline bool matrix_has_4cycle(const LdpcCode& code) {
  for (int a = 0; a < code.n; ++a) {
    for (int b = a + 1; b < code.n; ++b) {
      int shared = 0;
      for (int ca : code.cols[a])
        for (int cb : code.cols[b])
          if (ca == cb) ++shared;
      if (shared >= 2) return true;
    }
  }
  return false;
}

}  // namespace cfsim::test

#endif  // CFSIM_TEST_UTIL_HPP
