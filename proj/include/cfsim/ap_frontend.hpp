// SPDX-License-Identifier: Apache-2.0
//
// Stage one: per-AP linear MMSE detection, AWGN-equivalent link parameters
// and extrinsic bit-LLR computation.

#ifndef CFSIM_AP_FRONTEND_HPP
#define CFSIM_AP_FRONTEND_HPP

#include <array>
#include <utility>
#include <vector>

#include "cfsim/netmodel.hpp"
#include "cfsim/selection.hpp"
#include "cfsim/types.hpp"

namespace cfsim {

/// Receive filters and AWGN-equivalent parameters of one AP for its served
/// users. Soft estimates are normalized by 1/sqrt(eta_k), so alpha and
/// gamma2 describe the link against unit-energy constellation symbols.
struct LocalDetector {
  int ap = -1;
  std::vector<int> served;      // D_l, sorted
  std::vector<VecC> filters;    // w, aligned with served
  std::vector<cplx> alpha;      // w^H h_hat
  std::vector<double> gamma2;   // residual interference + noise variance

  int slot_of(int user) const;  // index into served, -1 if absent
};

/// Hermitian positive semidefinite solve A x = b with a pseudoinverse
/// fallback (eigenvalue tolerance 1e-12 * trace) when the factorization is
/// not usable.
VecC hermitian_solve(const MatC& a, const VecC& b);

/// Local MMSE receive filter for `user` at `ap` given the served set:
/// w = eta_k (sum_{i in D_l} eta_i (h_hat_il h_hat_il^H + C_kl) + sigma2 I)^+ h_hat_kl.
VecC local_mmse_filter(const NetworkRealization& rz,
                       const std::vector<int>& served, int ap, int user);

/// Filters for all served users of one AP from an explicit estimate grid;
/// the statistics path runs this over its own channel draws. `out` is
/// resized to match `served`.
void mmse_filters(const LinkGrid<VecC>& h_hat, const LinkGrid<MatC>& C,
                  const VecD& eta, double sigma2,
                  const std::vector<int>& served, int ap,
                  std::vector<VecC>& out);

/// Filters plus AWGN-equivalent parameters for every served user of one AP.
LocalDetector build_local_detector(const NetworkRealization& rz,
                                   const std::vector<int>& served, int ap);
std::vector<LocalDetector> build_local_detectors(const NetworkRealization& rz,
                                                 const ServiceMap& map);

/// x_hat = d * w^H y.
cplx local_soft_estimate(const VecC& w, const VecC& y, int d);

/// AWGN-equivalent amplitude and variance of a filtered link:
/// alpha = w^H h_hat, gamma2 = w^H Psi w - |alpha|^2 floored at 1e-12.
std::pair<cplx, double> awgn_params(const VecC& w, const VecC& h_hat,
                                    const MatC& psi);

/// Per-symbol prior over the four QPSK points from the two bit LLRs,
/// indexed by s = 2*b1 + b2. Sums to one.
std::array<double, 4> prior_from_llr(double lc1, double lc2);

/// Extrinsic LLR pair of a soft estimate against the AWGN-equivalent link
/// (complex-Gaussian likelihood, priors from lc), evaluated in the log
/// domain with exact pairwise max-star corrections. Outputs clamped to 30.
std::pair<double, double> bit_llr(cplx x_hat, cplx alpha, double gamma2,
                                  double lc1, double lc2);

inline constexpr double kLlrClamp = 30.0;
inline double clamp_llr(double v) {
  return v > kLlrClamp ? kLlrClamp : (v < -kLlrClamp ? -kLlrClamp : v);
}

/// Frame-level stage-one output: normalized soft estimates and per-AP
/// extrinsic LLRs (priors zero) for every served link.
struct SoftEstimateBatch {
  std::vector<std::vector<VecC>> x_hat;  // [ap][slot], tau_u entries
  std::vector<std::vector<VecD>> llr;    // [ap][slot], 2 * tau_u entries
};

/// Runs the local detectors over the data-phase observations
/// (y[ap] is N x tau_u).
SoftEstimateBatch detect_frames(const std::vector<LocalDetector>& detectors,
                                const std::vector<MatC>& y, const VecD& eta);

/// K x L matrix of mean |LLR| per frame; zero where the link is unserved.
MatD mean_abs_llr(const SoftEstimateBatch& batch,
                  const std::vector<LocalDetector>& detectors, int users,
                  int aps);

/// Diagnostic JSON dump of (alpha, gamma2) per served link.
std::string link_diagnostics_json(const std::vector<LocalDetector>& detectors);

}  // namespace cfsim

#endif  // CFSIM_AP_FRONTEND_HPP
