// SPDX-License-Identifier: Apache-2.0
//
// Stage two: large-scale fading decoding at the CPU. Statistics are sample
// averages over fresh small-scale realizations of a fixed large-scale setup;
// combining weights, SINR/SE and the outer detection/decoding loop follow.

#ifndef CFSIM_CPU_STAGE_HPP
#define CFSIM_CPU_STAGE_HPP

#include <cstdint>
#include <utility>
#include <vector>

#include "cfsim/ap_frontend.hpp"
#include "cfsim/codec.hpp"
#include "cfsim/netmodel.hpp"
#include "cfsim/selection.hpp"
#include "cfsim/types.hpp"

namespace cfsim {

/// Per-user combining statistics on the restricted AP set M_k (entries for
/// deselected APs are implicitly zero; *_full accessors expand them).
struct LsfdStats {
  std::vector<std::vector<int>> active;   // M_k, sorted
  std::vector<VecC> g;                    // E{w^H h}, per serving AP
  std::vector<std::vector<MatC>> ups1;    // [k][i]: E{(w^H h_i)(w^H h_i)^H}
  std::vector<VecD> ups2;                 // E{||w||^2}, per serving AP
  int samples_used = 0;

  VecC g_full(int user, int L) const;
  MatC ups1_full(int user, int interferer, int L) const;
  VecD ups2_full(int user, int L) const;
};

LsfdStats estimate_lsfd_stats(const NetworkRealization& rz,
                              const ServiceMap& map, int n_stat,
                              std::uint64_t seed);

struct LsfdWeights {
  std::vector<VecC> a;  // restricted to M_k, aligned with `active`
  std::vector<std::vector<int>> active;
  bool regularized = false;

  VecC full(int user, int L) const;  // zeros at deselected APs
};

/// a_k = (sum_{i in B_k} eta_i Ups1_ki + sigma2 diag(Ups2_k))^-1 g_k,
/// solved on the restricted set; ridge fallback on a singular system.
LsfdWeights lsfd_weights(const LsfdStats& stats, const ServiceMap& map,
                         const VecD& eta, double sigma2);

/// SINR and spectral efficiency of one user from the statistics and its
/// weight vector. SINR clamped at zero; SE = (1 - tau_p/tau_c) log2(1+SINR).
std::pair<double, double> sinr_se(const LsfdStats& stats, const VecC& a_k,
                                  int user, const VecD& eta, double sigma2,
                                  int tau_p, int tau_c);

/// Combined stream x~ = sum_l d a* x_hat plus the AWGN-equivalent
/// parameters of the fused link: alpha~ = sum_l a* alpha_l and gamma2~ from
/// the frame sample average of |x~|^2 minus |alpha~|^2.
struct CombinedLink {
  VecC x_tilde;       // tau_u symbols
  cplx alpha{0.0, 0.0};
  double gamma2 = 1.0;
  bool empty = false;  // no serving AP; zero stream emitted
};

CombinedLink combine_user(const SoftEstimateBatch& batch,
                          const std::vector<LocalDetector>& detectors,
                          const LsfdWeights& weights, const ServiceMap& map,
                          int user);

struct IddConfig {
  int n_outer = 3;
  int n_inner = 20;
  bool keep_history = false;  // per-iteration hard bits and extrinsic LLRs
};

struct IddUserResult {
  std::vector<std::uint8_t> info_bits;  // after the final outer iteration
  bool converged = false;
  int outer_used = 0;
  std::vector<std::vector<std::uint8_t>> info_history;  // per outer iteration
  std::vector<VecD> extrinsic_history;  // decoder extrinsic per iteration
};

/// Outer loop for one user: detector LLRs with current priors, LDPC
/// decoding, decoder extrinsic fed back as priors. Iteration 1 runs with
/// zero priors.
IddUserResult run_idd_user(const LdpcCode& code, const CombinedLink& link,
                           const IddConfig& cfg);

/// All users; `links` is indexed by user.
std::vector<IddUserResult> run_idd(const LdpcCode& code,
                                   const std::vector<CombinedLink>& links,
                                   const IddConfig& cfg);

/// Debug histogram (16 bins over [-clamp, clamp]) of a set of LLRs, emitted
/// as one JSON object; used by the harness when LLR dumps are enabled.
std::string llr_histogram_json(const VecD& llrs, int iteration, int user);

}  // namespace cfsim

#endif  // CFSIM_CPU_STAGE_HPP
