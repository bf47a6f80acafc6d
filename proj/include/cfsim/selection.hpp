// SPDX-License-Identifier: Apache-2.0

#ifndef CFSIM_SELECTION_HPP
#define CFSIM_SELECTION_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "cfsim/types.hpp"

namespace cfsim {

struct NetworkRealization;

enum class Strategy { Random, LLSF, LECG, LLR_LLSF, LLR_LECG, LLR_M, AllAPs };

const char* strategy_name(Strategy s);
Strategy strategy_from_name(const std::string& name);

/// Binary user/AP association with the derived index sets kept consistent:
/// d (K x L), per-AP served sets D_l, per-user serving sets M_k and per-user
/// co-served sets B_k (users sharing at least one serving AP, inclusive).
struct ServiceMap {
  int K = 0;
  int L = 0;
  std::vector<std::uint8_t> d;  // K x L row-major
  std::vector<std::vector<int>> served_by_ap;  // D_l
  std::vector<std::vector<int>> aps_of_user;   // M_k
  std::vector<std::vector<int>> coserved;      // B_k
  std::vector<int> master_of;  // per-user guaranteed AP, never deselected

  std::uint8_t at(int user, int ap) const {
    return d[static_cast<std::size_t>(user) * L + ap];
  }
  void set(int user, int ap, std::uint8_t v) {
    d[static_cast<std::size_t>(user) * L + ap] = v;
  }

  /// Recomputes the index sets from d.
  void rebuild();
  /// Checks |D_l| <= tau_p (when enforce_cap), |M_k| >= 1 and set/d
  /// consistency; throws std::logic_error on violation.
  void validate(int tau_p, bool enforce_cap = true) const;

  std::string to_json() const;
  static ServiceMap from_json(const std::string& text);
};

/// Primary access: each AP admits users whose large-scale coefficient is at
/// or above the AP's mean over all users, every user is guaranteed one AP
/// (best available by beta), and per-AP lists are capped at tau_p with
/// guaranteed members kept and remaining slots filled by beta rank
/// (lower user index wins ties).
ServiceMap initial_access(const MatD& beta, int tau_p);

/// Refinements applied to a prior map. Each keeps a user at an AP when its
/// metric is at or above the mean metric of the AP's current members;
/// guaranteed (master) links are always kept.
ServiceMap refine_llsf(const MatD& beta, const ServiceMap& prior);
ServiceMap refine_lecg(const NetworkRealization& rz, const ServiceMap& prior);
/// mean_abs_llr is K x L; entries are read only where prior.d = 1.
ServiceMap refine_llr_mean(const MatD& mean_abs_llr, const ServiceMap& prior);

/// Baselines. AllAPs associates every user with every AP (cap deliberately
/// not enforced). Random fills each AP with masters first, then uniformly
/// drawn users up to min(tau_p, K, max(1, K/4)).
ServiceMap all_aps_map(const MatD& beta);
ServiceMap random_map(const MatD& beta, int tau_p, std::uint64_t seed);

/// Map the LLR-producing detection pass runs under for each strategy: the
/// prior map itself for LLR_M, the LLSF/LECG-refined prior for the
/// initialized variants, and the final map for everything else.
ServiceMap initializer_map(Strategy s, const NetworkRealization& rz,
                           const ServiceMap& prior, std::uint64_t seed);

/// Single-call strategy dispatch. For the LLR-based strategies `prior` must
/// be the map the LLRs were computed under (see initializer_map) and
/// `mean_abs_llr` must be non-null; passing null is a hard error.
ServiceMap select(Strategy s, const NetworkRealization& rz,
                  const ServiceMap& prior, const MatD* mean_abs_llr,
                  std::uint64_t seed);

// --- Accounting --------------------------------------------------------

/// Fronthaul load in complex scalars for K users served by m APs each:
/// K*m + (m^2 K^2 + K*m) / 2. Exact integer for integer inputs.
double fronthaul_load(double K, double m);

enum class CostScheme { Proposed, SoftIC, MBDF, JED, LlrStage, LlrSelection };

struct CostParams {
  double L = 0, N = 0, K = 0;
  double M_c = 2;  // modulation order, bits per symbol
  double m = 0;    // |M_k|, APs serving a user
  double B = 8;    // decision-feedback branches
  double n = 256;  // LLR block size
};

/// Leading-term FLOP counts with unit constants, plus the exact LLR-stage
/// and LLR-selection expressions.
double flop_count(CostScheme scheme, const CostParams& p);

struct SelectionMetrics {
  double fronthaul = 0;
  double flops = 0;
  double avg_selected_aps = 0;
};

/// One accounting CSV row: scheme,K,L,N,m,fronthaul,flops.
std::string accounting_row(CostScheme scheme, const CostParams& p);

}  // namespace cfsim

#endif  // CFSIM_SELECTION_HPP
