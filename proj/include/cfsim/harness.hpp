// SPDX-License-Identifier: Apache-2.0
//
// Monte Carlo experiment driver: power control, SNR calibration, seeded
// parallel trials and CSV/JSON emission.

#ifndef CFSIM_HARNESS_HPP
#define CFSIM_HARNESS_HPP

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "cfsim/codec.hpp"
#include "cfsim/cpu_stage.hpp"
#include "cfsim/netmodel.hpp"
#include "cfsim/selection.hpp"

namespace cfsim {

struct ExperimentConfig {
  ScenarioConfig scenario;
  Strategy strategy = Strategy::AllAPs;
  std::vector<double> snr_points_db{10.0};
  int trials = 200;
  int n_outer = 3;
  int n_inner = 20;
  int n_stat = 500;
  std::uint64_t master_seed = 1;
  std::string output_path = "out";
  std::set<std::string> emit{"ber", "se_cdf", "fronthaul", "flops",
                             "cardinality"};
  int workers = 1;
  int ldpc_n = 256;
  bool debug_dump = false;  // per-link (alpha, gamma2) and LLR histograms

  void validate() const;
};

/// Applies the desk- or paper-scale dimension profile on top of a config.
void apply_profile(ExperimentConfig& cfg, const std::string& profile);

struct TrialMetrics {
  long long bit_errors = 0;
  long long bits_total = 0;
  VecD per_user_se;
  double fronthaul = 0.0;
  double flops = 0.0;
  std::vector<int> selected_aps_per_user;
};

/// Fractional power control over the serving sets:
/// eta_k = p_max * (sum_{l in M_k} beta_kl)^-nu / max_j (sum beta_jl)^-nu.
/// Throws on a zero aggregate gain.
VecD assign_powers_fpc(const MatD& beta, const ServiceMap& map, double p_max,
                       double exponent);

/// Noise power that puts the mean per-AP average SNR
/// (sum_i beta_il eta_i R / sigma2) at the target.
double calibrate_snr(const MatD& beta, const VecD& eta, double r_ldpc,
                     double target_snr_db);

/// One full trial at one SNR point: fresh geometry, shadowing, powers,
/// channels and estimation, strategy-specific AP selection, LSFD statistics,
/// outer detection/decoding and metric extraction. Deterministic in
/// (config, master_seed, trial_index).
TrialMetrics run_trial(const ExperimentConfig& cfg, const LdpcCode& code,
                       double snr_db, int trial_index);

struct SnrAggregate {
  double snr_db = 0.0;
  long long bit_errors = 0;
  long long bits_total = 0;
  std::vector<double> se_values;       // pooled per-user SE
  double mean_selected_aps = 0.0;
  double mean_fronthaul = 0.0;
  double mean_flops = 0.0;
  int trials = 0;

  double ber() const {
    return bits_total ? static_cast<double>(bit_errors) / bits_total : 0.0;
  }
};

struct ExperimentResult {
  std::vector<SnrAggregate> per_snr;   // ordered as snr_points_db
  double mean_selected_aps = 0.0;      // across all SNR points
  double runtime_s = 0.0;
};

/// Runs trials for every SNR point, parallel over trials. Aggregation order
/// is independent of the worker count.
ExperimentResult run_experiment(const ExperimentConfig& cfg);

/// Merges per-trial metrics into one aggregate; associative.
SnrAggregate aggregate_trials(double snr_db,
                              const std::vector<TrialMetrics>& metrics);

/// Writes the requested CSV files (RFC 4180, CRLF line ends) and a JSON
/// summary into cfg.output_path. Throws on an unwritable path.
void aggregate_and_emit(const ExperimentResult& result,
                        const ExperimentConfig& cfg);

/// "a,b,c" or "lo:hi:step" -> list of SNR points.
std::vector<double> parse_snr_spec(const std::string& spec);

}  // namespace cfsim

#endif  // CFSIM_HARNESS_HPP
