// SPDX-License-Identifier: Apache-2.0

#include "cfsim/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <thread>

#include <json.hpp>

#include "cfsim/ap_frontend.hpp"
#include "cfsim/rng.hpp"

namespace cfsim {

void ExperimentConfig::validate() const {
  scenario.validate();
  if (trials < 1) throw std::invalid_argument("trials must be >= 1");
  if (snr_points_db.empty()) throw std::invalid_argument("snr list is empty");
  if (n_outer < 1 || n_inner < 1 || n_stat < 1)
    throw std::invalid_argument("iteration counts must be >= 1");
  if (workers < 1) throw std::invalid_argument("workers must be >= 1");
  if (ldpc_n != 2 * scenario.tau_u)
    throw std::invalid_argument("codeword length must be 2 * tau_u");
}

void apply_profile(ExperimentConfig& cfg, const std::string& profile) {
  if (profile == "desk") {
    cfg.scenario.aps = 16;
    cfg.scenario.antennas = 2;
    cfg.scenario.users = 8;
    cfg.trials = 200;
  } else if (profile == "paper") {
    cfg.scenario.aps = 100;
    cfg.scenario.antennas = 4;
    cfg.scenario.users = 100;
    cfg.trials = 10000;
  } else {
    throw std::invalid_argument("unknown profile: " + profile);
  }
}

VecD assign_powers_fpc(const MatD& beta, const ServiceMap& map, double p_max,
                       double exponent) {
  const int K = map.K;
  VecD aggregate(K);
  for (int k = 0; k < K; ++k) {
    double sum = 0.0;
    for (int l : map.aps_of_user[k]) sum += beta(k, l);
    if (sum <= 0.0)
      throw std::runtime_error("zero aggregate gain in power control");
    aggregate(k) = sum;
  }
  VecD weight(K);
  for (int k = 0; k < K; ++k) weight(k) = std::pow(aggregate(k), -exponent);
  double top = weight.maxCoeff();
  return (p_max / top) * weight;
}

double calibrate_snr(const MatD& beta, const VecD& eta, double r_ldpc,
                     double target_snr_db) {
  const double snr_lin = std::pow(10.0, target_snr_db / 10.0);
  double mean_rx = (beta.transpose() * eta).mean();  // mean over APs of sum_i beta_il eta_i
  return mean_rx * r_ldpc / snr_lin;
}

namespace {

struct TrialContext {
  NetworkRealization rz;
  ServiceMap final_map;
  std::vector<LocalDetector> detectors;
  SoftEstimateBatch batch;
  std::vector<CodedFrame> frames;
};

/// Data-phase observations for all APs: every user transmits its frame,
/// regardless of who serves it.
std::vector<MatC> data_phase(const NetworkRealization& rz,
                             const std::vector<CodedFrame>& frames,
                             rng::Stream& noise) {
  const auto& cfg = rz.cfg;
  std::vector<MatC> y(cfg.aps);
  for (int l = 0; l < cfg.aps; ++l) {
    MatC m = MatC::Zero(cfg.antennas, cfg.tau_u);
    for (int k = 0; k < cfg.users; ++k) {
      double amp = std::sqrt(rz.eta(k));
      const VecC& h = rz.h_true(k, l);
      for (int t = 0; t < cfg.tau_u; ++t)
        m.col(t) += amp * frames[k].symbols[t] * h;
    }
    double noise_std = std::sqrt(rz.sigma2);
    for (int t = 0; t < cfg.tau_u; ++t)
      for (int a = 0; a < cfg.antennas; ++a)
        m(a, t) += noise_std * noise.cgauss();
    y[l] = std::move(m);
  }
  return y;
}

bool uses_llr_stage(Strategy s) {
  return s == Strategy::LLR_LLSF || s == Strategy::LLR_LECG ||
         s == Strategy::LLR_M;
}

}  // namespace

TrialMetrics run_trial(const ExperimentConfig& cfg, const LdpcCode& code,
                       double snr_db, int trial_index) {
  const auto& sc = cfg.scenario;
  const std::uint64_t seed = cfg.master_seed;
  const int K = sc.users;

  NetworkRealization rz =
      build_layout(sc, rng::substream_seed(seed, trial_index, "layout"));
  {
    rng::Stream shadow = rng::make_stream(seed, trial_index, "shadow");
    large_scale_fading(rz, shadow);
  }
  build_correlation(rz);

  ServiceMap initial = initial_access(rz.beta, sc.tau_p);
  rz.eta = assign_powers_fpc(rz.beta, initial, sc.p_max_mw, sc.fpc_exponent);
  rz.sigma2 = calibrate_snr(rz.beta, rz.eta, code.rate(), snr_db);
  prepare_estimation(rz);

  {
    rng::Stream ch = rng::make_stream(seed, trial_index, "channel");
    draw_channels(rz, ch);
    rng::Stream pn = rng::make_stream(seed, trial_index, "pilot_noise");
    mmse_estimate(rz, pn);
  }

  // Frames and data-phase observations.
  std::vector<CodedFrame> frames;
  frames.reserve(K);
  {
    rng::Stream bits = rng::make_stream(seed, trial_index, "bits");
    for (int k = 0; k < K; ++k) {
      std::vector<std::uint8_t> info(code.k_info);
      for (auto& b : info) b = static_cast<std::uint8_t>(bits.bits() & 1);
      frames.push_back(make_frame(code, info));
    }
  }
  std::vector<MatC> y;
  {
    rng::Stream dn = rng::make_stream(seed, trial_index, "data_noise");
    y = data_phase(rz, frames, dn);
  }

  // Strategy staging: LLR-based schemes detect under their initializer map
  // first and refine on the frame-mean |LLR|.
  std::uint64_t sel_seed = rng::substream_seed(seed, trial_index, "random_sel");
  ServiceMap final_map;
  double selection_flops = 0.0;
  long long stage1_llr_sets = 0;
  if (uses_llr_stage(cfg.strategy)) {
    ServiceMap init = initializer_map(cfg.strategy, rz, initial, sel_seed);
    auto init_det = build_local_detectors(rz, init);
    auto init_batch = detect_frames(init_det, y, rz.eta);
    MatD llr = mean_abs_llr(init_batch, init_det, K, sc.aps);
    final_map = select(cfg.strategy, rz, init, &llr, sel_seed);
    for (const auto& served : init.served_by_ap)
      stage1_llr_sets += static_cast<long long>(served.size()) * sc.tau_u;
    for (int k = 0; k < K; ++k) {
      CostParams p;
      p.L = sc.aps;
      p.N = sc.antennas;
      p.K = K;
      p.m = static_cast<double>(init.aps_of_user[k].size());
      selection_flops += flop_count(CostScheme::LlrSelection, p);
    }
  } else {
    final_map = select(cfg.strategy, rz, initial, nullptr, sel_seed);
  }
  final_map.validate(sc.tau_p, cfg.strategy != Strategy::AllAPs);

  auto detectors = build_local_detectors(rz, final_map);
  auto batch = detect_frames(detectors, y, rz.eta);
  if (cfg.debug_dump) {
    std::filesystem::create_directories(cfg.output_path);
    char name[128];
    std::snprintf(name, sizeof(name), "links_trial%d_snr%.4g.json", trial_index,
                  snr_db);
    std::ofstream f(std::filesystem::path(cfg.output_path) / name);
    f << link_diagnostics_json(detectors);
  }

  LsfdStats stats = estimate_lsfd_stats(
      rz, final_map, cfg.n_stat,
      rng::substream_seed(seed, trial_index, "lsfd"));
  LsfdWeights weights = lsfd_weights(stats, final_map, rz.eta, rz.sigma2);

  std::vector<CombinedLink> links;
  links.reserve(K);
  for (int k = 0; k < K; ++k)
    links.push_back(combine_user(batch, detectors, weights, final_map, k));

  IddConfig idd_cfg;
  idd_cfg.n_outer = cfg.n_outer;
  idd_cfg.n_inner = cfg.n_inner;
  auto decoded = run_idd(code, links, idd_cfg);

  TrialMetrics tm;
  tm.per_user_se = VecD::Zero(K);
  tm.selected_aps_per_user.resize(K);
  double mean_m = 0.0;
  for (int k = 0; k < K; ++k) {
    tm.selected_aps_per_user[k] =
        static_cast<int>(final_map.aps_of_user[k].size());
    mean_m += tm.selected_aps_per_user[k];
    auto [sinr, se] = sinr_se(stats, weights.a[k], k, rz.eta, rz.sigma2,
                              sc.tau_p, sc.tau_c);
    tm.per_user_se(k) = se;
    for (int j = 0; j < code.k_info; ++j)
      tm.bit_errors += decoded[k].info_bits[j] != frames[k].info_bits[j];
    tm.bits_total += code.k_info;
  }
  mean_m /= K;
  tm.fronthaul = fronthaul_load(K, mean_m);

  long long cpu_llr_sets =
      static_cast<long long>(K) * sc.tau_u * cfg.n_outer;
  for (const auto& served : final_map.served_by_ap)
    stage1_llr_sets += static_cast<long long>(served.size()) * sc.tau_u;
  CostParams filt;
  filt.L = sc.aps;
  filt.N = sc.antennas;
  filt.K = K;
  CostParams llr;
  tm.flops = flop_count(CostScheme::Proposed, filt) +
             static_cast<double>(stage1_llr_sets + cpu_llr_sets) *
                 flop_count(CostScheme::LlrStage, llr) +
             selection_flops;
  return tm;
}

SnrAggregate aggregate_trials(double snr_db,
                              const std::vector<TrialMetrics>& metrics) {
  SnrAggregate agg;
  agg.snr_db = snr_db;
  agg.trials = static_cast<int>(metrics.size());
  double card = 0.0, fh = 0.0, fl = 0.0;
  for (const auto& tm : metrics) {
    agg.bit_errors += tm.bit_errors;
    agg.bits_total += tm.bits_total;
    for (int k = 0; k < tm.per_user_se.size(); ++k)
      agg.se_values.push_back(tm.per_user_se(k));
    double m = 0.0;
    for (int c : tm.selected_aps_per_user) m += c;
    card += m / tm.selected_aps_per_user.size();
    fh += tm.fronthaul;
    fl += tm.flops;
  }
  if (!metrics.empty()) {
    agg.mean_selected_aps = card / metrics.size();
    agg.mean_fronthaul = fh / metrics.size();
    agg.mean_flops = fl / metrics.size();
  }
  return agg;
}

ExperimentResult run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  auto t0 = std::chrono::steady_clock::now();
  LdpcCode code =
      build_code(cfg.ldpc_n, rng::substream_seed(cfg.master_seed, 0, "ldpc"));

  ExperimentResult result;
  for (double snr : cfg.snr_points_db) {
    std::vector<TrialMetrics> metrics(cfg.trials);
    std::atomic<int> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;

    auto worker = [&]() {
      for (int t; (t = next.fetch_add(1)) < cfg.trials;) {
        try {
          metrics[t] = run_trial(cfg, code, snr, t);
        } catch (const std::exception& e) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!error)
            error = std::make_exception_ptr(std::runtime_error(
                "trial " + std::to_string(t) + ": " + e.what()));
          return;
        }
      }
    };

    int n_workers = std::min(cfg.workers, cfg.trials);
    if (n_workers <= 1) {
      worker();
    } else {
      std::vector<std::thread> pool;
      pool.reserve(n_workers);
      for (int i = 0; i < n_workers; ++i) pool.emplace_back(worker);
      for (auto& th : pool) th.join();
    }
    if (error) std::rethrow_exception(error);

    result.per_snr.push_back(aggregate_trials(snr, metrics));
  }

  double card = 0.0;
  for (const auto& agg : result.per_snr) card += agg.mean_selected_aps;
  result.mean_selected_aps = card / result.per_snr.size();
  result.runtime_s = std::chrono::duration<double>(
                         std::chrono::steady_clock::now() - t0)
                         .count();
  return result;
}

namespace {

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

class CsvFile {
 public:
  CsvFile(const std::filesystem::path& path, const std::string& header) {
    f_.open(path, std::ios::binary);
    if (!f_) throw std::runtime_error("cannot write " + path.string());
    row(header);
  }
  void row(const std::string& line) { f_ << line << "\r\n"; }

 private:
  std::ofstream f_;
};

}  // namespace

void aggregate_and_emit(const ExperimentResult& result,
                        const ExperimentConfig& cfg) {
  namespace fs = std::filesystem;
  fs::path dir(cfg.output_path);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (!fs::is_directory(dir))
    throw std::runtime_error("cannot create output directory " + dir.string());

  const std::string strat = strategy_name(cfg.strategy);

  if (cfg.emit.count("ber")) {
    CsvFile csv(dir / "ber.csv", "snr_db,strategy,ber,trials,bits");
    for (const auto& agg : result.per_snr)
      csv.row(fmt(agg.snr_db) + "," + strat + "," + fmt(agg.ber()) + "," +
              std::to_string(agg.trials) + "," + std::to_string(agg.bits_total));
  }

  if (cfg.emit.count("se_cdf")) {
    CsvFile csv(dir / "se_cdf.csv", "snr_db,strategy,se,cdf");
    for (const auto& agg : result.per_snr) {
      std::vector<double> se = agg.se_values;
      std::sort(se.begin(), se.end());
      for (std::size_t i = 0; i < se.size(); ++i)
        csv.row(fmt(agg.snr_db) + "," + strat + "," + fmt(se[i]) + "," +
                fmt(static_cast<double>(i + 1) / se.size()));
    }
  }

  if (cfg.emit.count("cardinality")) {
    CsvFile csv(dir / "cardinality.csv", "snr_db,strategy,mean_selected_aps");
    for (const auto& agg : result.per_snr)
      csv.row(fmt(agg.snr_db) + "," + strat + "," + fmt(agg.mean_selected_aps));
  }

  if (cfg.emit.count("fronthaul") || cfg.emit.count("flops")) {
    CsvFile csv(dir / "accounting.csv", "scheme,K,L,N,m,fronthaul,flops");
    CostParams p;
    p.K = cfg.scenario.users;
    p.L = cfg.scenario.aps;
    p.N = cfg.scenario.antennas;
    p.m = result.mean_selected_aps;
    p.n = cfg.ldpc_n;
    for (CostScheme s : {CostScheme::Proposed, CostScheme::SoftIC,
                         CostScheme::MBDF, CostScheme::JED,
                         CostScheme::LlrStage, CostScheme::LlrSelection})
      csv.row(accounting_row(s, p));
  }

  nlohmann::json j;
  j["strategy"] = strat;
  j["master_seed"] = cfg.master_seed;
  j["trials"] = cfg.trials;
  j["n_outer"] = cfg.n_outer;
  j["n_inner"] = cfg.n_inner;
  j["n_stat"] = cfg.n_stat;
  j["workers"] = cfg.workers;
  j["runtime_s"] = result.runtime_s;
  j["scenario"] = {{"aps", cfg.scenario.aps},
                   {"antennas", cfg.scenario.antennas},
                   {"users", cfg.scenario.users},
                   {"area_side_m", cfg.scenario.area_side_m},
                   {"tau_c", cfg.scenario.tau_c},
                   {"tau_u", cfg.scenario.tau_u},
                   {"tau_p", cfg.scenario.tau_p},
                   {"p_max_mw", cfg.scenario.p_max_mw},
                   {"fpc_exponent", cfg.scenario.fpc_exponent}};
  nlohmann::json per_snr = nlohmann::json::array();
  for (const auto& agg : result.per_snr)
    per_snr.push_back({{"snr_db", agg.snr_db},
                       {"ber", agg.ber()},
                       {"bit_errors", agg.bit_errors},
                       {"bits", agg.bits_total},
                       {"mean_selected_aps", agg.mean_selected_aps},
                       {"mean_fronthaul", agg.mean_fronthaul},
                       {"mean_flops", agg.mean_flops}});
  j["per_snr"] = per_snr;
  std::ofstream f(dir / "summary.json");
  if (!f) throw std::runtime_error("cannot write summary.json");
  f << j.dump(2) << "\n";
}

std::vector<double> parse_snr_spec(const std::string& spec) {
  std::vector<double> out;
  if (spec.find(':') != std::string::npos) {
    double lo, hi, step;
    if (std::sscanf(spec.c_str(), "%lf:%lf:%lf", &lo, &hi, &step) != 3 ||
        step <= 0.0)
      throw std::invalid_argument("bad SNR range: " + spec);
    for (double v = lo; v <= hi + 1e-9; v += step) out.push_back(v);
    return out;
  }
  std::stringstream ss(spec);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    if (tok.empty()) continue;
    out.push_back(std::stod(tok));
  }
  if (out.empty()) throw std::invalid_argument("empty SNR list");
  return out;
}

}  // namespace cfsim
