// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "cfsim/config_io.hpp"
#include "cfsim/harness.hpp"
#include "test_util.hpp"

using namespace cfsim;

namespace {

ServiceMap two_user_map() {
  ServiceMap m;
  m.K = 2;
  m.L = 2;
  m.d = {1, 1, 1, 1};
  m.master_of = {0, 1};
  m.rebuild();
  return m;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream f(p, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(f), {});
}

}  // namespace

TEST_CASE("fractional power control") {
  SUBCASE("zero exponent sends everyone at full power") {
    MatD beta(2, 2);
    beta << 1e-8, 2e-8, 5e-9, 1e-9;
    VecD eta = assign_powers_fpc(beta, two_user_map(), 100.0, 0.0);
    CHECK(eta(0) == 100.0);
    CHECK(eta(1) == 100.0);
  }
  SUBCASE("a 4x aggregate-gain advantage halves the power at nu = 1/2") {
    MatD beta(2, 2);
    beta << 3e-8, 1e-8,   // aggregate 4g
        0.75e-8, 0.25e-8; // aggregate g
    VecD eta = assign_powers_fpc(beta, two_user_map(), 100.0, 0.5);
    CHECK(eta(1) == 100.0);  // weaker user transmits at the cap
    CHECK(eta(0) == doctest::Approx(50.0).epsilon(1e-12));
  }
  SUBCASE("the maximum power is exactly the cap") {
    ScenarioConfig cfg = test::desk_config(6, 2, 5);
    auto [rz, map] = test::make_scenario(cfg, 3, 0.0);
    (void)rz;
    CHECK(map.K == 5);
    MatD beta = MatD::Random(5, 6).cwiseAbs() * 1e-8;
    VecD eta = assign_powers_fpc(beta, map, 42.0, 0.7);
    CHECK(eta.maxCoeff() == 42.0);
    CHECK(eta.minCoeff() > 0.0);
  }
}

TEST_CASE("SNR calibration") {
  SUBCASE("single AP and user closed form") {
    MatD beta(1, 1);
    beta << 2e-8;
    VecD eta = VecD::Constant(1, 50.0);
    double s2 = calibrate_snr(beta, eta, 0.5, 10.0);
    CHECK(s2 == doctest::Approx(2e-8 * 50.0 * 0.5 / 10.0).epsilon(1e-12));
  }
  SUBCASE("doubling the powers doubles the calibrated noise") {
    MatD beta(3, 4);
    beta.setRandom();
    beta = beta.cwiseAbs();
    VecD eta(3);
    eta << 10.0, 20.0, 30.0;
    double a = calibrate_snr(beta, eta, 0.5, 5.0);
    double b = calibrate_snr(beta, 2.0 * eta, 0.5, 5.0);
    CHECK(b == doctest::Approx(2.0 * a).epsilon(1e-12));
  }
  SUBCASE("the calibrated mean per-AP SNR hits the target") {
    MatD beta = MatD::Random(4, 6).cwiseAbs() * 1e-7;
    VecD eta(4);
    eta << 5.0, 15.0, 25.0, 35.0;
    double target_db = 7.5;
    double s2 = calibrate_snr(beta, eta, 0.5, target_db);
    double mean_snr = (beta.transpose() * eta).mean() * 0.5 / s2;
    CHECK(10.0 * std::log10(mean_snr) == doctest::Approx(target_db).epsilon(1e-12));
  }
}

TEST_CASE("trials are deterministic in (config, seed, index)") {
  ExperimentConfig cfg;
  cfg.scenario = test::desk_config(6, 2, 4);
  cfg.strategy = Strategy::LLSF;
  cfg.trials = 1;
  cfg.n_stat = 50;
  cfg.master_seed = 314;
  LdpcCode code = build_code(cfg.ldpc_n, 1);
  TrialMetrics a = run_trial(cfg, code, 5.0, 3);
  TrialMetrics b = run_trial(cfg, code, 5.0, 3);
  CHECK(a.bit_errors == b.bit_errors);
  CHECK(a.per_user_se == b.per_user_se);
  CHECK(a.fronthaul == b.fronthaul);
  CHECK(a.selected_aps_per_user == b.selected_aps_per_user);
}

TEST_CASE("AllAPs fronthaul per trial hits the closed-form anchor") {
  ExperimentConfig cfg;
  cfg.scenario = test::desk_config(9, 2, 10);
  cfg.strategy = Strategy::AllAPs;
  cfg.n_stat = 30;
  cfg.master_seed = 9;
  LdpcCode code = build_code(cfg.ldpc_n, 2);
  TrialMetrics tm = run_trial(cfg, code, 5.0, 0);
  CHECK(tm.fronthaul == 4185.0);
  for (int c : tm.selected_aps_per_user) CHECK(c == 9);
}

TEST_CASE("near-noiseless trials decode without errors") {
  ExperimentConfig cfg;
  cfg.scenario = test::desk_config(6, 2, 4);
  cfg.strategy = Strategy::AllAPs;
  cfg.n_stat = 60;
  cfg.master_seed = 5;
  LdpcCode code = build_code(cfg.ldpc_n, 3);
  int clean = 0;
  const int trials = 30;
  for (int t = 0; t < trials; ++t) {
    TrialMetrics tm = run_trial(cfg, code, 120.0, t);  // sigma2 -> 1e-12 scale
    clean += tm.bit_errors == 0;
  }
  CHECK(clean * 100 >= 99 * trials);
}

TEST_CASE("aggregation arithmetic") {
  TrialMetrics a;
  a.bit_errors = 2;
  a.bits_total = 1280;
  a.per_user_se = VecD::Constant(2, 1.5);
  a.fronthaul = 10.0;
  a.flops = 100.0;
  a.selected_aps_per_user = {3, 5};
  TrialMetrics b = a;
  b.bit_errors = 6;

  SUBCASE("ber is errors over bits") {
    SnrAggregate agg = aggregate_trials(10.0, {a});
    CHECK(agg.ber() == doctest::Approx(2.0 / 1280.0).epsilon(1e-15));
  }
  SUBCASE("merging two sets matches one combined aggregate") {
    SnrAggregate ab = aggregate_trials(0.0, {a, b});
    SnrAggregate ia = aggregate_trials(0.0, {a});
    SnrAggregate ib = aggregate_trials(0.0, {b});
    CHECK(ab.bit_errors == ia.bit_errors + ib.bit_errors);
    CHECK(ab.bits_total == ia.bits_total + ib.bits_total);
    CHECK(ab.mean_selected_aps ==
          doctest::Approx(0.5 * (ia.mean_selected_aps + ib.mean_selected_aps)));
    CHECK(ab.se_values.size() == ia.se_values.size() + ib.se_values.size());
  }
}

TEST_CASE("emission: headers, CRLF endings and a constant-SE step CDF") {
  ExperimentConfig cfg;
  cfg.scenario = test::desk_config(4, 2, 2);
  cfg.trials = 2;
  cfg.strategy = Strategy::LLSF;
  cfg.output_path =
      (std::filesystem::temp_directory_path() / "cfsim_emit_test").string();

  ExperimentResult result;
  TrialMetrics tm;
  tm.bit_errors = 2;
  tm.bits_total = 1280;
  tm.per_user_se = VecD::Constant(2, 0.75);
  tm.fronthaul = 4185.0;
  tm.flops = 99.0;
  tm.selected_aps_per_user = {2, 2};
  result.per_snr = {aggregate_trials(10.0, {tm, tm})};
  result.mean_selected_aps = 2.0;
  aggregate_and_emit(result, cfg);

  std::string ber = slurp(std::filesystem::path(cfg.output_path) / "ber.csv");
  CHECK(ber.find("snr_db,strategy,ber,trials,bits\r\n") == 0);
  CHECK(ber.find("10,LLSF,0.0015625,2,2560") != std::string::npos);

  std::string cdf =
      slurp(std::filesystem::path(cfg.output_path) / "se_cdf.csv");
  // All SE values equal: the empirical CDF steps through 0.25..1 at 0.75.
  CHECK(cdf.find("10,LLSF,0.75,0.25\r\n") != std::string::npos);
  CHECK(cdf.find("10,LLSF,0.75,1\r\n") != std::string::npos);

  std::string acct =
      slurp(std::filesystem::path(cfg.output_path) / "accounting.csv");
  CHECK(acct.find("scheme,K,L,N,m,fronthaul,flops\r\n") == 0);
  CHECK(acct.find("proposed,") != std::string::npos);
  CHECK(acct.find("jed,") != std::string::npos);

  std::string summary =
      slurp(std::filesystem::path(cfg.output_path) / "summary.json");
  CHECK(summary.find("\"strategy\": \"LLSF\"") != std::string::npos);
  std::filesystem::remove_all(cfg.output_path);
}

TEST_CASE("halving the trial count widens the BER confidence interval") {
  ExperimentConfig cfg;
  cfg.scenario = test::desk_config(6, 2, 4);
  cfg.strategy = Strategy::LLSF;
  cfg.n_stat = 50;
  cfg.master_seed = 123;
  cfg.snr_points_db = {5.0};
  auto ci_width = [](const SnrAggregate& agg) {
    double p = agg.ber();
    return 2.0 * 1.96 * std::sqrt(p * (1.0 - p) / agg.bits_total);
  };
  cfg.trials = 25;
  auto r1 = run_experiment(cfg);
  cfg.trials = 50;
  auto r2 = run_experiment(cfg);
  double ratio = ci_width(r2.per_snr[0]) / ci_width(r1.per_snr[0]);
  // Doubling the bit count shrinks the width by about 1/sqrt(2).
  CHECK(ratio > 0.55);
  CHECK(ratio < 0.9);
}

TEST_CASE("SNR specs parse as lists and ranges") {
  auto list = parse_snr_spec("-2.5,0,2.5");
  CHECK(list == std::vector<double>{-2.5, 0.0, 2.5});
  auto range = parse_snr_spec("-5:5:2.5");
  CHECK(range.size() == 5);
  CHECK(range.front() == -5.0);
  CHECK(range.back() == 5.0);
  CHECK_THROWS(parse_snr_spec(""));
  CHECK_THROWS(parse_snr_spec("0:10:-1"));
}

TEST_CASE("config files apply and reject unknown keys") {
  auto dir = std::filesystem::temp_directory_path();
  auto path = dir / "cfsim_test.conf";
  {
    std::ofstream f(path);
    f << "# scenario\n"
      << "aps = 9\n"
      << "antennas_per_ap = 4\n"
      << "users = 10\n"
      << "strategy = LLR-M\n"
      << "snr_points_db = 0,5\n"
      << "trials = 7\n"
      << "master_seed = 99\n";
  }
  ExperimentConfig cfg = load_config(path.string());
  CHECK(cfg.scenario.aps == 9);
  CHECK(cfg.scenario.antennas == 4);
  CHECK(cfg.scenario.users == 10);
  CHECK(cfg.strategy == Strategy::LLR_M);
  CHECK(cfg.snr_points_db == std::vector<double>{0.0, 5.0});
  CHECK(cfg.trials == 7);
  CHECK(cfg.master_seed == 99);

  {
    std::ofstream f(path);
    f << "not_a_key = 1\n";
  }
  CHECK_THROWS(load_config(path.string()));
  std::filesystem::remove(path);
}

TEST_CASE("profiles set the published dimension presets") {
  ExperimentConfig cfg;
  apply_profile(cfg, "desk");
  CHECK(cfg.scenario.aps == 16);
  CHECK(cfg.scenario.antennas == 2);
  CHECK(cfg.scenario.users == 8);
  CHECK(cfg.trials == 200);
  apply_profile(cfg, "paper");
  CHECK(cfg.scenario.aps == 100);
  CHECK(cfg.scenario.users == 100);
  CHECK(cfg.trials == 10000);
  CHECK_THROWS(apply_profile(cfg, "pocket"));
}

TEST_CASE("experiment validation catches bad setups") {
  ExperimentConfig cfg;
  cfg.trials = 0;
  CHECK_THROWS(cfg.validate());
  cfg = ExperimentConfig{};
  cfg.snr_points_db.clear();
  CHECK_THROWS(cfg.validate());
  cfg = ExperimentConfig{};
  cfg.ldpc_n = 128;  // != 2 tau_u
  CHECK_THROWS(cfg.validate());
}
