// SPDX-License-Identifier: Apache-2.0

#include "cfsim/config_io.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace cfsim {

namespace {

std::string trim(const std::string& s) {
  auto a = s.find_first_not_of(" \t\r\n");
  auto b = s.find_last_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  return s.substr(a, b - a + 1);
}

}  // namespace

std::map<std::string, std::string> read_kv_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot read config file " + path);
  std::map<std::string, std::string> kv;
  std::string line;
  int lineno = 0;
  while (std::getline(f, line)) {
    ++lineno;
    auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::runtime_error(path + ":" + std::to_string(lineno) +
                               ": expected key = value");
    std::string key = trim(line.substr(0, eq));
    std::string val = trim(line.substr(eq + 1));
    if (key.empty() || val.empty())
      throw std::runtime_error(path + ":" + std::to_string(lineno) +
                               ": empty key or value");
    kv[key] = val;
  }
  return kv;
}

void apply_kv(ExperimentConfig& cfg,
              const std::map<std::string, std::string>& kv) {
  auto as_int = [](const std::string& v) { return std::stoi(v); };
  auto as_double = [](const std::string& v) { return std::stod(v); };
  auto as_u64 = [](const std::string& v) { return std::stoull(v); };

  for (const auto& [key, val] : kv) {
    auto& sc = cfg.scenario;
    if (key == "aps") sc.aps = as_int(val);
    else if (key == "antennas_per_ap") sc.antennas = as_int(val);
    else if (key == "users") sc.users = as_int(val);
    else if (key == "area_side_m") sc.area_side_m = as_double(val);
    else if (key == "height_delta_m") sc.height_delta_m = as_double(val);
    else if (key == "carrier_hz") sc.carrier_hz = as_double(val);
    else if (key == "bandwidth_hz") sc.bandwidth_hz = as_double(val);
    else if (key == "noise_psd_dbm_hz") sc.noise_psd_dbm_hz = as_double(val);
    else if (key == "noise_figure_db") sc.noise_figure_db = as_double(val);
    else if (key == "tau_c") sc.tau_c = as_int(val);
    else if (key == "tau_u") sc.tau_u = as_int(val);
    else if (key == "tau_p") sc.tau_p = as_int(val);
    else if (key == "asd_deg") sc.asd_deg = as_double(val);
    else if (key == "shadow_std_db") sc.shadow_std_db = as_double(val);
    else if (key == "p_max_mw") sc.p_max_mw = as_double(val);
    else if (key == "fpc_exponent") sc.fpc_exponent = as_double(val);
    else if (key == "strategy") cfg.strategy = strategy_from_name(val);
    else if (key == "snr_points_db") cfg.snr_points_db = parse_snr_spec(val);
    else if (key == "trials") cfg.trials = as_int(val);
    else if (key == "n_outer") cfg.n_outer = as_int(val);
    else if (key == "n_inner") cfg.n_inner = as_int(val);
    else if (key == "n_stat") cfg.n_stat = as_int(val);
    else if (key == "master_seed") cfg.master_seed = as_u64(val);
    else if (key == "output_path") cfg.output_path = val;
    else if (key == "workers") cfg.workers = as_int(val);
    else if (key == "ldpc_n") cfg.ldpc_n = as_int(val);
    else if (key == "emit") {
      cfg.emit.clear();
      std::stringstream ss(val);
      std::string tok;
      while (std::getline(ss, tok, ',')) {
        tok = trim(tok);
        if (!tok.empty()) cfg.emit.insert(tok);
      }
    } else {
      throw std::runtime_error("unknown config key: " + key);
    }
  }
}

ExperimentConfig load_config(const std::string& path) {
  ExperimentConfig cfg;
  apply_kv(cfg, read_kv_file(path));
  return cfg;
}

}  // namespace cfsim
