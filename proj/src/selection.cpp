// SPDX-License-Identifier: Apache-2.0

#include "cfsim/selection.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <stdexcept>

#include <json.hpp>

#include "cfsim/netmodel.hpp"
#include "cfsim/rng.hpp"

namespace cfsim {

const char* strategy_name(Strategy s) {
  switch (s) {
    case Strategy::Random: return "Random";
    case Strategy::LLSF: return "LLSF";
    case Strategy::LECG: return "LECG";
    case Strategy::LLR_LLSF: return "LLR-LLSF";
    case Strategy::LLR_LECG: return "LLR-LECG";
    case Strategy::LLR_M: return "LLR-M";
    case Strategy::AllAPs: return "AllAPs";
  }
  return "?";
}

Strategy strategy_from_name(const std::string& name) {
  std::string t;
  for (char c : name) t.push_back(c == '_' ? '-' : static_cast<char>(std::tolower(c)));
  if (t == "random") return Strategy::Random;
  if (t == "llsf") return Strategy::LLSF;
  if (t == "lecg") return Strategy::LECG;
  if (t == "llr-llsf") return Strategy::LLR_LLSF;
  if (t == "llr-lecg") return Strategy::LLR_LECG;
  if (t == "llr-m") return Strategy::LLR_M;
  if (t == "allaps" || t == "all-aps" || t == "all") return Strategy::AllAPs;
  throw std::invalid_argument("unknown strategy: " + name);
}

void ServiceMap::rebuild() {
  served_by_ap.assign(L, {});
  aps_of_user.assign(K, {});
  for (int k = 0; k < K; ++k)
    for (int l = 0; l < L; ++l)
      if (at(k, l)) {
        served_by_ap[l].push_back(k);
        aps_of_user[k].push_back(l);
      }
  coserved.assign(K, {});
  std::vector<std::uint8_t> mark(K);
  for (int k = 0; k < K; ++k) {
    std::fill(mark.begin(), mark.end(), 0);
    mark[k] = 1;
    for (int l : aps_of_user[k])
      for (int j : served_by_ap[l]) mark[j] = 1;
    for (int j = 0; j < K; ++j)
      if (mark[j]) coserved[k].push_back(j);
  }
}

void ServiceMap::validate(int tau_p, bool enforce_cap) const {
  for (int k = 0; k < K; ++k)
    if (aps_of_user[k].empty())
      throw std::logic_error("user without serving AP");
  if (enforce_cap)
    for (int l = 0; l < L; ++l)
      if (static_cast<int>(served_by_ap[l].size()) > tau_p)
        throw std::logic_error("per-AP cap exceeded");
  for (int l = 0; l < L; ++l)
    for (int k : served_by_ap[l])
      if (!at(k, l)) throw std::logic_error("set/d mismatch");
  for (int k = 0; k < K; ++k)
    for (int l : aps_of_user[k])
      if (!at(k, l)) throw std::logic_error("set/d mismatch");
}

namespace {

ServiceMap blank_map(int K, int L) {
  ServiceMap m;
  m.K = K;
  m.L = L;
  m.d.assign(static_cast<std::size_t>(K) * L, 0);
  m.master_of.assign(K, -1);
  return m;
}

/// Guaranteed-AP assignment: users in order of decreasing best-link quality
/// take their strongest AP among those with spare guaranteed capacity, so
/// coverage holds even when many users share a best AP.
std::vector<int> assign_masters(const MatD& beta, int tau_p) {
  const int K = static_cast<int>(beta.rows());
  const int L = static_cast<int>(beta.cols());
  if (K > static_cast<long>(L) * tau_p)
    throw std::invalid_argument("more users than guaranteed slots");

  std::vector<int> order(K);
  std::iota(order.begin(), order.end(), 0);
  std::vector<double> best(K);
  for (int k = 0; k < K; ++k) best[k] = beta.row(k).maxCoeff();
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    if (best[a] != best[b]) return best[a] > best[b];
    return a < b;
  });

  std::vector<int> load(L, 0), master(K, -1);
  for (int k : order) {
    int pick = -1;
    for (int l = 0; l < L; ++l) {
      if (load[l] >= tau_p) continue;
      if (pick < 0 || beta(k, l) > beta(k, pick)) pick = l;
    }
    master[k] = pick;  // pick >= 0 by the capacity check above
    ++load[pick];
  }
  return master;
}

/// Caps each AP's list at tau_p, keeping guaranteed users and then the
/// highest-metric members (lower user index wins ties).
void enforce_cap(ServiceMap& m, const MatD& metric, int tau_p) {
  for (int l = 0; l < m.L; ++l) {
    std::vector<int> members;
    for (int k = 0; k < m.K; ++k)
      if (m.at(k, l)) members.push_back(k);
    if (static_cast<int>(members.size()) <= tau_p) continue;

    std::stable_sort(members.begin(), members.end(), [&](int a, int b) {
      bool ga = m.master_of[a] == l;
      bool gb = m.master_of[b] == l;
      if (ga != gb) return ga;
      if (metric(a, l) != metric(b, l)) return metric(a, l) > metric(b, l);
      return a < b;
    });
    for (std::size_t i = tau_p; i < members.size(); ++i) m.set(members[i], l, 0);
  }
}

/// Keeps a member when its metric reaches the mean metric of the AP's
/// current members; guaranteed links always stay.
ServiceMap mean_test_refine(const MatD& metric, const ServiceMap& prior) {
  ServiceMap out = prior;
  for (int l = 0; l < prior.L; ++l) {
    const auto& members = prior.served_by_ap[l];
    if (members.empty()) continue;
    double mean = 0.0;
    for (int k : members) mean += metric(k, l);
    mean /= static_cast<double>(members.size());
    for (int k : members) {
      bool keep = metric(k, l) >= mean || prior.master_of[k] == l;
      if (!keep) out.set(k, l, 0);
    }
  }
  out.rebuild();
  return out;
}

}  // namespace

ServiceMap initial_access(const MatD& beta, int tau_p) {
  const int K = static_cast<int>(beta.rows());
  const int L = static_cast<int>(beta.cols());
  ServiceMap m = blank_map(K, L);
  m.master_of = assign_masters(beta, tau_p);

  for (int l = 0; l < L; ++l) {
    double mean = beta.col(l).mean();
    for (int k = 0; k < K; ++k)
      if (beta(k, l) >= mean) m.set(k, l, 1);
  }
  for (int k = 0; k < K; ++k) m.set(k, m.master_of[k], 1);
  enforce_cap(m, beta, tau_p);
  m.rebuild();
  return m;
}

ServiceMap refine_llsf(const MatD& beta, const ServiceMap& prior) {
  return mean_test_refine(beta, prior);
}

ServiceMap refine_lecg(const NetworkRealization& rz, const ServiceMap& prior) {
  MatD gain(prior.K, prior.L);
  for (int k = 0; k < prior.K; ++k)
    for (int l = 0; l < prior.L; ++l)
      gain(k, l) = rz.eta(k) * rz.h_hat(k, l).squaredNorm();
  return mean_test_refine(gain, prior);
}

ServiceMap refine_llr_mean(const MatD& mean_abs_llr, const ServiceMap& prior) {
  return mean_test_refine(mean_abs_llr, prior);
}

ServiceMap all_aps_map(const MatD& beta) {
  const int K = static_cast<int>(beta.rows());
  const int L = static_cast<int>(beta.cols());
  ServiceMap m = blank_map(K, L);
  std::fill(m.d.begin(), m.d.end(), 1);
  for (int k = 0; k < K; ++k) {
    int best = 0;
    for (int l = 1; l < L; ++l)
      if (beta(k, l) > beta(k, best)) best = l;
    m.master_of[k] = best;
  }
  m.rebuild();
  return m;
}

ServiceMap random_map(const MatD& beta, int tau_p, std::uint64_t seed) {
  const int K = static_cast<int>(beta.rows());
  const int L = static_cast<int>(beta.cols());
  ServiceMap m = blank_map(K, L);
  m.master_of = assign_masters(beta, tau_p);
  for (int k = 0; k < K; ++k) m.set(k, m.master_of[k], 1);

  // Sparse baseline: roughly a quarter of the users per AP, drawn uniformly,
  // masters included in the budget.
  int size = std::min({tau_p, K, std::max(1, K / 4)});
  rng::Stream rng(seed);
  std::vector<int> pool(K);
  for (int l = 0; l < L; ++l) {
    std::iota(pool.begin(), pool.end(), 0);
    for (int i = K - 1; i > 0; --i) std::swap(pool[i], pool[rng.index(i + 1)]);
    int have = 0;
    for (int k = 0; k < K; ++k)
      if (m.at(k, l)) ++have;
    for (int i = 0; i < K && have < size; ++i) {
      if (!m.at(pool[i], l)) {
        m.set(pool[i], l, 1);
        ++have;
      }
    }
  }
  m.rebuild();
  return m;
}

ServiceMap initializer_map(Strategy s, const NetworkRealization& rz,
                           const ServiceMap& prior, std::uint64_t seed) {
  switch (s) {
    case Strategy::LLR_M: return prior;
    case Strategy::LLR_LLSF: return refine_llsf(rz.beta, prior);
    case Strategy::LLR_LECG: return refine_lecg(rz, prior);
    default: return select(s, rz, prior, nullptr, seed);
  }
}

ServiceMap select(Strategy s, const NetworkRealization& rz,
                  const ServiceMap& prior, const MatD* mean_abs_llr,
                  std::uint64_t seed) {
  switch (s) {
    case Strategy::AllAPs: return all_aps_map(rz.beta);
    case Strategy::Random: return random_map(rz.beta, rz.cfg.tau_p, seed);
    case Strategy::LLSF: return refine_llsf(rz.beta, prior);
    case Strategy::LECG: return refine_lecg(rz, prior);
    case Strategy::LLR_LLSF:
    case Strategy::LLR_LECG:
    case Strategy::LLR_M:
      if (mean_abs_llr == nullptr)
        throw std::invalid_argument(
            "LLR-based selection needs stage-one LLRs");
      return refine_llr_mean(*mean_abs_llr, prior);
  }
  throw std::invalid_argument("unknown strategy");
}

double fronthaul_load(double K, double m) {
  return K * m + (m * m * K * K + K * m) / 2.0;
}

double flop_count(CostScheme scheme, const CostParams& p) {
  const double LN = p.L * p.N;
  switch (scheme) {
    case CostScheme::Proposed:
      return p.L * p.N * p.N * p.N;
    case CostScheme::SoftIC:
      return LN * LN * LN;
    case CostScheme::MBDF:
      return p.B * LN * LN * LN;
    case CostScheme::JED:
      return 8.0 * p.K * p.K * p.K + 6.0 * p.K * LN * LN +
             4.0 * p.K * LN * p.n - 2.0 * p.K + 1.0;
    case CostScheme::LlrStage:
      return 2.0 * p.M_c + 2.0 * std::pow(2.0, p.M_c) + 4.0;
    case CostScheme::LlrSelection:
      return (p.K / 2.0) * (p.m * p.m + p.m) +
             (p.m * p.m * p.m - p.m) / 3.0 + p.m * p.m +
             2.0 * (p.M_c + std::pow(2.0, p.M_c)) + 4.0;
  }
  return 0.0;
}

namespace {
const char* scheme_token(CostScheme s) {
  switch (s) {
    case CostScheme::Proposed: return "proposed";
    case CostScheme::SoftIC: return "soft_ic";
    case CostScheme::MBDF: return "mb_df";
    case CostScheme::JED: return "jed";
    case CostScheme::LlrStage: return "llr_stage";
    case CostScheme::LlrSelection: return "llr_selection";
  }
  return "?";
}
}  // namespace

std::string accounting_row(CostScheme scheme, const CostParams& p) {
  char buf[256];
  std::snprintf(buf, sizeof(buf), "%s,%.12g,%.12g,%.12g,%.12g,%.12g,%.12g",
                scheme_token(scheme), p.K, p.L, p.N, p.m,
                fronthaul_load(p.K, p.m), flop_count(scheme, p));
  return buf;
}

std::string ServiceMap::to_json() const {
  nlohmann::json j;
  j["version"] = 1;
  j["users"] = K;
  j["aps"] = L;
  j["master_of"] = master_of;
  nlohmann::json rows = nlohmann::json::array();
  for (int k = 0; k < K; ++k) {
    nlohmann::json row = nlohmann::json::array();
    for (int l = 0; l < L; ++l) row.push_back(static_cast<int>(at(k, l)));
    rows.push_back(row);
  }
  j["d"] = rows;
  return j.dump();
}

ServiceMap ServiceMap::from_json(const std::string& text) {
  nlohmann::json j = nlohmann::json::parse(text);
  ServiceMap m = blank_map(j.at("users").get<int>(), j.at("aps").get<int>());
  m.master_of = j.at("master_of").get<std::vector<int>>();
  const auto& rows = j.at("d");
  for (int k = 0; k < m.K; ++k)
    for (int l = 0; l < m.L; ++l)
      m.set(k, l, rows[k][l].get<int>() ? 1 : 0);
  m.rebuild();
  return m;
}

}  // namespace cfsim
