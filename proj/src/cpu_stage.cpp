// SPDX-License-Identifier: Apache-2.0

#include "cfsim/cpu_stage.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <json.hpp>

#include "cfsim/rng.hpp"

namespace cfsim {

VecC LsfdStats::g_full(int user, int L) const {
  VecC out = VecC::Zero(L);
  for (std::size_t i = 0; i < active[user].size(); ++i)
    out(active[user][i]) = g[user](i);
  return out;
}

MatC LsfdStats::ups1_full(int user, int interferer, int L) const {
  MatC out = MatC::Zero(L, L);
  const auto& idx = active[user];
  const MatC& m = ups1[user][interferer];
  for (std::size_t a = 0; a < idx.size(); ++a)
    for (std::size_t b = 0; b < idx.size(); ++b) out(idx[a], idx[b]) = m(a, b);
  return out;
}

VecD LsfdStats::ups2_full(int user, int L) const {
  VecD out = VecD::Zero(L);
  for (std::size_t i = 0; i < active[user].size(); ++i)
    out(active[user][i]) = ups2[user](i);
  return out;
}

LsfdStats estimate_lsfd_stats(const NetworkRealization& rz,
                              const ServiceMap& map, int n_stat,
                              std::uint64_t seed) {
  if (n_stat < 1) throw std::invalid_argument("n_stat must be >= 1");
  const int K = map.K;
  const int L = map.L;

  LsfdStats st;
  st.active = map.aps_of_user;
  st.samples_used = n_stat;
  st.g.resize(K);
  st.ups1.resize(K);
  st.ups2.resize(K);
  for (int k = 0; k < K; ++k) {
    int m = static_cast<int>(st.active[k].size());
    st.g[k] = VecC::Zero(m);
    st.ups2[k] = VecD::Zero(m);
    st.ups1[k].assign(K, MatC::Zero(m, m));
  }

  // Slot of user k in the served list of AP l, -1 when unserved.
  std::vector<std::vector<int>> slot(L, std::vector<int>(K, -1));
  for (int l = 0; l < L; ++l)
    for (std::size_t s = 0; s < map.served_by_ap[l].size(); ++s)
      slot[l][map.served_by_ap[l][s]] = static_cast<int>(s);

  LinkGrid<VecC> h, h_hat;
  std::vector<std::vector<VecC>> filters(L);
  VecC v;

  for (int r = 0; r < n_stat; ++r) {
    rng::Stream ch = rng::make_stream(seed, r, "lsfd_channel");
    rng::Stream pn = rng::make_stream(seed, r, "lsfd_pilot");
    draw_channels(rz, ch, h);
    mmse_estimate(rz, h, pn, h_hat);
    for (int l = 0; l < L; ++l)
      mmse_filters(h_hat, rz.C, rz.eta, rz.sigma2, map.served_by_ap[l], l,
                   filters[l]);

    for (int k = 0; k < K; ++k) {
      const auto& aps = st.active[k];
      const int m = static_cast<int>(aps.size());
      if (m == 0) continue;
      v.resize(m);
      for (int idx = 0; idx < m; ++idx) {
        int l = aps[idx];
        const VecC& w = filters[l][slot[l][k]];
        st.g[k](idx) += w.dot(h(k, l));
        st.ups2[k](idx) += w.squaredNorm();
      }
      for (int i = 0; i < K; ++i) {
        for (int idx = 0; idx < m; ++idx) {
          int l = aps[idx];
          v(idx) = filters[l][slot[l][k]].dot(h(i, l));
        }
        st.ups1[k][i].noalias() += v * v.adjoint();
      }
    }
  }

  const double inv = 1.0 / n_stat;
  for (int k = 0; k < K; ++k) {
    st.g[k] *= inv;
    st.ups2[k] *= inv;
    for (int i = 0; i < K; ++i) {
      st.ups1[k][i] *= inv;
      st.ups1[k][i] = 0.5 * (st.ups1[k][i] + st.ups1[k][i].adjoint().eval());
    }
  }
  return st;
}

VecC LsfdWeights::full(int user, int L) const {
  VecC out = VecC::Zero(L);
  for (std::size_t i = 0; i < active[user].size(); ++i)
    out(active[user][i]) = a[user](i);
  return out;
}

LsfdWeights lsfd_weights(const LsfdStats& stats, const ServiceMap& map,
                         const VecD& eta, double sigma2) {
  LsfdWeights w;
  w.active = stats.active;
  w.a.resize(map.K);
  for (int k = 0; k < map.K; ++k) {
    const int m = static_cast<int>(stats.active[k].size());
    if (m == 0) {
      w.a[k] = VecC();
      continue;
    }
    MatC A = MatC::Zero(m, m);
    for (int i : map.coserved[k]) A += eta(i) * stats.ups1[k][i];
    A += sigma2 * stats.ups2[k].asDiagonal().toDenseMatrix().cast<cplx>();

    Eigen::LDLT<MatC> ldlt(A);
    VecC a;
    if (ldlt.info() == Eigen::Success &&
        (a = ldlt.solve(stats.g[k])).allFinite()) {
      w.a[k] = a;
    } else {
      double ridge = 1e-12 * std::fabs(A.real().trace()) / m;
      A += ridge * MatC::Identity(m, m);
      w.a[k] = MatC(A).ldlt().solve(stats.g[k]);
      w.regularized = true;
    }
  }
  return w;
}

std::pair<double, double> sinr_se(const LsfdStats& stats, const VecC& a_k,
                                  int user, const VecD& eta, double sigma2,
                                  int tau_p, int tau_c) {
  const double prelog = 1.0 - static_cast<double>(tau_p) / tau_c;
  const int m = static_cast<int>(stats.active[user].size());
  if (m == 0 || a_k.size() == 0) return {0.0, 0.0};

  const int K = static_cast<int>(stats.ups1[user].size());
  MatC denom_mat = MatC::Zero(m, m);
  for (int i = 0; i < K; ++i) denom_mat += eta(i) * stats.ups1[user][i];
  denom_mat -= eta(user) * (stats.g[user] * stats.g[user].adjoint());
  denom_mat += sigma2 * stats.ups2[user].asDiagonal().toDenseMatrix().cast<cplx>();

  double num = eta(user) * std::norm(a_k.dot(stats.g[user]));
  double den = std::real(a_k.dot(denom_mat * a_k));
  double sinr = den > 0.0 ? std::max(num / den, 0.0) : 0.0;
  return {sinr, prelog * std::log2(1.0 + sinr)};
}

CombinedLink combine_user(const SoftEstimateBatch& batch,
                          const std::vector<LocalDetector>& detectors,
                          const LsfdWeights& weights, const ServiceMap& map,
                          int user) {
  CombinedLink link;
  const auto& aps = map.aps_of_user[user];
  if (aps.empty()) {
    // Should be prevented by the access guarantee; emit a flagged zero stream.
    int tau_u = 0;
    for (const auto& per_ap : batch.x_hat)
      for (const auto& v : per_ap) tau_u = std::max<int>(tau_u, v.size());
    link.x_tilde = VecC::Zero(tau_u);
    link.empty = true;
    return link;
  }

  const VecC& a = weights.a[user];
  for (std::size_t idx = 0; idx < aps.size(); ++idx) {
    int l = aps[idx];
    int s = detectors[l].slot_of(user);
    cplx wgt = std::conj(a(idx));
    if (link.x_tilde.size() == 0)
      link.x_tilde = VecC::Zero(batch.x_hat[l][s].size());
    link.x_tilde += wgt * batch.x_hat[l][s];
    link.alpha += wgt * detectors[l].alpha[s];
  }
  double mean_power = link.x_tilde.squaredNorm() / link.x_tilde.size();
  link.gamma2 = std::max(mean_power - std::norm(link.alpha), 1e-12);
  return link;
}

IddUserResult run_idd_user(const LdpcCode& code, const CombinedLink& link,
                           const IddConfig& cfg) {
  const int n = code.n;
  const int tau_u = static_cast<int>(link.x_tilde.size());
  if (2 * tau_u != n) throw std::invalid_argument("frame/codeword mismatch");

  IddUserResult res;
  VecD prior = VecD::Zero(n);
  VecD lg(n);
  DecodeResult dec;
  res.outer_used = 0;

  for (int outer = 1; outer <= cfg.n_outer; ++outer) {
    for (int t = 0; t < tau_u; ++t) {
      auto [l1, l2] = bit_llr(link.x_tilde(t), link.alpha, link.gamma2,
                              prior(2 * t), prior(2 * t + 1));
      lg(2 * t) = l1;
      lg(2 * t + 1) = l2;
    }
    dec = decode(code, lg, cfg.n_inner);
    prior = dec.extrinsic;

    if (cfg.keep_history) {
      std::vector<std::uint8_t> info(code.k_info);
      for (int j = 0; j < code.k_info; ++j)
        info[j] = dec.hard[code.info_positions[j]];
      res.info_history.push_back(std::move(info));
      res.extrinsic_history.push_back(dec.extrinsic);
    }
    if (dec.converged && res.outer_used == 0) res.outer_used = outer;
  }
  if (res.outer_used == 0) res.outer_used = cfg.n_outer;

  res.converged = dec.converged;
  res.info_bits.resize(code.k_info);
  for (int j = 0; j < code.k_info; ++j)
    res.info_bits[j] = dec.hard[code.info_positions[j]];
  return res;
}

std::vector<IddUserResult> run_idd(const LdpcCode& code,
                                   const std::vector<CombinedLink>& links,
                                   const IddConfig& cfg) {
  std::vector<IddUserResult> out;
  out.reserve(links.size());
  for (const auto& link : links) out.push_back(run_idd_user(code, link, cfg));
  return out;
}

std::string llr_histogram_json(const VecD& llrs, int iteration, int user) {
  constexpr int kBins = 16;
  std::array<int, kBins> bins{};
  for (int i = 0; i < llrs.size(); ++i) {
    double v = clamp_llr(llrs(i));
    int b = static_cast<int>((v + kLlrClamp) / (2.0 * kLlrClamp) * kBins);
    bins[std::clamp(b, 0, kBins - 1)]++;
  }
  nlohmann::json j;
  j["user"] = user;
  j["iteration"] = iteration;
  j["lo"] = -kLlrClamp;
  j["hi"] = kLlrClamp;
  j["counts"] = bins;
  return j.dump();
}

}  // namespace cfsim
