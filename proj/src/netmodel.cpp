// SPDX-License-Identifier: Apache-2.0

#include "cfsim/netmodel.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <Eigen/Eigenvalues>
#include <json.hpp>

namespace cfsim {

double ScenarioConfig::noise_power_mw() const {
  double dbm = noise_psd_dbm_hz + 10.0 * std::log10(bandwidth_hz) + noise_figure_db;
  return std::pow(10.0, dbm / 10.0);
}

void ScenarioConfig::validate() const {
  if (aps < 1 || antennas < 1 || users < 1)
    throw std::invalid_argument("aps, antennas and users must be >= 1");
  if (area_side_m <= 0.0) throw std::invalid_argument("area_side_m must be positive");
  if (tau_p != tau_c - tau_u || tau_p <= 0)
    throw std::invalid_argument("tau_p must equal tau_c - tau_u and be positive");
  if (p_max_mw <= 0.0 || bandwidth_hz <= 0.0 || carrier_hz <= 0.0)
    throw std::invalid_argument("powers and frequencies must be positive");
  if (shadow_std_db < 0.0 || asd_deg < 0.0)
    throw std::invalid_argument("shadow_std_db and asd_deg must be nonnegative");
}

double pathloss_db(double distance_m) {
  return -30.5 - 36.7 * std::log10(distance_m);
}

NetworkRealization build_layout(const ScenarioConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  NetworkRealization rz;
  rz.cfg = cfg;
  rng::Stream rng(seed);

  const int L = cfg.aps;
  const int K = cfg.users;
  const double side = cfg.area_side_m;

  int root = static_cast<int>(std::llround(std::sqrt(static_cast<double>(L))));
  rz.ap_pos.reserve(L);
  if (root * root == L) {
    double cell = side / root;
    for (int i = 0; i < root; ++i)
      for (int j = 0; j < root; ++j)
        rz.ap_pos.emplace_back((i + 0.5) * cell, (j + 0.5) * cell);
  } else {
    for (int l = 0; l < L; ++l)
      rz.ap_pos.emplace_back(rng.uniform() * side, rng.uniform() * side);
  }

  rz.user_pos.reserve(K);
  for (int k = 0; k < K; ++k)
    rz.user_pos.emplace_back(rng.uniform() * side, rng.uniform() * side);

  rz.pilot_of.resize(K);
  int pilots_in_use = std::min(cfg.tau_p, K);
  rz.users_on_pilot.assign(pilots_in_use, {});
  for (int k = 0; k < K; ++k) {
    rz.pilot_of[k] = k % cfg.tau_p;
    rz.users_on_pilot[rz.pilot_of[k]].push_back(k);
  }
  for (int t = 0; t < pilots_in_use; ++t)
    if (!rz.users_on_pilot[t].empty()) rz.active_pilots.push_back(t);

  rz.beta = MatD::Zero(K, L);
  return rz;
}

void large_scale_fading(NetworkRealization& rz, rng::Stream& rng) {
  const auto& cfg = rz.cfg;
  for (int k = 0; k < cfg.users; ++k) {
    for (int l = 0; l < cfg.aps; ++l) {
      double horiz = (rz.user_pos[k] - rz.ap_pos[l]).norm();
      double dist = std::hypot(horiz, cfg.height_delta_m);
      double shadow = cfg.shadow_std_db > 0.0 ? cfg.shadow_std_db * rng.gauss() : 0.0;
      double beta_db = pathloss_db(dist) + shadow;
      rz.beta(k, l) = std::pow(10.0, beta_db / 10.0);
    }
  }
}

MatC spatial_correlation(double beta, double angle_rad, double asd_rad, int n) {
  if (asd_rad < 0.0) throw std::invalid_argument("asd must be nonnegative");
  if (n < 1) throw std::invalid_argument("antenna count must be >= 1");

  MatC r(n, n);
  const double pi = M_PI;
  const double s = std::sin(angle_rad);
  const double c = std::cos(angle_rad);
  for (int m = 0; m < n; ++m) {
    for (int q = 0; q < n; ++q) {
      double delta = pi * (m - q);
      double phase = delta * s;
      double spread = delta * c * asd_rad;
      double mag = beta * std::exp(-0.5 * spread * spread);
      r(m, q) = cplx(mag * std::cos(phase), mag * std::sin(phase));
    }
  }
  if (n == 1) return r;

  // The small-ASD closed form can have slightly negative eigenvalues; project
  // back onto the PSD cone.
  Eigen::SelfAdjointEigenSolver<MatC> es(r);
  VecD ev = es.eigenvalues();
  bool clipped = false;
  for (int i = 0; i < n; ++i) {
    if (ev(i) < 0.0) {
      ev(i) = 0.0;
      clipped = true;
    }
  }
  if (!clipped) return r;
  return es.eigenvectors() * ev.asDiagonal().toDenseMatrix().cast<cplx>() *
         es.eigenvectors().adjoint();
}

namespace {

MatC psd_sqrt(const MatC& r) {
  Eigen::LLT<MatC> llt(r);
  if (llt.info() == Eigen::Success) return llt.matrixL();
  // Semidefinite fallback.
  Eigen::SelfAdjointEigenSolver<MatC> es(r);
  VecD ev = es.eigenvalues().cwiseMax(0.0);
  return es.eigenvectors() * ev.cwiseSqrt().asDiagonal().toDenseMatrix().cast<cplx>() *
         es.eigenvectors().adjoint();
}

}  // namespace

void build_correlation(NetworkRealization& rz) {
  const auto& cfg = rz.cfg;
  const int N = cfg.antennas;
  const double asd = cfg.asd_deg * M_PI / 180.0;
  rz.R = LinkGrid<MatC>(cfg.users, cfg.aps);
  rz.R_sqrt = LinkGrid<MatC>(cfg.users, cfg.aps);
  for (int k = 0; k < cfg.users; ++k) {
    for (int l = 0; l < cfg.aps; ++l) {
      Eigen::Vector2d delta = rz.user_pos[k] - rz.ap_pos[l];
      double angle = std::atan2(delta.y(), delta.x());
      rz.R(k, l) = spatial_correlation(rz.beta(k, l), angle, asd, N);
      rz.R_sqrt(k, l) = psd_sqrt(rz.R(k, l));
    }
  }
}

void prepare_estimation(NetworkRealization& rz) {
  const auto& cfg = rz.cfg;
  const int N = cfg.antennas;
  const double tau_p = cfg.tau_p;
  rz.C = LinkGrid<MatC>(cfg.users, cfg.aps);
  rz.estimator = LinkGrid<MatC>(cfg.users, cfg.aps);
  rz.phi_regularized = false;

  for (int t : rz.active_pilots) {
    const auto& sharing = rz.users_on_pilot[t];
    for (int l = 0; l < cfg.aps; ++l) {
      MatC phi = rz.sigma2 * MatC::Identity(N, N);
      for (int i : sharing) phi += tau_p * rz.eta(i) * rz.R(i, l);

      Eigen::LLT<MatC> llt(phi);
      if (llt.info() != Eigen::Success) {
        double ridge = 1e-12 * phi.real().trace() / N;
        phi += ridge * MatC::Identity(N, N);
        llt.compute(phi);
        rz.phi_regularized = true;
      }
      MatC phi_inv = llt.solve(MatC::Identity(N, N));
      for (int k : sharing) {
        double scale = std::sqrt(rz.eta(k) * tau_p);
        rz.estimator(k, l) = scale * rz.R(k, l) * phi_inv;
        rz.C(k, l) = rz.R(k, l) -
                     rz.eta(k) * tau_p * rz.R(k, l) * phi_inv * rz.R(k, l);
        // Hermitize away rounding asymmetry.
        rz.C(k, l) = 0.5 * (rz.C(k, l) + rz.C(k, l).adjoint().eval());
      }
    }
  }
}

void draw_channels(const NetworkRealization& rz, rng::Stream& rng,
                   LinkGrid<VecC>& out) {
  const auto& cfg = rz.cfg;
  const int N = cfg.antennas;
  if (out.users() != cfg.users || out.aps() != cfg.aps)
    out = LinkGrid<VecC>(cfg.users, cfg.aps);
  VecC z(N);
  for (int k = 0; k < cfg.users; ++k) {
    for (int l = 0; l < cfg.aps; ++l) {
      for (int i = 0; i < N; ++i) z(i) = rng.cgauss();
      out(k, l) = rz.R_sqrt(k, l) * z;
    }
  }
}

void draw_channels(NetworkRealization& rz, rng::Stream& rng) {
  draw_channels(rz, rng, rz.h_true);
}

void mmse_estimate(const NetworkRealization& rz, const LinkGrid<VecC>& h,
                   rng::Stream& rng, LinkGrid<VecC>& h_hat_out) {
  const auto& cfg = rz.cfg;
  const int N = cfg.antennas;
  const double tau_p = cfg.tau_p;
  if (h_hat_out.users() != cfg.users || h_hat_out.aps() != cfg.aps)
    h_hat_out = LinkGrid<VecC>(cfg.users, cfg.aps);

  const double noise_std = std::sqrt(rz.sigma2);
  VecC y(N);
  for (int t : rz.active_pilots) {
    const auto& sharing = rz.users_on_pilot[t];
    for (int l = 0; l < cfg.aps; ++l) {
      y.setZero();
      for (int i : sharing) y += std::sqrt(rz.eta(i) * tau_p) * h(i, l);
      for (int a = 0; a < N; ++a) y(a) += noise_std * rng.cgauss();
      for (int k : sharing) h_hat_out(k, l) = rz.estimator(k, l) * y;
    }
  }
}

void mmse_estimate(NetworkRealization& rz, rng::Stream& rng) {
  mmse_estimate(rz, rz.h_true, rng, rz.h_hat);
}

std::string realization_snapshot(const NetworkRealization& rz,
                                 bool include_channels) {
  nlohmann::json j;
  j["version"] = 1;
  j["aps"] = rz.cfg.aps;
  j["antennas"] = rz.cfg.antennas;
  j["users"] = rz.cfg.users;
  j["sigma2"] = rz.sigma2;

  auto pos_array = [](const std::vector<Eigen::Vector2d>& v) {
    nlohmann::json a = nlohmann::json::array();
    for (const auto& p : v) a.push_back({p.x(), p.y()});
    return a;
  };
  j["ap_positions"] = pos_array(rz.ap_pos);
  j["user_positions"] = pos_array(rz.user_pos);
  j["pilot_of"] = rz.pilot_of;

  nlohmann::json beta = nlohmann::json::array();
  for (int k = 0; k < rz.beta.rows(); ++k) {
    nlohmann::json row = nlohmann::json::array();
    for (int l = 0; l < rz.beta.cols(); ++l) row.push_back(rz.beta(k, l));
    beta.push_back(row);
  }
  j["beta"] = beta;
  if (rz.eta.size() > 0)
    j["eta"] = std::vector<double>(rz.eta.data(), rz.eta.data() + rz.eta.size());

  if (include_channels && !rz.h_true.empty()) {
    auto grid_to_json = [&](const LinkGrid<VecC>& g) {
      nlohmann::json out = nlohmann::json::array();
      for (int k = 0; k < g.users(); ++k) {
        nlohmann::json row = nlohmann::json::array();
        for (int l = 0; l < g.aps(); ++l) {
          nlohmann::json vec = nlohmann::json::array();
          for (int a = 0; a < g(k, l).size(); ++a)
            vec.push_back({g(k, l)(a).real(), g(k, l)(a).imag()});
          row.push_back(vec);
        }
        out.push_back(row);
      }
      return out;
    };
    j["h_true"] = grid_to_json(rz.h_true);
    if (!rz.h_hat.empty()) j["h_hat"] = grid_to_json(rz.h_hat);
  }
  return j.dump(2);
}

}  // namespace cfsim
