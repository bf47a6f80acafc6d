// SPDX-License-Identifier: Apache-2.0

#include "cfsim/ap_frontend.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Eigenvalues>
#include <json.hpp>

#include "cfsim/codec.hpp"

namespace cfsim {

namespace {

constexpr double kGammaFloor = 1e-12;

double log_sigmoid(double v) {
  // log(1 / (1 + e^-v)), stable for both signs.
  return v >= 0.0 ? -std::log1p(std::exp(-v)) : v - std::log1p(std::exp(v));
}

/// Exact two-term log-sum-exp.
double lse2(double a, double b) {
  double hi = std::max(a, b);
  return hi + std::log1p(std::exp(-std::fabs(a - b)));
}

}  // namespace

int LocalDetector::slot_of(int user) const {
  auto it = std::lower_bound(served.begin(), served.end(), user);
  if (it == served.end() || *it != user) return -1;
  return static_cast<int>(it - served.begin());
}

VecC hermitian_solve(const MatC& a, const VecC& b) {
  Eigen::LDLT<MatC> ldlt(a);
  if (ldlt.info() == Eigen::Success) {
    VecC x = ldlt.solve(b);
    if (x.allFinite()) return x;
  }
  // Pseudoinverse through the eigenbasis.
  Eigen::SelfAdjointEigenSolver<MatC> es(a);
  const VecD& ev = es.eigenvalues();
  double tol = 1e-12 * std::fabs(a.real().trace());
  VecC y = es.eigenvectors().adjoint() * b;
  for (int i = 0; i < ev.size(); ++i)
    y(i) = ev(i) > tol ? y(i) / ev(i) : cplx(0.0, 0.0);
  return es.eigenvectors() * y;
}

namespace {

/// Shared filter construction; optionally hands back the per-user model
/// covariance (the same matrix the filter inverts).
void filters_impl(const LinkGrid<VecC>& h_hat, const LinkGrid<MatC>& C,
                  const VecD& eta, double sigma2,
                  const std::vector<int>& served, int ap,
                  std::vector<VecC>& w_out, std::vector<MatC>* gram_out) {
  const int N = h_hat.empty() ? 0 : static_cast<int>(h_hat(0, 0).size());
  MatC base = sigma2 * MatC::Identity(N, N);
  double eta_sum = 0.0;
  for (int i : served) {
    base.noalias() += eta(i) * (h_hat(i, ap) * h_hat(i, ap).adjoint());
    eta_sum += eta(i);
  }
  w_out.resize(served.size());
  if (gram_out) gram_out->resize(served.size());
  for (std::size_t s = 0; s < served.size(); ++s) {
    int k = served[s];
    MatC gram = base + eta_sum * C(k, ap);
    w_out[s] = eta(k) * hermitian_solve(gram, h_hat(k, ap));
    if (gram_out) (*gram_out)[s] = std::move(gram);
  }
}

}  // namespace

void mmse_filters(const LinkGrid<VecC>& h_hat, const LinkGrid<MatC>& C,
                  const VecD& eta, double sigma2,
                  const std::vector<int>& served, int ap,
                  std::vector<VecC>& out) {
  filters_impl(h_hat, C, eta, sigma2, served, ap, out, nullptr);
}

VecC local_mmse_filter(const NetworkRealization& rz,
                       const std::vector<int>& served, int ap, int user) {
  const int N = rz.cfg.antennas;
  MatC gram = rz.sigma2 * MatC::Identity(N, N);
  double eta_sum = 0.0;
  for (int i : served) {
    gram.noalias() += rz.eta(i) * (rz.h_hat(i, ap) * rz.h_hat(i, ap).adjoint());
    eta_sum += rz.eta(i);
  }
  gram += eta_sum * rz.C(user, ap);
  return rz.eta(user) * hermitian_solve(gram, rz.h_hat(user, ap));
}

std::pair<cplx, double> awgn_params(const VecC& w, const VecC& h_hat,
                                    const MatC& psi) {
  cplx alpha = w.dot(h_hat);  // Eigen dot conjugates the left operand
  double power = std::real(w.dot(psi * w));
  double gamma2 = std::max(power - std::norm(alpha), kGammaFloor);
  return {alpha, gamma2};
}

LocalDetector build_local_detector(const NetworkRealization& rz,
                                   const std::vector<int>& served, int ap) {
  LocalDetector det;
  det.ap = ap;
  det.served = served;
  std::sort(det.served.begin(), det.served.end());

  std::vector<MatC> grams;
  filters_impl(rz.h_hat, rz.C, rz.eta, rz.sigma2, det.served, ap, det.filters,
               &grams);
  det.alpha.resize(det.served.size());
  det.gamma2.resize(det.served.size());
  for (std::size_t s = 0; s < det.served.size(); ++s) {
    int k = det.served[s];
    // Soft estimates are later divided by sqrt(eta_k); scale the model
    // covariance accordingly so (alpha, gamma2) describe unit-energy symbols.
    auto [alpha, gamma2] = awgn_params(det.filters[s], rz.h_hat(k, ap),
                                       grams[s] / rz.eta(k));
    det.alpha[s] = alpha;
    det.gamma2[s] = gamma2;
  }
  return det;
}

std::vector<LocalDetector> build_local_detectors(const NetworkRealization& rz,
                                                 const ServiceMap& map) {
  std::vector<LocalDetector> out;
  out.reserve(map.L);
  for (int l = 0; l < map.L; ++l)
    out.push_back(build_local_detector(rz, map.served_by_ap[l], l));
  return out;
}

cplx local_soft_estimate(const VecC& w, const VecC& y, int d) {
  if (!d) return {0.0, 0.0};
  return w.dot(y);
}

std::array<double, 4> prior_from_llr(double lc1, double lc2) {
  lc1 = clamp_llr(lc1);
  lc2 = clamp_llr(lc2);
  std::array<double, 4> p;
  for (int s = 0; s < 4; ++s) {
    double sign1 = (s & 2) ? 1.0 : -1.0;
    double sign2 = (s & 1) ? 1.0 : -1.0;
    p[s] = std::exp(log_sigmoid(sign1 * lc1) + log_sigmoid(sign2 * lc2));
  }
  return p;
}

std::pair<double, double> bit_llr(cplx x_hat, cplx alpha, double gamma2,
                                  double lc1, double lc2) {
  lc1 = clamp_llr(lc1);
  lc2 = clamp_llr(lc2);

  double logw[4];
  for (int s = 0; s < 4; ++s) {
    cplx diff = x_hat - alpha * qpsk_point(s);
    double sign1 = (s & 2) ? 1.0 : -1.0;
    double sign2 = (s & 1) ? 1.0 : -1.0;
    logw[s] = -std::norm(diff) / gamma2 + log_sigmoid(sign1 * lc1) +
              log_sigmoid(sign2 * lc2);
  }
  // Bit 1 selects the real axis (symbols 2,3 vs 0,1); bit 2 the imaginary
  // axis (symbols 1,3 vs 0,2).
  double lg1 = lse2(logw[2], logw[3]) - lse2(logw[0], logw[1]) - lc1;
  double lg2 = lse2(logw[1], logw[3]) - lse2(logw[0], logw[2]) - lc2;
  return {clamp_llr(lg1), clamp_llr(lg2)};
}

SoftEstimateBatch detect_frames(const std::vector<LocalDetector>& detectors,
                                const std::vector<MatC>& y, const VecD& eta) {
  SoftEstimateBatch batch;
  batch.x_hat.resize(detectors.size());
  batch.llr.resize(detectors.size());
  for (std::size_t l = 0; l < detectors.size(); ++l) {
    const auto& det = detectors[l];
    const int tau_u = static_cast<int>(y[l].cols());
    batch.x_hat[l].resize(det.served.size());
    batch.llr[l].resize(det.served.size());
    for (std::size_t s = 0; s < det.served.size(); ++s) {
      int k = det.served[s];
      double inv_amp = 1.0 / std::sqrt(eta(k));
      VecC est(tau_u);
      VecD llr(2 * tau_u);
      for (int t = 0; t < tau_u; ++t) {
        est(t) = inv_amp * local_soft_estimate(det.filters[s], y[l].col(t), 1);
        auto [lg1, lg2] = bit_llr(est(t), det.alpha[s], det.gamma2[s], 0.0, 0.0);
        llr(2 * t) = lg1;
        llr(2 * t + 1) = lg2;
      }
      batch.x_hat[l][s] = std::move(est);
      batch.llr[l][s] = std::move(llr);
    }
  }
  return batch;
}

MatD mean_abs_llr(const SoftEstimateBatch& batch,
                  const std::vector<LocalDetector>& detectors, int users,
                  int aps) {
  MatD out = MatD::Zero(users, aps);
  for (int l = 0; l < aps; ++l) {
    const auto& det = detectors[l];
    for (std::size_t s = 0; s < det.served.size(); ++s)
      out(det.served[s], l) = batch.llr[l][s].cwiseAbs().mean();
  }
  return out;
}

std::string link_diagnostics_json(const std::vector<LocalDetector>& detectors) {
  nlohmann::json j = nlohmann::json::array();
  for (const auto& det : detectors) {
    for (std::size_t s = 0; s < det.served.size(); ++s) {
      j.push_back({{"ap", det.ap},
                   {"user", det.served[s]},
                   {"alpha_re", det.alpha[s].real()},
                   {"alpha_im", det.alpha[s].imag()},
                   {"gamma2", det.gamma2[s]}});
    }
  }
  return j.dump();
}

}  // namespace cfsim
