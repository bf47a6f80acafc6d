// SPDX-License-Identifier: Apache-2.0

#ifndef CFSIM_TYPES_HPP
#define CFSIM_TYPES_HPP

#include <complex>
#include <cstddef>
#include <vector>

#include <Eigen/Dense>

namespace cfsim {

using cplx = std::complex<double>;
using VecC = Eigen::VectorXcd;
using MatC = Eigen::MatrixXcd;
using VecD = Eigen::VectorXd;
using MatD = Eigen::MatrixXd;

/// Dense K-user by L-AP grid of per-link objects (channel vectors,
/// covariance matrices, ...). Row-major over users.
template <typename T>
class LinkGrid {
 public:
  LinkGrid() = default;
  LinkGrid(int users, int aps)
      : users_(users), aps_(aps), data_(static_cast<std::size_t>(users) * aps) {}

  T& operator()(int user, int ap) { return data_[index(user, ap)]; }
  const T& operator()(int user, int ap) const { return data_[index(user, ap)]; }

  int users() const { return users_; }
  int aps() const { return aps_; }
  bool empty() const { return data_.empty(); }

 private:
  std::size_t index(int user, int ap) const {
    return static_cast<std::size_t>(user) * aps_ + ap;
  }

  int users_ = 0;
  int aps_ = 0;
  std::vector<T> data_;
};

}  // namespace cfsim

#endif  // CFSIM_TYPES_HPP
