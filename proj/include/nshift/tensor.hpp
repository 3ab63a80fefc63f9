#pragma once

#include <cassert>
#include <vector>

#include <Eigen/Dense>

namespace nshift {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Dense n×n×n array, addressed as (a, b, c).
class Tensor3 {
 public:
  Tensor3() = default;
  explicit Tensor3(int n) : n_(n), data_(static_cast<std::size_t>(n) * n * n, 0.0) {}

  int dim() const noexcept { return n_; }
  double& operator()(int a, int b, int c) { return data_[index(a, b, c)]; }
  double operator()(int a, int b, int c) const { return data_[index(a, b, c)]; }
  const std::vector<double>& data() const noexcept { return data_; }

 private:
  std::size_t index(int a, int b, int c) const {
    assert(a >= 0 && a < n_ && b >= 0 && b < n_ && c >= 0 && c < n_);
    return (static_cast<std::size_t>(a) * n_ + b) * n_ + c;
  }
  int n_ = 0;
  std::vector<double> data_;
};

/// Dense n×n×n×n array, addressed as (a, b, c, d).
class Tensor4 {
 public:
  Tensor4() = default;
  explicit Tensor4(int n)
      : n_(n), data_(static_cast<std::size_t>(n) * n * n * n, 0.0) {}

  int dim() const noexcept { return n_; }
  double& operator()(int a, int b, int c, int d) { return data_[index(a, b, c, d)]; }
  double operator()(int a, int b, int c, int d) const {
    return data_[index(a, b, c, d)];
  }
  const std::vector<double>& data() const noexcept { return data_; }

 private:
  std::size_t index(int a, int b, int c, int d) const {
    assert(a >= 0 && a < n_ && b >= 0 && b < n_ && c >= 0 && c < n_ && d >= 0 &&
           d < n_);
    return ((static_cast<std::size_t>(a) * n_ + b) * n_ + c) * n_ + d;
  }
  int n_ = 0;
  std::vector<double> data_;
};

}  // namespace nshift
