#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <string>

#include "errors.hpp"

namespace defectscope {

inline constexpr std::size_t kMaxDims = 3;

/// A point of R^d with d <= 3. Used for positions x, frequencies xi and
/// points eta on a manifold P alike.
class Point {
 public:
  Point() = default;

  explicit Point(std::size_t dim) : dim_(dim) {
    if (dim == 0 || dim > kMaxDims) {
      throw ContractViolation("Point: dimension must be in [1, 3], got " + std::to_string(dim));
    }
  }

  Point(std::initializer_list<double> coords) : Point(coords.size()) {
    std::size_t k = 0;
    for (double c : coords) c_[k++] = c;
  }

  std::size_t dim() const noexcept { return dim_; }

  double& operator[](std::size_t k) noexcept { return c_[k]; }
  double operator[](std::size_t k) const noexcept { return c_[k]; }

  const double* begin() const noexcept { return c_.data(); }
  const double* end() const noexcept { return c_.data() + dim_; }
  double* begin() noexcept { return c_.data(); }
  double* end() noexcept { return c_.data() + dim_; }

  double norm_sq() const noexcept {
    double s = 0.0;
    for (std::size_t k = 0; k < dim_; ++k) s += c_[k] * c_[k];
    return s;
  }
  double norm() const noexcept { return std::sqrt(norm_sq()); }

  bool is_zero() const noexcept {
    for (std::size_t k = 0; k < dim_; ++k)
      if (c_[k] != 0.0) return false;
    return true;
  }

  Point& operator+=(const Point& o) noexcept {
    for (std::size_t k = 0; k < dim_; ++k) c_[k] += o.c_[k];
    return *this;
  }
  Point& operator-=(const Point& o) noexcept {
    for (std::size_t k = 0; k < dim_; ++k) c_[k] -= o.c_[k];
    return *this;
  }
  Point& operator*=(double s) noexcept {
    for (std::size_t k = 0; k < dim_; ++k) c_[k] *= s;
    return *this;
  }

  friend Point operator+(Point a, const Point& b) noexcept { return a += b; }
  friend Point operator-(Point a, const Point& b) noexcept { return a -= b; }
  friend Point operator*(Point a, double s) noexcept { return a *= s; }
  friend Point operator*(double s, Point a) noexcept { return a *= s; }

  friend bool operator==(const Point& a, const Point& b) noexcept {
    if (a.dim_ != b.dim_) return false;
    for (std::size_t k = 0; k < a.dim_; ++k)
      if (a.c_[k] != b.c_[k]) return false;
    return true;
  }

 private:
  std::array<double, kMaxDims> c_{};
  std::size_t dim_ = 0;
};

inline double distance(const Point& a, const Point& b) noexcept { return (a - b).norm(); }

}  // namespace defectscope
