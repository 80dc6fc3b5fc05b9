#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <string>

#include "errors.hpp"
#include "point.hpp"

namespace defectscope {

/// Uniform periodic grid on the box prod_k [0, L_k) with N points per axis.
///
/// Flat indices are row-major with axis 0 slowest. The frequency lattice on
/// axis k is {m / L_k : -N/2 <= m < N/2}, stored in FFT order (m >= 0 first,
/// then the negative modes).
class GridSpec {
 public:
  using Modes = std::array<std::int64_t, kMaxDims>;

  GridSpec(std::size_t dims, std::size_t points_per_axis, double box_length = 1.0)
      : GridSpec(dims, points_per_axis, uniform_lengths(dims, box_length)) {}

  GridSpec(std::size_t dims, std::size_t points_per_axis, std::array<double, kMaxDims> lengths)
      : dims_(dims), n_(points_per_axis), lengths_(lengths) {
    if (dims == 0 || dims > kMaxDims)
      throw ContractViolation("GridSpec: dims must be in [1, 3], got " + std::to_string(dims));
    if (n_ < 2 || (n_ & (n_ - 1)) != 0)
      throw ContractViolation("GridSpec: points per axis must be a power of two >= 2, got " +
                              std::to_string(n_));
    for (std::size_t k = 0; k < dims_; ++k) {
      if (!(lengths_[k] > 0.0) || !std::isfinite(lengths_[k]))
        throw ContractViolation("GridSpec: box lengths must be positive and finite");
    }
    size_ = 1;
    for (std::size_t k = 0; k < dims_; ++k) size_ *= n_;
    if (size_ < 4) throw ContractViolation("GridSpec: total point count must be at least 4");
  }

  std::size_t dims() const noexcept { return dims_; }
  std::size_t points_per_axis() const noexcept { return n_; }
  std::size_t size() const noexcept { return size_; }
  double box_length(std::size_t k) const noexcept { return lengths_[k]; }
  const std::array<double, kMaxDims>& box_lengths() const noexcept { return lengths_; }

  double spacing(std::size_t k) const noexcept { return lengths_[k] / static_cast<double>(n_); }

  /// (L/N)^d: quadrature weight of one physical cell.
  double cell_volume() const noexcept {
    double v = 1.0;
    for (std::size_t k = 0; k < dims_; ++k) v *= spacing(k);
    return v;
  }

  /// prod_k 1/L_k: quadrature weight of one frequency cell.
  double dual_cell_volume() const noexcept {
    double v = 1.0;
    for (std::size_t k = 0; k < dims_; ++k) v /= lengths_[k];
    return v;
  }

  std::array<std::size_t, kMaxDims> axis_indices(std::size_t flat) const noexcept {
    std::array<std::size_t, kMaxDims> idx{};
    for (std::size_t k = dims_; k-- > 0;) {
      idx[k] = flat % n_;
      flat /= n_;
    }
    return idx;
  }

  std::size_t flat_index(const std::array<std::size_t, kMaxDims>& idx) const noexcept {
    std::size_t flat = 0;
    for (std::size_t k = 0; k < dims_; ++k) flat = flat * n_ + idx[k];
    return flat;
  }

  Point position(std::size_t flat) const {
    const auto idx = axis_indices(flat);
    Point x(dims_);
    for (std::size_t k = 0; k < dims_; ++k) x[k] = static_cast<double>(idx[k]) * spacing(k);
    return x;
  }

  /// Signed lattice mode numbers m_k of a flat frequency index.
  Modes modes(std::size_t flat) const noexcept {
    const auto idx = axis_indices(flat);
    Modes m{};
    const auto half = static_cast<std::int64_t>(n_ / 2);
    for (std::size_t k = 0; k < dims_; ++k) {
      const auto i = static_cast<std::int64_t>(idx[k]);
      m[k] = i < half ? i : i - static_cast<std::int64_t>(n_);
    }
    return m;
  }

  Point frequency(std::size_t flat) const {
    const auto m = modes(flat);
    Point xi(dims_);
    for (std::size_t k = 0; k < dims_; ++k) xi[k] = static_cast<double>(m[k]) / lengths_[k];
    return xi;
  }

  bool mode_in_band(std::int64_t m) const noexcept {
    const auto half = static_cast<std::int64_t>(n_ / 2);
    return m >= -half && m < half;
  }

  /// Flat index of signed modes; modes are wrapped periodically.
  std::size_t flat_from_modes(const Modes& m) const noexcept {
    std::array<std::size_t, kMaxDims> idx{};
    const auto n = static_cast<std::int64_t>(n_);
    for (std::size_t k = 0; k < dims_; ++k) idx[k] = static_cast<std::size_t>(((m[k] % n) + n) % n);
    return flat_index(idx);
  }

  /// Largest |xi| on the lattice.
  double nyquist_radius() const noexcept {
    double s = 0.0;
    for (std::size_t k = 0; k < dims_; ++k) {
      const double f = static_cast<double>(n_ / 2) / lengths_[k];
      s += f * f;
    }
    return std::sqrt(s);
  }

  /// Periodic minimal-image displacement x - y.
  Point displacement(const Point& x, const Point& y) const {
    Point d = x - y;
    for (std::size_t k = 0; k < dims_; ++k) {
      const double L = lengths_[k];
      d[k] -= L * std::round(d[k] / L);
    }
    return d;
  }

  friend bool operator==(const GridSpec& a, const GridSpec& b) noexcept {
    if (a.dims_ != b.dims_ || a.n_ != b.n_) return false;
    for (std::size_t k = 0; k < a.dims_; ++k)
      if (a.lengths_[k] != b.lengths_[k]) return false;
    return true;
  }

 private:
  static std::array<double, kMaxDims> uniform_lengths(std::size_t dims, double L) {
    std::array<double, kMaxDims> l{};
    for (std::size_t k = 0; k < kMaxDims; ++k) l[k] = k < dims ? L : 1.0;
    return l;
  }

  std::size_t dims_;
  std::size_t n_;
  std::array<double, kMaxDims> lengths_;
  std::size_t size_ = 1;
};

}  // namespace defectscope
