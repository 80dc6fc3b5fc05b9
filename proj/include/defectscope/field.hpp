#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <span>
#include <utility>
#include <vector>

#include "errors.hpp"
#include "grid.hpp"

namespace defectscope {

using Complex = std::complex<double>;

enum class Space { physical, frequency };

/// Complex samples of a function on a periodic grid, either in physical space
/// or as Fourier coefficients on the frequency lattice.
class SampledField {
 public:
  SampledField(GridSpec grid, std::vector<Complex> values, Space space = Space::physical)
      : grid_(grid), values_(std::move(values)), space_(space) {
    if (values_.size() != grid_.size())
      throw ContractViolation("SampledField: value count does not match grid size");
  }

  static SampledField zeros(const GridSpec& grid, Space space = Space::physical) {
    return SampledField(grid, std::vector<Complex>(grid.size()), space);
  }

  static SampledField constant(const GridSpec& grid, Complex value) {
    return SampledField(grid, std::vector<Complex>(grid.size(), value));
  }

  /// Samples f at every grid position (physical space).
  template <class F>
  static SampledField sample(const GridSpec& grid, F&& f) {
    std::vector<Complex> v(grid.size());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = Complex(f(grid.position(i)));
    return SampledField(grid, std::move(v));
  }

  /// Samples g at every lattice frequency (frequency space).
  template <class G>
  static SampledField sample_spectrum(const GridSpec& grid, G&& g) {
    std::vector<Complex> v(grid.size());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = Complex(g(grid.frequency(i)));
    return SampledField(grid, std::move(v), Space::frequency);
  }

  const GridSpec& grid() const noexcept { return grid_; }
  Space space() const noexcept { return space_; }
  std::size_t size() const noexcept { return values_.size(); }

  std::span<const Complex> values() const noexcept { return values_; }
  std::span<Complex> values() noexcept { return values_; }
  Complex operator[](std::size_t i) const noexcept { return values_[i]; }
  Complex& operator[](std::size_t i) noexcept { return values_[i]; }

  /// Discrete L2 norm squared with the quadrature weight of the field's space.
  double norm_sq() const noexcept {
    double s = 0.0;
    for (const auto& v : values_) s += std::norm(v);
    return s * (space_ == Space::physical ? grid_.cell_volume() : grid_.dual_cell_volume());
  }

  double sup_norm() const noexcept {
    double m = 0.0;
    for (const auto& v : values_) m = std::max(m, std::abs(v));
    return m;
  }

  /// Largest |Im| relative to max(1, sup|.|).
  double imaginary_defect() const noexcept {
    double m = 0.0;
    for (const auto& v : values_) m = std::max(m, std::abs(v.imag()));
    return m / std::max(1.0, sup_norm());
  }

  bool is_real(double tol = 1e-12) const noexcept { return imaginary_defect() <= tol; }

  SampledField& operator+=(const SampledField& o) {
    require_compatible(o, "operator+=");
    for (std::size_t i = 0; i < values_.size(); ++i) values_[i] += o.values_[i];
    return *this;
  }
  SampledField& operator-=(const SampledField& o) {
    require_compatible(o, "operator-=");
    for (std::size_t i = 0; i < values_.size(); ++i) values_[i] -= o.values_[i];
    return *this;
  }
  SampledField& operator*=(Complex s) noexcept {
    for (auto& v : values_) v *= s;
    return *this;
  }

  friend SampledField operator+(SampledField a, const SampledField& b) { return a += b; }
  friend SampledField operator-(SampledField a, const SampledField& b) { return a -= b; }
  friend SampledField operator*(SampledField a, Complex s) { return a *= s; }
  friend SampledField operator*(Complex s, SampledField a) { return a *= s; }

  SampledField conj() const {
    SampledField out = *this;
    for (auto& v : out.values_) v = std::conj(v);
    return out;
  }

  void require_compatible(const SampledField& o, const char* where) const {
    if (!(grid_ == o.grid_)) throw ContractViolation(std::string(where) + ": grid mismatch");
    if (space_ != o.space_) throw ContractViolation(std::string(where) + ": space mismatch");
  }

 private:
  GridSpec grid_;
  std::vector<Complex> values_;
  Space space_;
};

/// Physical-space L2 inner product sum_x f conj(g) h^d.
inline Complex inner_product(const SampledField& f, const SampledField& g) {
  f.require_compatible(g, "inner_product");
  Complex s{};
  for (std::size_t i = 0; i < f.size(); ++i) s += f[i] * std::conj(g[i]);
  return s * (f.space() == Space::physical ? f.grid().cell_volume() : f.grid().dual_cell_volume());
}

}  // namespace defectscope
