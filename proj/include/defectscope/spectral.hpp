#pragma once

#include <fftw3.h>

#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <tuple>
#include <vector>

#include "errors.hpp"
#include "field.hpp"
#include "grid.hpp"

namespace defectscope {

enum class Direction { forward, inverse };

namespace detail {

// FFTW planning is not thread-safe; execution of an existing plan on fresh
// arrays is. Plans are created once per (dims, N, sign) under a lock and
// reused through the new-array interface.
class FftPlanCache {
 public:
  static FftPlanCache& instance() {
    static FftPlanCache cache;
    return cache;
  }

  fftw_plan get(std::size_t dims, std::size_t n, int sign) {
    std::lock_guard lock(mutex_);
    const auto key = std::make_tuple(dims, n, sign);
    if (auto it = plans_.find(key); it != plans_.end()) return it->second;
    std::size_t total = 1;
    int shape[3];
    for (std::size_t k = 0; k < dims; ++k) {
      shape[k] = static_cast<int>(n);
      total *= n;
    }
    std::vector<Complex> in(total), out(total);
    fftw_plan p = fftw_plan_dft(static_cast<int>(dims), shape, reinterpret_cast<fftw_complex*>(in.data()),
                                reinterpret_cast<fftw_complex*>(out.data()), sign,
                                FFTW_ESTIMATE | FFTW_UNALIGNED);
    if (p == nullptr) throw NumericFailure("FFTW failed to create a plan");
    plans_.emplace(key, p);
    return p;
  }

  ~FftPlanCache() {
    for (auto& [key, p] : plans_) fftw_destroy_plan(p);
  }

 private:
  FftPlanCache() = default;
  std::mutex mutex_;
  std::map<std::tuple<std::size_t, std::size_t, int>, fftw_plan> plans_;
};

inline void execute_fft(const GridSpec& grid, const std::vector<Complex>& in, std::vector<Complex>& out,
                        int sign) {
  fftw_plan p = FftPlanCache::instance().get(grid.dims(), grid.points_per_axis(), sign);
  // fftw_execute_dft does not modify its input for out-of-place complex plans.
  fftw_execute_dft(p, reinterpret_cast<fftw_complex*>(const_cast<Complex*>(in.data())),
                   reinterpret_cast<fftw_complex*>(out.data()));
}

}  // namespace detail

/// Discrete Fourier transform with the kernel exp(-2 pi i x.xi).
///
/// forward:  F u(xi) = h^d  sum_x u(x) e^{-2 pi i x.xi}
/// inverse:  u(x)    = L^-d sum_xi F u(xi) e^{+2 pi i x.xi}
///
/// so the forward sum is the Riemann sum of the continuous transform and the
/// pair is an exact inverse.
inline SampledField dft(const SampledField& field, Direction direction) {
  const auto& grid = field.grid();
  const bool forward = direction == Direction::forward;
  if (forward && field.space() != Space::physical)
    throw ContractViolation("dft: forward transform requires a physical-space field");
  if (!forward && field.space() != Space::frequency)
    throw ContractViolation("dft: inverse transform requires a frequency-space field");

  std::vector<Complex> in(field.values().begin(), field.values().end());
  std::vector<Complex> out(grid.size());
  detail::execute_fft(grid, in, out, forward ? FFTW_FORWARD : FFTW_BACKWARD);
  const double scale = forward ? grid.cell_volume() : grid.dual_cell_volume();
  for (auto& v : out) v *= scale;
  return SampledField(grid, std::move(out), forward ? Space::frequency : Space::physical);
}

inline SampledField forward_dft(const SampledField& f) { return dft(f, Direction::forward); }
inline SampledField inverse_dft(const SampledField& f) { return dft(f, Direction::inverse); }

/// Multiplication operator B u = b u.
inline SampledField window_apply(const SampledField& field, const SampledField& window) {
  if (field.space() != Space::physical || window.space() != Space::physical)
    throw ContractViolation("window_apply: both fields must be in physical space");
  if (!(field.grid() == window.grid())) throw ContractViolation("window_apply: grid mismatch");
  SampledField out = field;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= window[i];
  return out;
}

// ---------------------------------------------------------------------------
// Canonical windows. All are periodized through the minimal-image displacement
// from their centre, so they are continuous on the torus whenever their
// support (or numerical support) is shorter than the box.

inline Point box_center(const GridSpec& grid) {
  Point c(grid.dims());
  for (std::size_t k = 0; k < grid.dims(); ++k) c[k] = 0.5 * grid.box_length(k);
  return c;
}

/// exp(-|x - c|^2 / (2 width^2)).
inline SampledField gaussian_window(const GridSpec& grid, double width, const Point& center) {
  if (!(width > 0.0)) throw ContractViolation("gaussian_window: width must be positive");
  return SampledField::sample(grid, [&](const Point& x) {
    const double r2 = grid.displacement(x, center).norm_sq();
    return std::exp(-0.5 * r2 / (width * width));
  });
}

inline SampledField gaussian_window(const GridSpec& grid, double width) {
  return gaussian_window(grid, width, box_center(grid));
}

/// C-infinity tensor bump prod_k exp(1 - 1/(1 - s_k^2)), s_k = (x_k - c_k)/radius,
/// equal to 1 at the centre and supported in the cube of half-side `radius`.
inline SampledField smooth_bump(const GridSpec& grid, double radius, const Point& center) {
  if (!(radius > 0.0)) throw ContractViolation("smooth_bump: radius must be positive");
  return SampledField::sample(grid, [&](const Point& x) {
    const Point d = grid.displacement(x, center);
    double v = 1.0;
    for (std::size_t k = 0; k < grid.dims(); ++k) {
      const double s = d[k] / radius;
      if (std::abs(s) >= 1.0) return 0.0;
      v *= std::exp(1.0 - 1.0 / (1.0 - s * s));
    }
    return v;
  });
}

inline SampledField smooth_bump(const GridSpec& grid, double radius) {
  return smooth_bump(grid, radius, box_center(grid));
}

/// Lattice plane wave exp(2 pi i m.x / L) for signed integer modes m.
inline SampledField lattice_mode(const GridSpec& grid, const GridSpec::Modes& m) {
  for (std::size_t k = 0; k < grid.dims(); ++k)
    if (!grid.mode_in_band(m[k])) throw AliasingError("lattice_mode: mode outside the Nyquist band");
  return SampledField::sample(grid, [&](const Point& x) {
    double phase = 0.0;
    for (std::size_t k = 0; k < grid.dims(); ++k)
      phase += static_cast<double>(m[k]) * x[k] / grid.box_length(k);
    return std::polar(1.0, 2.0 * std::numbers::pi * phase);
  });
}

}  // namespace defectscope
