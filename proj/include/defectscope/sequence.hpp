#pragma once

#include <cmath>
#include <functional>
#include <numbers>
#include <string>
#include <vector>

#include "errors.hpp"
#include "field.hpp"

namespace defectscope {

enum class SequenceKind { plane_wave, modulated_wave, concentration, two_scale };

inline const char* to_string(SequenceKind k) {
  switch (k) {
    case SequenceKind::plane_wave: return "plane_wave";
    case SequenceKind::modulated_wave: return "modulated_wave";
    case SequenceKind::concentration: return "concentration";
    case SequenceKind::two_scale: return "two_scale";
  }
  return "?";
}

using SpatialFn = std::function<Complex(const Point&)>;
using TwoScaleFn = std::function<Complex(const Point& x, const Point& y)>;

/// Canonical oscillation and concentration sequences u_n.
///
///  plane_wave:     e^{2 pi i n xi0.x}
///  modulated_wave: w(x) e^{2 pi i n xi0.x}
///  concentration:  n^{d/2} rho(n (x - x0))      (minimal-image displacement)
///  two_scale:      v(x, n x), v 1-periodic in y
///
/// Every member is further multiplied by n^amplitude_power (0 by default), so
/// e.g. amplitude_power = -1 gives strongly vanishing sequences.
struct SequenceSpec {
  SequenceKind kind = SequenceKind::plane_wave;
  Point base_frequency;
  SpatialFn window;
  SpatialFn profile;
  Point center;
  TwoScaleFn two_scale;
  double amplitude_power = 0.0;
  int n_min = 1;
  int n_max = 1 << 20;

  static SequenceSpec plane_wave(Point xi0) {
    SequenceSpec s;
    s.kind = SequenceKind::plane_wave;
    s.base_frequency = xi0;
    return s;
  }
  static SequenceSpec modulated_wave(Point xi0, SpatialFn window) {
    SequenceSpec s;
    s.kind = SequenceKind::modulated_wave;
    s.base_frequency = xi0;
    s.window = std::move(window);
    return s;
  }
  static SequenceSpec concentration(SpatialFn profile, Point x0) {
    SequenceSpec s;
    s.kind = SequenceKind::concentration;
    s.profile = std::move(profile);
    s.center = x0;
    return s;
  }
  static SequenceSpec two_scale_wave(TwoScaleFn v) {
    SequenceSpec s;
    s.kind = SequenceKind::two_scale;
    s.two_scale = std::move(v);
    return s;
  }
};

namespace detail {
inline GridSpec::Modes wave_modes(const SequenceSpec& spec, int n, const GridSpec& grid) {
  if (spec.base_frequency.dim() != grid.dims())
    throw ContractViolation("generate_sequence: base frequency dimension mismatch");
  GridSpec::Modes m{};
  for (std::size_t k = 0; k < grid.dims(); ++k) {
    const double exact = static_cast<double>(n) * spec.base_frequency[k] * grid.box_length(k);
    const double rounded = std::round(exact);
    if (std::abs(exact - rounded) > 1e-9)
      throw ContractViolation("generate_sequence: n xi0 is not a lattice frequency of the torus");
    m[k] = static_cast<std::int64_t>(rounded);
    if (!grid.mode_in_band(m[k]))
      throw AliasingError("generate_sequence: frequency n xi0 exceeds the Nyquist band (n = " + std::to_string(n) + ")");
  }
  return m;
}
}  // namespace detail

inline SampledField generate_sequence(const SequenceSpec& spec, int n, const GridSpec& grid) {
  if (n < spec.n_min || n > spec.n_max || n <= 0)
    throw ContractViolation("generate_sequence: n = " + std::to_string(n) + " outside the sequence range");
  const std::size_t d = grid.dims();
  const double amp = std::pow(static_cast<double>(n), spec.amplitude_power);

  switch (spec.kind) {
    case SequenceKind::plane_wave:
    case SequenceKind::modulated_wave: {
      const auto m = detail::wave_modes(spec, n, grid);
      if (spec.kind == SequenceKind::modulated_wave && !spec.window)
        throw ContractViolation("generate_sequence: modulated wave needs a window");
      return SampledField::sample(grid, [&](const Point& x) {
        double phase = 0.0;
        for (std::size_t k = 0; k < d; ++k) phase += static_cast<double>(m[k]) * x[k] / grid.box_length(k);
        Complex v = std::polar(amp, 2.0 * std::numbers::pi * phase);
        if (spec.kind == SequenceKind::modulated_wave) v *= spec.window(x);
        return v;
      });
    }
    case SequenceKind::concentration: {
      if (!spec.profile) throw ContractViolation("generate_sequence: concentration needs a profile");
      const double scale = amp * std::pow(static_cast<double>(n), 0.5 * static_cast<double>(d));
      return SampledField::sample(grid, [&](const Point& x) {
        return scale * spec.profile(grid.displacement(x, spec.center) * static_cast<double>(n));
      });
    }
    case SequenceKind::two_scale: {
      if (!spec.two_scale) throw ContractViolation("generate_sequence: two-scale sequence needs v(x, y)");
      for (std::size_t k = 0; k < d; ++k) {
        if (!grid.mode_in_band(static_cast<std::int64_t>(std::ceil(n * grid.box_length(k)))))
          throw AliasingError("generate_sequence: fast scale n exceeds the Nyquist band (n = " + std::to_string(n) + ")");
      }
      return SampledField::sample(grid, [&](const Point& x) { return amp * spec.two_scale(x, x * static_cast<double>(n)); });
    }
  }
  throw ContractViolation("generate_sequence: unknown kind");
}

}  // namespace defectscope
