#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <limits>
#include <numbers>
#include <optional>
#include <ostream>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "errors.hpp"
#include "fibration.hpp"
#include "field.hpp"
#include "mesh.hpp"
#include "spectral.hpp"

namespace defectscope {

using FrequencyFn = std::function<Complex(const Point&)>;
using ManifoldFn = std::function<Complex(const Point&)>;

/// Whether derivative symbols carry the 2 pi of the e^{-2 pi i x.xi} kernel.
/// With two_pi = false the fractional derivative d^a/dx_k^a has symbol
/// (i xi_k)^a evaluated literally in cycles per unit length.
struct DerivativeConvention {
  bool two_pi = false;
};

/// A frequency symbol a(xi) with an optional limit a_inf on P along fibres.
class SymbolFn {
 public:
  SymbolFn(std::string name, FrequencyFn evaluator, std::optional<ManifoldFn> declared_limit = std::nullopt,
           std::string notes = {})
      : name_(std::move(name)),
        eval_(std::move(evaluator)),
        limit_(std::move(declared_limit)),
        notes_(std::move(notes)) {
    if (!eval_) throw ContractViolation("SymbolFn: empty evaluator");
  }

  Complex operator()(const Point& xi) const { return eval_(xi); }

  bool has_limit() const noexcept { return limit_.has_value(); }
  Complex limit(const Point& eta) const {
    if (!limit_) throw ContractViolation("SymbolFn '" + name_ + "' has no declared limit on P");
    return (*limit_)(eta);
  }
  const std::optional<ManifoldFn>& declared_limit() const noexcept { return limit_; }

  const std::string& name() const noexcept { return name_; }
  const std::string& notes() const noexcept { return notes_; }

  /// sup |a| over the lattice of `grid`; throws on a non-finite value.
  double lattice_sup(const GridSpec& grid) const {
    double m = 0.0;
    for (std::size_t i = 0; i < grid.size(); ++i) {
      const Complex v = eval_(grid.frequency(i));
      if (!std::isfinite(v.real()) || !std::isfinite(v.imag()))
        throw ContractViolation("SymbolFn '" + name_ + "' is not finite on the lattice");
      m = std::max(m, std::abs(v));
    }
    return m;
  }

  /// Symbol values on the lattice of `grid`, in FFT order.
  SampledField on_lattice(const GridSpec& grid) const {
    SampledField s = SampledField::sample_spectrum(grid, eval_);
    for (std::size_t i = 0; i < s.size(); ++i) {
      if (!std::isfinite(s[i].real()) || !std::isfinite(s[i].imag()))
        throw ContractViolation("SymbolFn '" + name_ + "' is not finite on the lattice");
    }
    return s;
  }

 private:
  std::string name_;
  FrequencyFn eval_;
  std::optional<ManifoldFn> limit_;
  std::string notes_;
};

/// (i x)^a on the branch |x|^a e^{i a (pi/2) sgn x}; zero at x = 0.
///
/// For a = 1 this is i x, and the map is conjugate-symmetric under x -> -x,
/// so real fields stay real under the corresponding multiplier.
inline Complex fractional_power_i(double x, double a) {
  if (x == 0.0) return {0.0, 0.0};
  const double sgn = x > 0.0 ? 1.0 : -1.0;
  return std::polar(std::pow(std::abs(x), a), a * 0.5 * std::numbers::pi * sgn);
}

/// (i xi_k)^alpha_k, optionally divided by sum_j |xi_j|^alpha_j; zero at xi = 0.
inline Complex eval_fractional_symbol(const Point& xi, std::size_t k, std::span<const double> alpha,
                                      bool normalized) {
  if (alpha.size() != xi.dim() || k >= xi.dim())
    throw ContractViolation("eval_fractional_symbol: axis or exponent count does not match the point");
  if (xi.is_zero()) return {0.0, 0.0};
  if (!normalized) return fractional_power_i(xi[k], alpha[k]);
  if (xi[k] == 0.0) return {0.0, 0.0};
  // Modulus ratio first, phase last: exact along fibres up to one rounding.
  double den = 0.0;
  for (std::size_t j = 0; j < xi.dim(); ++j) den += std::pow(std::abs(xi[j]), alpha[j]);
  const double sgn = xi[k] > 0.0 ? 1.0 : -1.0;
  return std::polar(std::pow(std::abs(xi[k]), alpha[k]) / den, alpha[k] * 0.5 * std::numbers::pi * sgn);
}

/// Normalized fractional symbol (i xi_k)^a_k / sum_j |xi_j|^a_j, or its
/// numerator alone. The normalized symbol is constant along the fractional
/// fibres with the same exponents, so its declared limit is the symbol itself
/// restricted to P.
inline SymbolFn fractional_symbol(std::size_t k, std::vector<double> alpha, bool normalized = true) {
  if (k >= alpha.size()) throw ContractViolation("fractional_symbol: axis out of range");
  for (double a : alpha)
    if (!(a > 0.0 && a <= 1.0)) throw ContractViolation("fractional_symbol: exponents must lie in (0, 1]");
  auto eval = [k, alpha, normalized](const Point& xi) { return eval_fractional_symbol(xi, k, alpha, normalized); };
  std::optional<ManifoldFn> limit;
  if (normalized) limit = ManifoldFn(eval);
  return SymbolFn(std::string(normalized ? "normalized_fractional_" : "fractional_") + std::to_string(k),
                  std::move(eval), std::move(limit));
}

/// Symbol of the fractional derivative along axis k: (i xi_k)^a or (2 pi i xi_k)^a.
inline SymbolFn derivative_symbol(std::size_t k, double a, DerivativeConvention conv = {}) {
  if (!(a > 0.0 && a <= 1.0)) throw ContractViolation("derivative_symbol: exponent must lie in (0, 1]");
  const double scale = conv.two_pi ? 2.0 * std::numbers::pi : 1.0;
  return SymbolFn("derivative_" + std::to_string(k), [k, a, scale](const Point& xi) {
    return fractional_power_i(scale * xi[k], a);
  });
}

inline SymbolFn constant_symbol(Complex c) {
  return SymbolFn("constant", [c](const Point&) { return c; }, ManifoldFn([c](const Point&) { return c; }));
}

/// xi_k / |xi|, degree-0 homogeneous; its limit on the unit sphere is eta_k.
inline SymbolFn ray_component_symbol(std::size_t k) {
  return SymbolFn(
      "ray_component_" + std::to_string(k),
      [k](const Point& xi) -> Complex { return xi.is_zero() ? 0.0 : xi[k] / xi.norm(); },
      ManifoldFn([k](const Point& eta) -> Complex { return eta[k] / eta.norm(); }));
}

/// xi -> psi(pi_P(xi)), zero at the origin, with declared limit psi.
inline SymbolFn lift_symbol(ManifoldFn psi, const FibrationSpec& fib, std::string name = "lifted") {
  if (!psi) throw ContractViolation("lift_symbol: empty function on P");
  auto eval = [psi, fib](const Point& xi) -> Complex {
    if (xi.is_zero()) return 0.0;
    return psi(fibre_solve(xi, fib).eta);
  };
  return SymbolFn(std::move(name), std::move(eval), std::move(psi));
}

/// As above, additionally checking that psi is finite at every mesh node.
inline SymbolFn lift_symbol(ManifoldFn psi, const ManifoldMesh& mesh, std::string name = "lifted") {
  for (const auto& eta : mesh.nodes()) {
    const Complex v = psi(eta);
    if (!std::isfinite(v.real()) || !std::isfinite(v.imag()))
      throw ContractViolation("lift_symbol: psi is not finite on the mesh");
  }
  return lift_symbol(std::move(psi), mesh.fibration(), std::move(name));
}

/// max over mesh nodes eta of |a(curve_point(eta, t)) - a_inf(eta)|.
inline double admissibility_defect(const SymbolFn& a, const FibrationSpec& fib, double t, const ManifoldMesh& mesh) {
  if (!a.has_limit()) throw ContractViolation("admissibility_defect: symbol has no declared limit");
  double worst = 0.0;
  for (const auto& eta : mesh.nodes()) worst = std::max(worst, std::abs(a(curve_point(eta, t, fib)) - a.limit(eta)));
  return worst;
}

/// Sampled sup of |a(xi) - a(eta)| over lattice pairs with |xi|, |eta| > r and
/// 0 < |xi - eta| <= R. Both points are drawn from the lattice of `grid`
/// without wrap-around.
inline double uvjet_modulus(const SymbolFn& a, const GridSpec& grid, double R, double r, std::size_t sample_count,
                            std::uint64_t seed) {
  if (!(R > 0.0) || !(r > 0.0)) throw ContractViolation("uvjet_modulus: R and r must be positive");
  const std::size_t d = grid.dims();

  std::vector<std::size_t> outer;
  for (std::size_t i = 0; i < grid.size(); ++i)
    if (grid.frequency(i).norm() > r) outer.push_back(i);

  // Lattice offsets with 0 < |offset| <= R, as mode steps.
  std::vector<GridSpec::Modes> offsets;
  std::int64_t reach[kMaxDims] = {0, 0, 0};
  for (std::size_t k = 0; k < d; ++k) reach[k] = static_cast<std::int64_t>(std::floor(R * grid.box_length(k)));
  GridSpec::Modes o{};
  std::function<void(std::size_t)> enumerate = [&](std::size_t k) {
    if (k == d) {
      double n2 = 0.0;
      bool zero = true;
      for (std::size_t j = 0; j < d; ++j) {
        const double f = static_cast<double>(o[j]) / grid.box_length(j);
        n2 += f * f;
        zero = zero && o[j] == 0;
      }
      if (!zero && n2 <= R * R * (1.0 + 1e-12)) offsets.push_back(o);
      return;
    }
    for (o[k] = -reach[k]; o[k] <= reach[k]; ++o[k]) enumerate(k + 1);
  };
  enumerate(0);

  auto partner = [&](std::size_t i, const GridSpec::Modes& off) -> std::optional<std::size_t> {
    GridSpec::Modes m = grid.modes(i);
    for (std::size_t k = 0; k < d; ++k) {
      m[k] += off[k];
      if (!grid.mode_in_band(m[k])) return std::nullopt;
    }
    const std::size_t j = grid.flat_from_modes(m);
    if (grid.frequency(j).norm() <= r) return std::nullopt;
    return j;
  };

  if (outer.empty() || offsets.empty())
    throw InsufficientLattice("uvjet_modulus: no lattice pairs beyond r = " + std::to_string(r));

  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick_point(0, outer.size() - 1);
  std::uniform_int_distribution<std::size_t> pick_offset(0, offsets.size() - 1);
  double sup = 0.0;
  std::size_t accepted = 0;
  const std::size_t max_attempts = 50 * sample_count + 1000;
  for (std::size_t attempt = 0; attempt < max_attempts && accepted < sample_count; ++attempt) {
    const std::size_t i = outer[pick_point(rng)];
    const auto j = partner(i, offsets[pick_offset(rng)]);
    if (!j) continue;
    sup = std::max(sup, std::abs(a(grid.frequency(i)) - a(grid.frequency(*j))));
    ++accepted;
  }
  if (accepted == 0)
    throw InsufficientLattice("uvjet_modulus: no lattice pairs beyond r = " + std::to_string(r));
  return sup;
}

/// A u = inverse_dft(a . dft(u)).
inline SampledField apply_multiplier(const SampledField& u, const SymbolFn& a) {
  if (u.space() != Space::physical) throw ContractViolation("apply_multiplier: u must be in physical space");
  SampledField spec = forward_dft(u);
  for (std::size_t i = 0; i < spec.size(); ++i) spec[i] *= a(u.grid().frequency(i));
  return inverse_dft(spec);
}

/// Same, with the symbol pre-sampled on the lattice (frequency-space field).
inline SampledField apply_multiplier(const SampledField& u, const SampledField& symbol_values) {
  if (u.space() != Space::physical || symbol_values.space() != Space::frequency)
    throw ContractViolation("apply_multiplier: expects a physical field and lattice symbol values");
  if (!(u.grid() == symbol_values.grid())) throw ContractViolation("apply_multiplier: grid mismatch");
  SampledField spec = forward_dft(u);
  for (std::size_t i = 0; i < spec.size(); ++i) spec[i] *= symbol_values[i];
  return inverse_dft(spec);
}

/// CSV dump of a symbol on the lattice: index,xi_1..xi_d,re,im
inline void write_symbol_csv(const SymbolFn& a, const GridSpec& grid, std::ostream& os) {
  const auto old = os.precision(std::numeric_limits<double>::max_digits10);
  os << "index";
  for (std::size_t k = 0; k < grid.dims(); ++k) os << ",xi_" << (k + 1);
  os << ",re,im\n";
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const Point xi = grid.frequency(i);
    const Complex v = a(xi);
    os << i;
    for (double c : xi) os << ',' << c;
    os << ',' << v.real() << ',' << v.imag() << '\n';
  }
  os.precision(old);
}

}  // namespace defectscope
