#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include "errors.hpp"
#include "point.hpp"

namespace defectscope {

enum class FibrationKind { ray_sphere, parabolic, fractional };

inline const char* to_string(FibrationKind k) {
  switch (k) {
    case FibrationKind::ray_sphere: return "ray_sphere";
    case FibrationKind::parabolic: return "parabolic";
    case FibrationKind::fractional: return "fractional";
  }
  return "?";
}

/// A curve family fibrating R^d \ {0} together with its manifold P.
///
///  ray_sphere:  xi = t eta,                  P = {|eta| = 1}
///  fractional:  xi_k = eta_k t^(1/alpha_k),  P = {sum_k |eta_k|^alpha_k = 1}
///  parabolic:   fractional with alpha = (1, 1/2, ..., 1/2)
class FibrationSpec {
 public:
  static FibrationSpec ray_sphere(std::size_t dims) {
    return FibrationSpec(FibrationKind::ray_sphere, std::vector<double>(dims, 1.0));
  }

  static FibrationSpec parabolic(std::size_t dims) {
    std::vector<double> alpha(dims, 0.5);
    if (!alpha.empty()) alpha[0] = 1.0;
    return FibrationSpec(FibrationKind::parabolic, std::move(alpha));
  }

  static FibrationSpec fractional(std::vector<double> alpha) {
    return FibrationSpec(FibrationKind::fractional, std::move(alpha));
  }

  FibrationKind kind() const noexcept { return kind_; }
  std::size_t dims() const noexcept { return alpha_.size(); }
  double alpha(std::size_t k) const noexcept { return alpha_[k]; }
  const std::vector<double>& exponents() const noexcept { return alpha_; }
  bool uses_power_manifold() const noexcept { return kind_ != FibrationKind::ray_sphere; }

  /// Fibre parameter of xi: sum_k |xi_k|^alpha_k, or |xi| for rays.
  double gauge(const Point& xi) const noexcept {
    if (!uses_power_manifold()) return xi.norm();
    double t = 0.0;
    for (std::size_t k = 0; k < dims(); ++k) t += std::pow(std::abs(xi[k]), alpha_[k]);
    return t;
  }

  /// Signed residual of the defining equation of P at eta.
  double manifold_residual(const Point& eta) const noexcept { return gauge(eta) - 1.0; }

 private:
  FibrationSpec(FibrationKind kind, std::vector<double> alpha) : kind_(kind), alpha_(std::move(alpha)) {
    if (alpha_.empty() || alpha_.size() > kMaxDims)
      throw ContractViolation("FibrationSpec: dimension must be in [1, 3]");
    for (double a : alpha_) {
      if (!(a > 0.0 && a <= 1.0))
        throw ContractViolation("FibrationSpec: exponents must lie in (0, 1], got " + std::to_string(a));
    }
  }

  FibrationKind kind_;
  std::vector<double> alpha_;
};

struct FibreCoordinates {
  Point eta;  // foot point on P
  double t;   // fibre parameter, t = 1 on P
};

inline void require_dims(const Point& p, const FibrationSpec& fib, const char* where) {
  if (p.dim() != fib.dims()) throw ContractViolation(std::string(where) + ": dimension mismatch");
}

/// Point at parameter t on the fibre through eta in P.
inline Point curve_point(const Point& eta, double t, const FibrationSpec& fib) {
  require_dims(eta, fib, "curve_point");
  if (!(t > 0.0)) throw DomainError("curve_point: fibre parameter must be positive");
  if (std::abs(fib.manifold_residual(eta)) > 1e-9)
    throw ContractViolation("curve_point: eta does not lie on P");
  Point xi(fib.dims());
  for (std::size_t k = 0; k < fib.dims(); ++k) {
    xi[k] = fib.uses_power_manifold() ? eta[k] * std::pow(t, 1.0 / fib.alpha(k)) : eta[k] * t;
  }
  return xi;
}

/// Projection of xi onto P along the fibres, with the fibre parameter.
inline FibreCoordinates fibre_solve(const Point& xi, const FibrationSpec& fib) {
  require_dims(xi, fib, "fibre_solve");
  if (xi.is_zero()) throw SingularPointError("fibre_solve: no fibre passes through the origin");
  const double t = fib.gauge(xi);
  Point eta(fib.dims());
  for (std::size_t k = 0; k < fib.dims(); ++k) {
    eta[k] = fib.uses_power_manifold() ? xi[k] / std::pow(t, 1.0 / fib.alpha(k)) : xi[k] / t;
  }
  return {eta, t};
}

/// Radial push of a nonzero direction onto P: returns rho * theta with rho
/// solving gauge(rho * theta) = 1 (safeguarded Newton, bracket [0, 1/max|theta_k|]).
inline Point push_to_manifold(const Point& theta, const FibrationSpec& fib) {
  require_dims(theta, fib, "push_to_manifold");
  const double norm = theta.norm();
  if (!(norm > 0.0)) throw SingularPointError("push_to_manifold: zero direction");
  const Point dir = theta * (1.0 / norm);
  if (!fib.uses_power_manifold()) return dir;

  double max_c = 0.0;
  for (double c : dir) max_c = std::max(max_c, std::abs(c));
  double lo = 0.0, hi = 1.0 / max_c;
  auto g = [&](double rho) { return fib.gauge(dir * rho) - 1.0; };
  auto dg = [&](double rho) {
    double s = 0.0;
    for (std::size_t k = 0; k < fib.dims(); ++k) {
      const double c = std::abs(dir[k]);
      if (c > 0.0) s += fib.alpha(k) * std::pow(c, fib.alpha(k)) * std::pow(rho, fib.alpha(k) - 1.0);
    }
    return s;
  };
  double rho = hi;
  for (int it = 0; it < 200; ++it) {
    const double v = g(rho);
    if (std::abs(v) <= 1e-15) break;
    if (v > 0.0) hi = rho; else lo = rho;
    double next = rho - v / dg(rho);
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (hi - lo <= 1e-16 * hi) break;
    rho = next;
  }
  return dir * rho;
}

/// Unit-sphere anchor of a curve: the direction of its point at t = 1.
inline Point sphere_anchor(const Point& eta) { return eta * (1.0 / eta.norm()); }

namespace detail {
inline Point random_direction(std::size_t dims, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Point p(dims);
  do {
    for (double& c : p) c = normal(rng);
  } while (p.norm() < 1e-12);
  return p * (1.0 / p.norm());
}
}  // namespace detail

/// Sampled infimum of |phi_l1(t1) - phi_l2(t2)| / |l1 - l2| over pairs with
/// min(t1, t2) = z, where l_i are the unit-sphere anchors of the curves.
///
/// Half of the pairs use independent directions, the other half perturb the
/// first direction at a random scale in [1e-4, 1]; half use t1 = t2 = z and
/// the rest put the larger parameter in (z, 3z).
inline double separation_modulus(const FibrationSpec& fib, double z, std::size_t sample_count,
                                 std::uint64_t seed) {
  if (!(z > 0.0)) throw DomainError("separation_modulus: z must be positive");
  if (sample_count < 100) throw ContractViolation("separation_modulus: need at least 100 samples");

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const std::size_t d = fib.dims();

  double best = std::numeric_limits<double>::infinity();
  std::size_t valid = 0;
  int failures = 0;
  while (valid < sample_count) {
    std::size_t round_valid = 0;
    for (std::size_t s = 0; s < sample_count && valid < sample_count; ++s) {
      const Point dir1 = detail::random_direction(d, rng);
      Point dir2(d);
      if (unit(rng) < 0.5) {
        dir2 = detail::random_direction(d, rng);
      } else {
        const double scale = std::pow(10.0, -4.0 * unit(rng));
        dir2 = dir1 + detail::random_direction(d, rng) * scale;
        if (dir2.norm() < 1e-12) continue;
      }
      const Point eta1 = push_to_manifold(dir1, fib);
      const Point eta2 = push_to_manifold(dir2, fib);
      const double gap = distance(sphere_anchor(eta1), sphere_anchor(eta2));
      if (gap < 1e-12) continue;

      double t1 = z, t2 = z;
      if (unit(rng) >= 0.5) {
        const double other = z * (1.0 + 2.0 * unit(rng));
        if (unit(rng) < 0.5) t1 = other; else t2 = other;
      }
      const double ratio = distance(curve_point(eta1, t1, fib), curve_point(eta2, t2, fib)) / gap;
      best = std::min(best, ratio);
      ++valid;
      ++round_valid;
    }
    if (round_valid == 0 && ++failures >= 10)
      throw SamplingError("separation_modulus: all sampled anchor pairs coincide");
  }
  return best;
}

}  // namespace defectscope
