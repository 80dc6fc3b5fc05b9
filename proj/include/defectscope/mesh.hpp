#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <ostream>
#include <vector>

#include "errors.hpp"
#include "fibration.hpp"

namespace defectscope {

/// Cell partition of the manifold P of a fibration.
///
/// P is parameterized by directions on the unit sphere, pushed radially onto P.
/// Cells are angular sectors, so a point of P (or any nonzero frequency, via
/// its fibre projection) is located by the direction of its foot point.
///
///  d = 1: two cells {+1, -1}, counting measure.
///  d = 2: `resolution` arcs centred at angles 2 pi j / resolution; measure is
///         the length of the polyline boundary-node-boundary.
///  d = 3: resolution x (2 resolution) polar/azimuth cells centred at the
///         midpoints; measure is the area of the pushed corner quad
///         (two triangles).
class ManifoldMesh {
 public:
  ManifoldMesh(FibrationSpec fibration, std::size_t resolution)
      : fib_(std::move(fibration)), resolution_(resolution) {
    const std::size_t d = fib_.dims();
    if (d >= 2 && resolution_ < 4) throw ContractViolation("ManifoldMesh: resolution must be at least 4");
    if (d == 1) build_1d();
    else if (d == 2) build_2d();
    else build_3d();
  }

  const FibrationSpec& fibration() const noexcept { return fib_; }
  std::size_t resolution() const noexcept { return resolution_; }
  std::size_t cell_count() const noexcept { return nodes_.size(); }
  const std::vector<Point>& nodes() const noexcept { return nodes_; }
  const Point& node(std::size_t c) const noexcept { return nodes_[c]; }
  const std::vector<double>& cell_measures() const noexcept { return measures_; }

  double total_measure() const noexcept {
    double s = 0.0;
    for (double m : measures_) s += m;
    return s;
  }

  /// Cell whose angular sector contains the direction of p (p != 0).
  std::size_t locate(const Point& p) const {
    require_dims(p, fib_, "ManifoldMesh::locate");
    if (p.is_zero()) throw SingularPointError("ManifoldMesh::locate: zero point");
    const std::size_t d = fib_.dims();
    if (d == 1) return p[0] > 0.0 ? 0 : 1;
    const double two_pi = 2.0 * std::numbers::pi;
    if (d == 2) {
      const double step = two_pi / static_cast<double>(resolution_);
      double ang = std::atan2(p[1], p[0]);
      if (ang < 0.0) ang += two_pi;
      auto j = static_cast<std::size_t>(std::floor(ang / step + 0.5));
      return j % resolution_;
    }
    const std::size_t n_pol = resolution_, n_az = 2 * resolution_;
    const double polar = std::acos(std::clamp(p[2] / p.norm(), -1.0, 1.0));
    double az = std::atan2(p[1], p[0]);
    if (az < 0.0) az += two_pi;
    auto i = std::min(n_pol - 1, static_cast<std::size_t>(polar / std::numbers::pi * static_cast<double>(n_pol)));
    auto j = static_cast<std::size_t>(az / two_pi * static_cast<double>(n_az)) % n_az;
    return i * n_az + j;
  }

  /// Cell of pi_P(xi); empty at the origin.
  std::optional<std::size_t> cell_of_frequency(const Point& xi) const {
    if (xi.is_zero()) return std::nullopt;
    return locate(fibre_solve(xi, fib_).eta);
  }

  /// Angular distance between the sectors of two cells (d = 2), in cells.
  std::size_t cell_distance(std::size_t a, std::size_t b) const noexcept {
    if (fib_.dims() != 2) return a == b ? 0 : 1;
    const std::size_t diff = a > b ? a - b : b - a;
    return std::min(diff, resolution_ - diff);
  }

  /// CSV: cell,eta_1..eta_d,measure
  void write_csv(std::ostream& os) const {
    const auto old = os.precision(std::numeric_limits<double>::max_digits10);
    os << "cell";
    for (std::size_t k = 0; k < fib_.dims(); ++k) os << ",eta_" << (k + 1);
    os << ",measure\n";
    for (std::size_t c = 0; c < nodes_.size(); ++c) {
      os << c;
      for (double v : nodes_[c]) os << ',' << v;
      os << ',' << measures_[c] << '\n';
    }
    os.precision(old);
  }

 private:
  Point on_p(const Point& dir) const { return push_to_manifold(dir, fib_); }

  void build_1d() {
    nodes_ = {on_p(Point{1.0}), on_p(Point{-1.0})};
    measures_ = {1.0, 1.0};
  }

  void build_2d() {
    const double step = 2.0 * std::numbers::pi / static_cast<double>(resolution_);
    auto at = [&](double ang) { return on_p(Point{std::cos(ang), std::sin(ang)}); };
    for (std::size_t j = 0; j < resolution_; ++j) {
      const double c = step * static_cast<double>(j);
      const Point node = at(c);
      const Point lo = at(c - 0.5 * step), hi = at(c + 0.5 * step);
      nodes_.push_back(node);
      measures_.push_back(distance(lo, node) + distance(node, hi));
    }
  }

  void build_3d() {
    const std::size_t n_pol = resolution_, n_az = 2 * resolution_;
    const double dp = std::numbers::pi / static_cast<double>(n_pol);
    const double da = 2.0 * std::numbers::pi / static_cast<double>(n_az);
    auto at = [&](double polar, double az) {
      return on_p(Point{std::sin(polar) * std::cos(az), std::sin(polar) * std::sin(az), std::cos(polar)});
    };
    auto tri = [](const Point& a, const Point& b, const Point& c) {
      const Point u = b - a, v = c - a;
      const Point cross{u[1] * v[2] - u[2] * v[1], u[2] * v[0] - u[0] * v[2], u[0] * v[1] - u[1] * v[0]};
      return 0.5 * cross.norm();
    };
    for (std::size_t i = 0; i < n_pol; ++i) {
      for (std::size_t j = 0; j < n_az; ++j) {
        const double p0 = dp * static_cast<double>(i), p1 = p0 + dp;
        const double a0 = da * static_cast<double>(j), a1 = a0 + da;
        nodes_.push_back(at(p0 + 0.5 * dp, a0 + 0.5 * da));
        const Point c00 = at(p0, a0), c01 = at(p0, a1), c10 = at(p1, a0), c11 = at(p1, a1);
        measures_.push_back(tri(c00, c10, c11) + tri(c00, c11, c01));
      }
    }
  }

  FibrationSpec fib_;
  std::size_t resolution_;
  std::vector<Point> nodes_;
  std::vector<double> measures_;
};

}  // namespace defectscope
