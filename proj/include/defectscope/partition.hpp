#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "errors.hpp"
#include "field.hpp"

namespace defectscope {

/// Smooth partition of unity on the torus: tensor products of shifted
/// raised-cosine profiles, `cells_per_axis` boxes per axis.
///
/// `transition` is the width of the cos^2 ramp as a fraction of the box width
/// (0 gives indicator functions of the boxes, 1 the widest smooth overlap).
/// Box a is centred at (a + 1/2) h with h = L / cells_per_axis.
inline std::vector<SampledField> partition_of_unity(const GridSpec& grid, std::size_t cells_per_axis,
                                                    double transition) {
  if (cells_per_axis == 0) throw ContractViolation("partition_of_unity: need at least one cell per axis");
  if (!(transition >= 0.0 && transition <= 1.0))
    throw ContractViolation("partition_of_unity: transition must lie in [0, 1]");
  const std::size_t d = grid.dims();
  std::size_t total = 1;
  for (std::size_t k = 0; k < d; ++k) total *= cells_per_axis;

  auto profile = [&](std::size_t axis, std::size_t a, double x) {
    if (cells_per_axis == 1) return 1.0;
    const double L = grid.box_length(axis);
    const double h = L / static_cast<double>(cells_per_axis);
    if (transition == 0.0) {
      auto cell = static_cast<std::size_t>(std::floor(x / h + 1e-12));
      return (cell % cells_per_axis) == a ? 1.0 : 0.0;
    }
    const double w = transition * h;
    double s = x - (static_cast<double>(a) + 0.5) * h;
    s = std::abs(s - L * std::round(s / L));
    const double inner = 0.5 * (h - w);
    if (s <= inner) return 1.0;
    if (s >= inner + w) return 0.0;
    const double c = std::cos(0.5 * std::numbers::pi * (s - inner) / w);
    return c * c;
  };

  std::vector<SampledField> out;
  out.reserve(total);
  for (std::size_t cell = 0; cell < total; ++cell) {
    std::size_t idx[kMaxDims] = {0, 0, 0};
    std::size_t rest = cell;
    for (std::size_t k = d; k-- > 0;) {
      idx[k] = rest % cells_per_axis;
      rest /= cells_per_axis;
    }
    out.push_back(SampledField::sample(grid, [&](const Point& x) {
      double v = 1.0;
      for (std::size_t k = 0; k < d; ++k) v *= profile(k, idx[k], x[k]);
      return v;
    }));
  }
  return out;
}

/// max_x |sum_a chi_a(x) - 1|, also accounting for negative or complex values.
inline double partition_defect(const std::vector<SampledField>& windows) {
  if (windows.empty()) return 1.0;
  const auto& grid = windows.front().grid();
  double worst = 0.0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    Complex s{};
    for (const auto& w : windows) {
      if (!(w.grid() == grid)) throw ContractViolation("partition_defect: grid mismatch");
      s += w[i];
      worst = std::max({worst, -w[i].real(), std::abs(w[i].imag())});
    }
    worst = std::max(worst, std::abs(s - Complex(1.0)));
  }
  return worst;
}

}  // namespace defectscope
