#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <limits>
#include <optional>
#include <ostream>
#include <utility>
#include <vector>

#include "errors.hpp"
#include "field.hpp"
#include "parallel.hpp"
#include "spectral.hpp"
#include "symbols.hpp"

namespace defectscope {

/// How the kernel b^(xi - eta) treats frequency differences.
///
/// linear:   xi - eta is the plain lattice difference; b^ vanishes outside the
///           lattice band. The matrix is then the finite section of the
///           commutator on R^d with b band-limited to the lattice.
/// periodic: xi - eta is wrapped modulo the lattice. This is the exact
///           commutator on the discrete torus, where the highest positive and
///           negative frequencies are neighbours.
enum class FrequencyDifference { linear, periodic };

struct CommutatorOptions {
  std::optional<double> band_limit;  // zero b^ beyond this |xi|
  FrequencyDifference differences = FrequencyDifference::linear;
};

inline constexpr std::size_t kMaxDenseCommutator = 4096;

/// Dense frequency-side matrix of C = A B - B A:
///   C[xi, eta] = b^(xi - eta) (a(xi) - a(eta)) / L^d
/// acting on vectors of Fourier coefficients (rows and columns in FFT order).
class CommutatorOp {
 public:
  CommutatorOp(GridSpec grid, Eigen::MatrixXcd matrix, SymbolFn symbol, SampledField window)
      : grid_(grid), matrix_(std::move(matrix)), symbol_(std::move(symbol)), window_(std::move(window)) {}

  const GridSpec& grid() const noexcept { return grid_; }
  const Eigen::MatrixXcd& matrix() const noexcept { return matrix_; }
  const SymbolFn& symbol() const noexcept { return symbol_; }
  const SampledField& window() const noexcept { return window_; }

  /// F(C u) for a physical field u.
  SampledField apply(const SampledField& u) const {
    const SampledField spec = forward_dft(u);
    Eigen::VectorXcd v(static_cast<Eigen::Index>(spec.size()));
    for (std::size_t i = 0; i < spec.size(); ++i) v[static_cast<Eigen::Index>(i)] = spec[i];
    const Eigen::VectorXcd w = matrix_ * v;
    std::vector<Complex> out(w.data(), w.data() + w.size());
    return SampledField(grid_, std::move(out), Space::frequency);
  }

 private:
  GridSpec grid_;
  Eigen::MatrixXcd matrix_;
  SymbolFn symbol_;
  SampledField window_;
};

inline CommutatorOp commutator_matrix(const SymbolFn& a, const SampledField& b, const GridSpec& grid,
                                      const CommutatorOptions& options = {}) {
  if (b.space() != Space::physical) throw ContractViolation("commutator_matrix: window must be in physical space");
  if (!(b.grid() == grid)) throw ContractViolation("commutator_matrix: window grid mismatch");
  const std::size_t n = grid.size();
  if (n > kMaxDenseCommutator)
    throw SizeError("commutator_matrix: " + std::to_string(n) +
                    " lattice points exceed the dense limit of 4096; use the matrix-free tail estimate");

  SampledField bhat = forward_dft(b);
  if (options.band_limit) {
    for (std::size_t i = 0; i < n; ++i)
      if (grid.frequency(i).norm() > *options.band_limit) bhat[i] = 0.0;
  }
  const SampledField avals = a.on_lattice(grid);
  const double dual = grid.dual_cell_volume();
  const std::size_t d = grid.dims();

  Eigen::MatrixXcd m(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  parallel_for(n, [&](std::size_t row) {
    const auto mx = grid.modes(row);
    for (std::size_t col = 0; col < n; ++col) {
      const auto my = grid.modes(col);
      GridSpec::Modes diff{};
      bool in_band = true;
      for (std::size_t k = 0; k < d; ++k) {
        diff[k] = mx[k] - my[k];
        if (options.differences == FrequencyDifference::linear && !grid.mode_in_band(diff[k])) in_band = false;
      }
      Complex v{};
      if (in_band) v = bhat[grid.flat_from_modes(diff)] * (avals[row] - avals[col]) * dual;
      m(static_cast<Eigen::Index>(row), static_cast<Eigen::Index>(col)) = v;
    }
  });
  return CommutatorOp(grid, std::move(m), a, b);
}

/// Largest singular value of C restricted to frequencies |eta| > r.
inline double tail_operator_norm(const CommutatorOp& c, double r) {
  if (r < 0.0) throw ContractViolation("tail_operator_norm: r must be nonnegative");
  const auto& grid = c.grid();
  std::vector<Eigen::Index> cols;
  for (std::size_t i = 0; i < grid.size(); ++i)
    if (r == 0.0 || grid.frequency(i).norm() > r) cols.push_back(static_cast<Eigen::Index>(i));
  if (cols.empty()) return 0.0;
  const Eigen::MatrixXcd sub = c.matrix()(Eigen::all, cols);
  if (sub.cwiseAbs().maxCoeff() == 0.0) return 0.0;
  Eigen::BDCSVD<Eigen::MatrixXcd> svd(sub);
  return svd.singularValues()(0);
}

struct TailSample {
  double r;
  double tail_norm;
};

inline std::vector<TailSample> tail_profile(const CommutatorOp& c, const std::vector<double>& radii) {
  std::vector<TailSample> out(radii.size());
  parallel_for(radii.size(), [&](std::size_t i) { out[i] = {radii[i], tail_operator_norm(c, radii[i])}; });
  return out;
}

/// CSV: r,tail_norm
inline void write_profile_csv(const std::vector<TailSample>& profile, std::ostream& os) {
  const auto old = os.precision(std::numeric_limits<double>::max_digits10);
  os << "r,tail_norm\n";
  for (const auto& s : profile) os << s.r << ',' << s.tail_norm << '\n';
  os.precision(old);
}

}  // namespace defectscope
