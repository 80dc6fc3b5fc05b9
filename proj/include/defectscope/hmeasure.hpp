#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <vector>

#include "errors.hpp"
#include "fibration.hpp"
#include "field.hpp"
#include "mesh.hpp"
#include "parallel.hpp"
#include "partition.hpp"
#include "sequence.hpp"
#include "spectral.hpp"
#include "symbols.hpp"

namespace defectscope {

/// sum_xi F(phi1 u)(xi) conj( psi(pi_P xi) F(phi2 u)(xi) ) / L^d.
/// The xi = 0 bin carries no fibre and contributes nothing.
inline Complex quadratic_form(const SampledField& u, const SampledField& phi1, const SampledField& phi2,
                              const ManifoldFn& psi, const FibrationSpec& fib) {
  const auto& grid = u.grid();
  if (grid.dims() != fib.dims()) throw ContractViolation("quadratic_form: fibration dimension mismatch");
  const SampledField f1 = forward_dft(window_apply(u, phi1));
  const SampledField f2 = forward_dft(window_apply(u, phi2));
  Complex s{};
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const Point xi = grid.frequency(i);
    if (xi.is_zero()) continue;
    s += f1[i] * std::conj(psi(fibre_solve(xi, fib).eta) * f2[i]);
  }
  return s * grid.dual_cell_volume();
}

/// P-cell index of every lattice frequency (-1 at the origin).
inline std::vector<int> lattice_cells(const GridSpec& grid, const ManifoldMesh& mesh) {
  std::vector<int> cells(grid.size(), -1);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (auto c = mesh.cell_of_frequency(grid.frequency(i))) cells[i] = static_cast<int>(*c);
  }
  return cells;
}

/// Binned H-measure weights mu^{ij}(x_cell a, P cell b), dense in (i, j, a, b).
class HMeasureEstimate {
 public:
  HMeasureEstimate(std::size_t components, std::size_t x_cells, std::size_t p_cells, int n_used)
      : r_(components), xa_(x_cells), pb_(p_cells), n_(n_used), w_(components * components * x_cells * p_cells) {}

  std::size_t components() const noexcept { return r_; }
  std::size_t x_cells() const noexcept { return xa_; }
  std::size_t p_cells() const noexcept { return pb_; }
  int n_used() const noexcept { return n_; }

  Complex& weight(std::size_t i, std::size_t j, std::size_t a, std::size_t b) noexcept { return w_[index(i, j, a, b)]; }
  Complex weight(std::size_t i, std::size_t j, std::size_t a, std::size_t b) const noexcept {
    return w_[index(i, j, a, b)];
  }
  const std::vector<Complex>& weights() const noexcept { return w_; }

  /// r x r matrix of weights for one (x cell, P cell).
  Eigen::MatrixXcd block(std::size_t a, std::size_t b) const {
    Eigen::MatrixXcd m(static_cast<Eigen::Index>(r_), static_cast<Eigen::Index>(r_));
    for (std::size_t i = 0; i < r_; ++i)
      for (std::size_t j = 0; j < r_; ++j) m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = weight(i, j, a, b);
    return m;
  }

  /// sum_b mu^{ii}(a, b).
  double x_cell_mass(std::size_t i, std::size_t a) const noexcept {
    double s = 0.0;
    for (std::size_t b = 0; b < pb_; ++b) s += weight(i, i, a, b).real();
    return s;
  }

  /// sum_{i, a} mu^{ii}(a, b).
  double p_cell_marginal(std::size_t b) const noexcept {
    double s = 0.0;
    for (std::size_t i = 0; i < r_; ++i)
      for (std::size_t a = 0; a < xa_; ++a) s += weight(i, i, a, b).real();
    return s;
  }

  double total_diagonal_mass() const noexcept {
    double s = 0.0;
    for (std::size_t b = 0; b < pb_; ++b) s += p_cell_marginal(b);
    return s;
  }

  /// max |w^{ij} - conj(w^{ji})| over all entries.
  double hermitian_defect() const noexcept {
    double m = 0.0;
    for (std::size_t i = 0; i < r_; ++i)
      for (std::size_t j = 0; j < r_; ++j)
        for (std::size_t a = 0; a < xa_; ++a)
          for (std::size_t b = 0; b < pb_; ++b) m = std::max(m, std::abs(weight(i, j, a, b) - std::conj(weight(j, i, a, b))));
    return m;
  }

  /// Smallest eigenvalue over all (a, b) blocks (after Hermitian symmetrization).
  double min_block_eigenvalue() const {
    double m = std::numeric_limits<double>::infinity();
    for (std::size_t a = 0; a < xa_; ++a) {
      for (std::size_t b = 0; b < pb_; ++b) {
        const Eigen::MatrixXcd blk = block(a, b);
        const Eigen::MatrixXcd herm = 0.5 * (blk + blk.adjoint());
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(herm, Eigen::EigenvaluesOnly);
        m = std::min(m, es.eigenvalues()(0));
      }
    }
    return m;
  }

 private:
  std::size_t index(std::size_t i, std::size_t j, std::size_t a, std::size_t b) const noexcept {
    return ((i * r_ + j) * xa_ + a) * pb_ + b;
  }

  std::size_t r_, xa_, pb_;
  int n_;
  std::vector<Complex> w_;
};

inline void require_partition(const std::vector<SampledField>& windows, const GridSpec& grid) {
  if (windows.empty()) throw ContractViolation("estimate_hmeasure: empty x partition");
  for (const auto& w : windows)
    if (!(w.grid() == grid) || w.space() != Space::physical)
      throw ContractViolation("estimate_hmeasure: partition functions must live on the field grid");
  if (partition_defect(windows) > 1e-8)
    throw ContractViolation("estimate_hmeasure: x partition is not a nonnegative partition of unity");
}

/// weights[i, j, a, b] = quadratic form of components (u_i, u_j) with
/// phi1 = phi2 = chi_a and psi = indicator of P cell b.
inline HMeasureEstimate estimate_hmeasure(const std::vector<SampledField>& components,
                                          const std::vector<SampledField>& windows, const ManifoldMesh& mesh,
                                          int n_used = 0) {
  if (components.empty()) throw ContractViolation("estimate_hmeasure: no components");
  const GridSpec& grid = components.front().grid();
  for (const auto& c : components)
    if (!(c.grid() == grid) || c.space() != Space::physical)
      throw ContractViolation("estimate_hmeasure: components must share one physical grid");
  if (grid.dims() != mesh.fibration().dims()) throw ContractViolation("estimate_hmeasure: mesh dimension mismatch");
  require_partition(windows, grid);

  const std::vector<int> cells = lattice_cells(grid, mesh);
  const std::size_t r = components.size();
  HMeasureEstimate est(r, windows.size(), mesh.cell_count(), n_used);
  const double dual = grid.dual_cell_volume();

  parallel_for(windows.size(), [&](std::size_t a) {
    std::vector<SampledField> spectra;
    spectra.reserve(r);
    for (const auto& u : components) spectra.push_back(forward_dft(window_apply(u, windows[a])));
    for (std::size_t i = 0; i < r; ++i) {
      for (std::size_t j = 0; j < r; ++j) {
        for (std::size_t x = 0; x < grid.size(); ++x) {
          if (cells[x] < 0) continue;
          est.weight(i, j, a, static_cast<std::size_t>(cells[x])) += spectra[i][x] * std::conj(spectra[j][x]);
        }
        for (std::size_t b = 0; b < mesh.cell_count(); ++b) est.weight(i, j, a, b) *= dual;
      }
    }
  });
  return est;
}

/// Evaluates the estimate along n_list for a sequence with one SequenceSpec
/// per component.
inline std::vector<HMeasureEstimate> estimate_hmeasure(const std::vector<SequenceSpec>& specs, const GridSpec& grid,
                                                       const std::vector<SampledField>& windows,
                                                       const ManifoldMesh& mesh, const std::vector<int>& n_list) {
  std::vector<HMeasureEstimate> out;
  out.reserve(n_list.size());
  for (int n : n_list) {
    std::vector<SampledField> comps;
    comps.reserve(specs.size());
    for (const auto& s : specs) comps.push_back(generate_sequence(s, n, grid));
    out.push_back(estimate_hmeasure(comps, windows, mesh, n));
  }
  return out;
}

/// max_entry |w_{k+1} - w_k| for successive estimates (length n_list - 1).
inline std::vector<double> stabilization_report(const std::vector<HMeasureEstimate>& estimates) {
  std::vector<double> out;
  for (std::size_t k = 1; k < estimates.size(); ++k) {
    const auto& p = estimates[k - 1].weights();
    const auto& q = estimates[k].weights();
    if (p.size() != q.size()) throw ContractViolation("stabilization_report: estimate shapes differ");
    double m = 0.0;
    for (std::size_t e = 0; e < p.size(); ++e) m = std::max(m, std::abs(q[e] - p[e]));
    out.push_back(m);
  }
  return out;
}

/// Total diagonal mass sum_{a, b} mu^{ii}(a, b) of a single field, i.e.
/// sum_a sum_{xi != 0} |F(chi_a w)|^2 / L^d.
inline double diagonal_mass(const SampledField& w, const std::vector<SampledField>& windows) {
  const auto& grid = w.grid();
  double s = 0.0;
  for (const auto& chi : windows) {
    const SampledField f = forward_dft(window_apply(w, chi));
    for (std::size_t x = 1; x < grid.size(); ++x) s += std::norm(f[x]);
  }
  return s * grid.dual_cell_volume();
}

}  // namespace defectscope
