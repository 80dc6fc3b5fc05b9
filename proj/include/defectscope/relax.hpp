#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include "conslaw.hpp"
#include "errors.hpp"
#include "field.hpp"
#include "flux.hpp"
#include "spectral.hpp"
#include "symbols.hpp"

namespace defectscope {

struct RelaxResult {
  SampledField state;
  double residual_norm = 0.0;  // L2 norm of the pseudo-time right-hand side at the final state
  std::size_t steps = 0;
  double dtau = 0.0;  // step actually used (tau_end / steps)
};

/// Explicit-Euler step bound c / (eps (2 pi N/L)^2 + max_k max|d_lambda f_k| (2 pi N/L)^{alpha_k})
/// with c = 0.5. The derivative maximum runs over the grid points and the
/// union of the flux lambda grid and the lambda range of u0.
inline double stable_step_bound(const SampledField& u0, const FluxFamily& flux, double epsilon) {
  const auto& grid = u0.grid();
  double min_length = grid.box_length(0);
  for (std::size_t k = 1; k < grid.dims(); ++k) min_length = std::min(min_length, grid.box_length(k));
  const double kmax = 2.0 * std::numbers::pi * static_cast<double>(grid.points_per_axis()) / min_length;

  std::vector<double> lambdas = flux.lambda_grid().values();
  for (double l : LambdaGrid::around(u0, 16).values()) lambdas.push_back(l);

  double den = epsilon * kmax * kmax;
  for (std::size_t k = 0; k < flux.dims(); ++k) {
    double m = 0.0;
    for (std::size_t x = 0; x < grid.size(); ++x) {
      const Point pos = grid.position(x);
      for (double l : lambdas) m = std::max(m, std::abs(flux.derivative(k, pos, l)));
    }
    den += m * std::pow(kmax, flux.alpha()[k]);
  }
  return den > 0.0 ? 0.5 / den : std::numeric_limits<double>::infinity();
}

namespace detail {
class RelaxationOperator {
 public:
  RelaxationOperator(const GridSpec& grid, const FluxFamily& flux, double epsilon, DerivativeConvention conv)
      : grid_(grid), flux_(flux), epsilon_(epsilon), laplacian_(SampledField::zeros(grid, Space::frequency)) {
    for (std::size_t k = 0; k < flux.dims(); ++k)
      derivatives_.push_back(derivative_symbol(k, flux.alpha()[k], conv).on_lattice(grid));
    const double c = -4.0 * std::numbers::pi * std::numbers::pi;
    for (std::size_t i = 0; i < grid.size(); ++i) laplacian_[i] = c * grid.frequency(i).norm_sq();
  }

  /// -sum_k d^{alpha_k}_{x_k} f_k(x, u) + eps Laplacian u, real part.
  SampledField operator()(const SampledField& u) const {
    SampledField rhs_hat = forward_dft(u);
    for (std::size_t i = 0; i < rhs_hat.size(); ++i) rhs_hat[i] *= epsilon_ * laplacian_[i];
    for (std::size_t k = 0; k < flux_.dims(); ++k) {
      std::vector<Complex> fk(grid_.size());
      for (std::size_t x = 0; x < grid_.size(); ++x) fk[x] = flux_.flux(k, grid_.position(x), u[x].real());
      const SampledField fk_hat = forward_dft(SampledField(grid_, std::move(fk)));
      for (std::size_t i = 0; i < rhs_hat.size(); ++i) rhs_hat[i] -= derivatives_[k][i] * fk_hat[i];
    }
    SampledField rhs = inverse_dft(rhs_hat);
    for (auto& v : rhs.values()) v = v.real();
    return rhs;
  }

 private:
  GridSpec grid_;
  const FluxFamily& flux_;
  double epsilon_;
  std::vector<SampledField> derivatives_;
  SampledField laplacian_;
};
}  // namespace detail

/// Pseudo-time relaxation d_tau u + sum_k d^{alpha_k}_{x_k} f_k(x, u) = eps Laplacian u,
/// explicit Euler to tau_end with all space operators applied spectrally.
inline RelaxResult relax_to_quasisolution(const SampledField& u0, const FluxFamily& flux, double epsilon,
                                          double tau_end, double dtau, DerivativeConvention conv = {}) {
  require_real(u0, "relax_to_quasisolution");
  require_flux_dims(flux, u0.grid(), "relax_to_quasisolution");
  if (epsilon < 0.0) throw ContractViolation("relax_to_quasisolution: epsilon must be nonnegative");
  if (!(tau_end > 0.0) || !(dtau > 0.0)) throw ContractViolation("relax_to_quasisolution: tau_end and dtau must be positive");
  const double bound = stable_step_bound(u0, flux, epsilon);
  if (dtau > bound)
    throw ContractViolation("relax_to_quasisolution: dtau = " + std::to_string(dtau) +
                            " violates the stability bound " + std::to_string(bound));

  const auto steps = static_cast<std::size_t>(std::ceil(tau_end / dtau - 1e-12));
  const double step = tau_end / static_cast<double>(steps);
  const detail::RelaxationOperator rhs(u0.grid(), flux, epsilon, conv);

  SampledField u = u0;
  for (auto& v : u.values()) v = v.real();
  for (std::size_t s = 0; s < steps; ++s) {
    const SampledField r = rhs(u);
    for (std::size_t i = 0; i < u.size(); ++i) {
      u[i] += step * r[i];
      if (!std::isfinite(u[i].real()))
        throw NumericFailure("relax_to_quasisolution: non-finite value at step " + std::to_string(s + 1) +
                             ", grid index " + std::to_string(i));
    }
  }
  const double residual = std::sqrt(rhs(u).norm_sq());
  return {u, residual, steps, step};
}

/// Step size from the stability bound (tau_end itself when the bound is infinite).
inline double default_step(const SampledField& u0, const FluxFamily& flux, double epsilon, double tau_end) {
  return std::min(tau_end, stable_step_bound(u0, flux, epsilon));
}

}  // namespace defectscope
