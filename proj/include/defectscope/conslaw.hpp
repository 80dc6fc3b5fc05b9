#pragma once

#include <cmath>
#include <numbers>
#include <optional>
#include <vector>

#include "errors.hpp"
#include "field.hpp"
#include "flux.hpp"
#include "mesh.hpp"
#include "spectral.hpp"
#include "symbols.hpp"

namespace defectscope {

inline double sgn(double v) noexcept { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

inline void require_real(const SampledField& u, const char* where) {
  if (u.space() != Space::physical) throw ContractViolation(std::string(where) + ": u must be in physical space");
  if (!u.is_real()) throw ContractViolation(std::string(where) + ": u must be real-valued");
}

inline void require_flux_dims(const FluxFamily& flux, const GridSpec& grid, const char* where) {
  if (flux.dims() != grid.dims()) throw ContractViolation(std::string(where) + ": flux dimension does not match grid");
}

/// h(x, lambda) = sgn(u(x) - lambda) on a lambda grid, stored lambda-major.
class KineticField {
 public:
  KineticField(GridSpec grid, LambdaGrid lambdas, std::vector<double> values)
      : grid_(grid), lambdas_(lambdas), values_(std::move(values)) {
    if (values_.size() != grid_.size() * lambdas_.size()) throw ContractViolation("KineticField: size mismatch");
  }

  const GridSpec& grid() const noexcept { return grid_; }
  const LambdaGrid& lambdas() const noexcept { return lambdas_; }
  double at(std::size_t l, std::size_t x) const noexcept { return values_[l * grid_.size() + x]; }

  /// The slice lambda = lambdas[l] as a physical field.
  SampledField slice(std::size_t l) const {
    std::vector<Complex> v(grid_.size());
    for (std::size_t x = 0; x < v.size(); ++x) v[x] = at(l, x);
    return SampledField(grid_, std::move(v));
  }

 private:
  GridSpec grid_;
  LambdaGrid lambdas_;
  std::vector<double> values_;
};

inline KineticField kinetic_lift(const SampledField& u, const LambdaGrid& lambdas) {
  require_real(u, "kinetic_lift");
  const std::size_t n = u.size();
  std::vector<double> h(n * lambdas.size());
  for (std::size_t l = 0; l < lambdas.size(); ++l)
    for (std::size_t x = 0; x < n; ++x) h[l * n + x] = sgn(u[x].real() - lambdas[l]);
  return KineticField(u.grid(), lambdas, std::move(h));
}

namespace detail {
// A_{psi_k} phi for the normalized fractional symbols psi_k, k = 0..d-1.
inline std::vector<SampledField> normalized_multipliers(const SampledField& phi, const std::vector<double>& alpha) {
  std::vector<SampledField> out;
  out.reserve(alpha.size());
  for (std::size_t k = 0; k < alpha.size(); ++k) out.push_back(apply_multiplier(phi, fractional_symbol(k, alpha, true)));
  return out;
}

inline Complex entropy_defect_form(const SampledField& u, double lambda, const SampledField& phi1,
                                   const std::vector<SampledField>& a_phi2, const FluxFamily& flux) {
  const auto& grid = u.grid();
  Complex s{};
  for (std::size_t x = 0; x < grid.size(); ++x) {
    const Point pos = grid.position(x);
    const double ux = u[x].real();
    const double sg = sgn(ux - lambda);
    if (sg == 0.0) continue;
    for (std::size_t k = 0; k < flux.dims(); ++k) {
      const double w = sg * (flux.flux(k, pos, ux) - flux.flux(k, pos, lambda));
      s += w * phi1[x] * std::conj(a_phi2[k][x]);
    }
  }
  return s * grid.cell_volume();
}
}  // namespace detail

/// sum_x sum_k sgn(u - lambda)(f_k(x, u) - f_k(x, lambda)) phi1 conj(A_{psi_k} phi2) h^d,
/// psi_k the normalized fractional symbol of order alpha_k.
inline Complex entropy_defect_form(const SampledField& u, double lambda, const SampledField& phi1,
                                   const SampledField& phi2, const FluxFamily& flux) {
  require_real(u, "entropy_defect_form");
  require_flux_dims(flux, u.grid(), "entropy_defect_form");
  if (!(phi1.grid() == u.grid()) || !(phi2.grid() == u.grid()))
    throw ContractViolation("entropy_defect_form: fields must share one grid");
  return detail::entropy_defect_form(u, lambda, phi1, detail::normalized_multipliers(phi2, flux.alpha()), flux);
}

/// Kinetic counterpart: -sum_x sum_k h(x, lambda) d_lambda f_k(x, lambda) phi1 conj(A_{psi_k} phi2) h^d.
/// Its value is the lambda-derivative of entropy_defect_form (a.e. in lambda).
inline Complex kinetic_form(const SampledField& u, double lambda, const SampledField& phi1, const SampledField& phi2,
                            const FluxFamily& flux) {
  require_real(u, "kinetic_form");
  require_flux_dims(flux, u.grid(), "kinetic_form");
  const auto a_phi2 = detail::normalized_multipliers(phi2, flux.alpha());
  const auto& grid = u.grid();
  Complex s{};
  for (std::size_t x = 0; x < grid.size(); ++x) {
    const Point pos = grid.position(x);
    const double h = sgn(u[x].real() - lambda);
    for (std::size_t k = 0; k < flux.dims(); ++k) s -= h * flux.derivative(k, pos, lambda) * phi1[x] * std::conj(a_phi2[k][x]);
  }
  return s * grid.cell_volume();
}

struct DefectProbeReport {
  double lambda = 0.0;
  std::vector<int> modulations;
  std::vector<Complex> values;
  std::optional<double> decay_slope;  // least-squares slope of log|R_m| vs log|m|, m != 0
  bool flat = false;                  // every probe value vanished
};

/// Entropy-defect form against the weakly-null family
/// phi2_m = e^{2 pi i m x_1 / L_1} * bump, one value per modulation m.
inline DefectProbeReport compactness_probe(const SampledField& u, double lambda, const SampledField& phi1,
                                           const FluxFamily& flux, const std::vector<int>& modulations,
                                           std::optional<SampledField> bump = std::nullopt) {
  require_real(u, "compactness_probe");
  require_flux_dims(flux, u.grid(), "compactness_probe");
  if (modulations.empty()) throw ContractViolation("compactness_probe: empty modulation list");
  const auto& grid = u.grid();
  const SampledField envelope = bump ? *bump : smooth_bump(grid, 0.25 * grid.box_length(0));

  DefectProbeReport rep;
  rep.lambda = lambda;
  rep.modulations = modulations;
  for (int m : modulations) {
    GridSpec::Modes modes{};
    modes[0] = m;
    if (!grid.mode_in_band(m)) throw AliasingError("compactness_probe: modulation " + std::to_string(m) + " aliases");
    const SampledField phi2 = window_apply(lattice_mode(grid, modes), envelope);
    rep.values.push_back(entropy_defect_form(u, lambda, phi1, phi2, flux));
  }

  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  std::size_t cnt = 0;
  bool all_zero = true;
  for (std::size_t i = 0; i < modulations.size(); ++i) {
    const double mag = std::abs(rep.values[i]);
    if (mag > 0.0) all_zero = false;
    if (modulations[i] == 0 || !(mag > 1e-300)) continue;
    const double lx = std::log(std::abs(static_cast<double>(modulations[i])));
    const double ly = std::log(mag);
    sx += lx; sy += ly; sxx += lx * lx; sxy += lx * ly;
    ++cnt;
  }
  rep.flat = all_zero;
  const double den = static_cast<double>(cnt) * sxx - sx * sx;
  if (cnt >= 2 && std::abs(den) > 1e-300) rep.decay_slope = (static_cast<double>(cnt) * sxy - sx * sy) / den;
  return rep;
}

struct DegeneratePair {
  std::size_t x_index;
  std::size_t node_index;
  double fraction;
};

struct NonlinearityOptions {
  double tol = 1e-6;
  double degeneracy_fraction = 0.1;
  std::vector<Point> x_samples;  // empty: the origin only
};

struct NonlinearityReport {
  double worst_fraction = 0.0;
  std::vector<DegeneratePair> degenerate;
  bool genuinely_nonlinear = true;
  double scale = 0.0;  // max |Sigma| over all (x, eta, lambda)
};

/// Genuine-nonlinearity check of lambda -> Sigma(x, eta, lambda) = sum_k (i eta_k)^{alpha_k} f_k(x, lambda)
/// over mesh nodes eta and x samples.
///
/// A lambda is degenerate when |Sigma| <= tol * S, S the largest |Sigma| over
/// all (x, eta, lambda); this makes the verdict invariant under positive
/// rescaling of the flux. A pair (x, eta) is degenerate when its degenerate
/// lambda fraction exceeds options.degeneracy_fraction.
inline NonlinearityReport nonlinearity_index(const FluxFamily& flux, const ManifoldMesh& mesh,
                                             const NonlinearityOptions& options = {}) {
  if (!(options.tol > 0.0)) throw ContractViolation("nonlinearity_index: tol must be positive");
  if (flux.dims() != mesh.fibration().dims()) throw ContractViolation("nonlinearity_index: dimension mismatch");
  const std::size_t d = flux.dims();
  std::vector<Point> xs = options.x_samples;
  if (xs.empty()) xs.push_back(Point(d));
  const auto& lam = flux.lambda_grid();

  const std::size_t nx = xs.size(), nn = mesh.cell_count(), nl = lam.size();
  std::vector<double> mag(nx * nn * nl);
  double scale = 0.0;
  for (std::size_t xi = 0; xi < nx; ++xi)
    for (std::size_t e = 0; e < nn; ++e) {
      const Point& eta = mesh.node(e);
      Complex coef[kMaxDims];
      for (std::size_t k = 0; k < d; ++k) coef[k] = fractional_power_i(eta[k], flux.alpha()[k]);
      for (std::size_t l = 0; l < nl; ++l) {
        Complex s{};
        for (std::size_t k = 0; k < d; ++k) s += coef[k] * flux.flux(k, xs[xi], lam[l]);
        const double m = std::abs(s);
        mag[(xi * nn + e) * nl + l] = m;
        scale = std::max(scale, m);
      }
    }

  NonlinearityReport rep;
  rep.scale = scale;
  for (std::size_t xi = 0; xi < nx; ++xi)
    for (std::size_t e = 0; e < nn; ++e) {
      std::size_t bad = 0;
      for (std::size_t l = 0; l < nl; ++l)
        if (mag[(xi * nn + e) * nl + l] <= options.tol * scale) ++bad;
      const double frac = static_cast<double>(bad) / static_cast<double>(nl);
      rep.worst_fraction = std::max(rep.worst_fraction, frac);
      if (frac > options.degeneracy_fraction) rep.degenerate.push_back({xi, e, frac});
    }
  rep.genuinely_nonlinear = rep.degenerate.empty();
  return rep;
}

/// sum_x sum_k f_k(x, u) conj(d^{alpha_k}_{x_k} phi) h^d, with the fractional
/// derivative applied as the multiplier (i xi_k)^{alpha_k} (or (2 pi i xi_k)^{alpha_k}).
inline Complex weak_residual(const SampledField& u, const FluxFamily& flux, const SampledField& phi,
                             DerivativeConvention conv = {}) {
  require_real(u, "weak_residual");
  require_flux_dims(flux, u.grid(), "weak_residual");
  if (!(phi.grid() == u.grid())) throw ContractViolation("weak_residual: grid mismatch");
  const auto& grid = u.grid();
  Complex s{};
  for (std::size_t k = 0; k < flux.dims(); ++k) {
    const SampledField dphi = apply_multiplier(phi, derivative_symbol(k, flux.alpha()[k], conv));
    for (std::size_t x = 0; x < grid.size(); ++x) s += flux.flux(k, grid.position(x), u[x].real()) * std::conj(dphi[x]);
  }
  return s * grid.cell_volume();
}

}  // namespace defectscope
