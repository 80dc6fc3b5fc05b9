#pragma once

#include <optional>
#include <string>
#include <vector>

#include "conslaw.hpp"
#include "hmeasure.hpp"
#include "relax.hpp"
#include "sequence.hpp"

namespace defectscope {

struct ExperimentOptions {
  double epsilon = 1e-3;
  double tau_end = 0.05;
  std::optional<double> dtau;  // default: the stability bound
  DerivativeConvention conv{};
};

struct ExperimentReport {
  std::string flux_name;
  std::vector<int> n_list;
  std::vector<double> lambdas;
  std::vector<std::vector<double>> mass;  // [n][lambda]: diagonal H-measure mass of h_n - h
  std::vector<double> total_mass;         // [n]: sum_lambda mass * d lambda
  std::vector<double> residual_norms;     // [n]: relaxation residual
  std::vector<std::size_t> steps;         // [n]
};

/// For each n: relax the oscillatory data u_n^0 to an approximate
/// quasi-solution u_n, lift h_n = sgn(u_n - lambda), and measure the diagonal
/// H-measure mass of h_n - h per lambda, where h is the mean of h_n over n_list.
inline ExperimentReport oscillation_experiment(const FluxFamily& flux, const SequenceSpec& spec, const GridSpec& grid,
                                               const ExperimentOptions& options,
                                               const std::vector<SampledField>& windows, const ManifoldMesh& mesh,
                                               const std::vector<int>& n_list) {
  if (n_list.empty()) throw ContractViolation("oscillation_experiment: empty n list");
  require_flux_dims(flux, grid, "oscillation_experiment");
  require_partition(windows, grid);
  const LambdaGrid& lam = flux.lambda_grid();

  ExperimentReport rep;
  rep.flux_name = flux.name();
  rep.n_list = n_list;
  rep.lambdas = lam.values();

  std::vector<KineticField> lifts;
  lifts.reserve(n_list.size());
  for (int n : n_list) {
    SampledField u0 = generate_sequence(spec, n, grid);
    if (!u0.is_real(1e-12)) throw ContractViolation("oscillation_experiment: sequence data must be real");
    for (auto& v : u0.values()) v = v.real();
    const double dtau = options.dtau ? *options.dtau : default_step(u0, flux, options.epsilon, options.tau_end);
    const RelaxResult relaxed = relax_to_quasisolution(u0, flux, options.epsilon, options.tau_end, dtau, options.conv);
    rep.residual_norms.push_back(relaxed.residual_norm);
    rep.steps.push_back(relaxed.steps);
    lifts.push_back(kinetic_lift(relaxed.state, lam));
  }

  const std::size_t nx = grid.size();
  const double inv = 1.0 / static_cast<double>(lifts.size());
  for (const auto& h : lifts) {
    std::vector<double> row(lam.size());
    double total = 0.0;
    for (std::size_t l = 0; l < lam.size(); ++l) {
      std::vector<Complex> w(nx);
      for (std::size_t x = 0; x < nx; ++x) {
        double mean = 0.0;
        for (const auto& other : lifts) mean += other.at(l, x);
        w[x] = h.at(l, x) - mean * inv;
      }
      row[l] = estimate_hmeasure({SampledField(grid, std::move(w))}, windows, mesh).total_diagonal_mass();
      total += row[l] * lam.step();
    }
    rep.mass.push_back(std::move(row));
    rep.total_mass.push_back(total);
  }
  return rep;
}

}  // namespace defectscope
