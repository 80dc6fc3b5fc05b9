#pragma once

#include <json.hpp>

#include <limits>
#include <ostream>
#include <vector>

#include "conslaw.hpp"
#include "experiment.hpp"
#include "hmeasure.hpp"
#include "mesh.hpp"

namespace defectscope {

namespace detail {
inline nlohmann::json complex_json(Complex z) { return nlohmann::json::array({z.real(), z.imag()}); }
}  // namespace detail

/// {"components", "x_cells", "p_cells", "n", "weights": [i][j][a][b] -> [re, im]}
inline nlohmann::json to_json(const HMeasureEstimate& est) {
  nlohmann::json w = nlohmann::json::array();
  for (std::size_t i = 0; i < est.components(); ++i) {
    nlohmann::json wi = nlohmann::json::array();
    for (std::size_t j = 0; j < est.components(); ++j) {
      nlohmann::json wij = nlohmann::json::array();
      for (std::size_t a = 0; a < est.x_cells(); ++a) {
        nlohmann::json wija = nlohmann::json::array();
        for (std::size_t b = 0; b < est.p_cells(); ++b) wija.push_back(detail::complex_json(est.weight(i, j, a, b)));
        wij.push_back(std::move(wija));
      }
      wi.push_back(std::move(wij));
    }
    w.push_back(std::move(wi));
  }
  return {{"components", est.components()},
          {"x_cells", est.x_cells()},
          {"p_cells", est.p_cells()},
          {"n", est.n_used()},
          {"weights", std::move(w)}};
}

/// CSV: i,j,x_cell,p_cell,re,im,n
inline void write_hmeasure_csv(const std::vector<HMeasureEstimate>& estimates, std::ostream& os) {
  const auto old = os.precision(std::numeric_limits<double>::max_digits10);
  os << "i,j,x_cell,p_cell,re,im,n\n";
  for (const auto& est : estimates)
    for (std::size_t i = 0; i < est.components(); ++i)
      for (std::size_t j = 0; j < est.components(); ++j)
        for (std::size_t a = 0; a < est.x_cells(); ++a)
          for (std::size_t b = 0; b < est.p_cells(); ++b) {
            const Complex z = est.weight(i, j, a, b);
            os << i << ',' << j << ',' << a << ',' << b << ',' << z.real() << ',' << z.imag() << ',' << est.n_used() << '\n';
          }
  os.precision(old);
}

/// Plot data, CSV: n,p_cell,eta_1..eta_d,mass (diagonal mass summed over components and x cells).
inline void write_marginals_csv(const std::vector<HMeasureEstimate>& estimates, const ManifoldMesh& mesh, std::ostream& os) {
  const auto old = os.precision(std::numeric_limits<double>::max_digits10);
  os << "n,p_cell";
  for (std::size_t k = 0; k < mesh.fibration().dims(); ++k) os << ",eta_" << (k + 1);
  os << ",mass\n";
  for (const auto& est : estimates)
    for (std::size_t b = 0; b < est.p_cells(); ++b) {
      os << est.n_used() << ',' << b;
      for (double c : mesh.node(b)) os << ',' << c;
      os << ',' << est.p_cell_marginal(b) << '\n';
    }
  os.precision(old);
}

inline nlohmann::json to_json(const DefectProbeReport& rep) {
  nlohmann::json values = nlohmann::json::array();
  for (const auto& v : rep.values) values.push_back(detail::complex_json(v));
  return {{"lambda", rep.lambda},
          {"modulations", rep.modulations},
          {"values", std::move(values)},
          {"decay_slope", rep.decay_slope ? nlohmann::json(*rep.decay_slope) : nlohmann::json(nullptr)},
          {"flat", rep.flat}};
}

inline nlohmann::json to_json(const NonlinearityReport& rep, const ManifoldMesh& mesh,
                              const std::vector<Point>& x_samples) {
  nlohmann::json pairs = nlohmann::json::array();
  for (const auto& p : rep.degenerate) {
    nlohmann::json x = nlohmann::json::array(), eta = nlohmann::json::array();
    if (p.x_index < x_samples.size())
      for (double c : x_samples[p.x_index]) x.push_back(c);
    for (double c : mesh.node(p.node_index)) eta.push_back(c);
    pairs.push_back({{"x_index", p.x_index}, {"node", p.node_index}, {"x", x}, {"eta", eta}, {"fraction", p.fraction}});
  }
  return {{"verdict", rep.genuinely_nonlinear ? "genuinely nonlinear" : "not genuinely nonlinear"},
          {"genuinely_nonlinear", rep.genuinely_nonlinear},
          {"worst_fraction", rep.worst_fraction},
          {"scale", rep.scale},
          {"degenerate", std::move(pairs)}};
}

inline nlohmann::json to_json(const ExperimentReport& rep) {
  return {{"flux", rep.flux_name},         {"n_list", rep.n_list},
          {"lambdas", rep.lambdas},        {"mass", rep.mass},
          {"total_mass", rep.total_mass},  {"residual_norms", rep.residual_norms},
          {"relaxation_steps", rep.steps}};
}

/// CSV: n,lambda,mass
inline void write_experiment_csv(const ExperimentReport& rep, std::ostream& os) {
  const auto old = os.precision(std::numeric_limits<double>::max_digits10);
  os << "n,lambda,mass\n";
  for (std::size_t i = 0; i < rep.n_list.size(); ++i)
    for (std::size_t l = 0; l < rep.lambdas.size(); ++l)
      os << rep.n_list[i] << ',' << rep.lambdas[l] << ',' << rep.mass[i][l] << '\n';
  os.precision(old);
}

}  // namespace defectscope
