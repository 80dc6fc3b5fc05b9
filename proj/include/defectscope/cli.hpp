#pragma once

// Batch front-end: defectscope <command> --config <path> [--seed S] [--out DIR]
//
// Every command computes its artifacts in memory first; files are written
// only once the whole run succeeded, followed by manifest.json.

#include <CLI11.hpp>
#include <fftw3.h>
#include <json.hpp>
#include <openssl/evp.h>

#include <Eigen/Core>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <limits>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "commutator.hpp"
#include "conslaw.hpp"
#include "errors.hpp"
#include "experiment.hpp"
#include "fibration.hpp"
#include "hmeasure.hpp"
#include "mesh.hpp"
#include "partition.hpp"
#include "report_io.hpp"
#include "sequence.hpp"
#include "symbols.hpp"

namespace defectscope::cli {

inline constexpr const char* kVersion = "0.1.0";

enum ExitCode : int { kSuccess = 0, kValidation = 2, kNumeric = 3 };

using nlohmann::json;

struct Artifact {
  std::string path;
  std::string content;
};

// ---------------------------------------------------------------- config access

namespace detail {

[[noreturn]] inline void invalid(const std::string& where, const std::string& what) {
  throw ValidationError(where + ": " + what);
}

inline const json& object_at(const json& parent, const char* key, const std::string& where) {
  if (!parent.contains(key)) invalid(where, std::string("missing section '") + key + "'");
  const json& v = parent.at(key);
  if (!v.is_object()) invalid(where + "." + key, "expected an object");
  return v;
}

inline void check_keys(const json& obj, std::initializer_list<const char*> allowed, const std::string& where) {
  if (!obj.is_object()) invalid(where, "expected an object");
  std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& [k, v] : obj.items())
    if (!ok.count(k)) invalid(where, "unknown key '" + k + "'");
}

inline double number(const json& obj, const char* key, const std::string& where, std::optional<double> fallback,
                     double lo = -std::numeric_limits<double>::infinity(),
                     double hi = std::numeric_limits<double>::infinity()) {
  double v;
  if (!obj.contains(key)) {
    if (!fallback) invalid(where, std::string("missing key '") + key + "'");
    v = *fallback;
  } else {
    const json& j = obj.at(key);
    if (!j.is_number()) invalid(where + "." + key, "expected a number");
    v = j.get<double>();
  }
  if (!std::isfinite(v) || v < lo || v > hi) {
    std::ostringstream os;
    os << "value " << v << " outside [" << lo << ", " << hi << "]";
    invalid(where + "." + key, os.str());
  }
  return v;
}

inline long integer(const json& obj, const char* key, const std::string& where, std::optional<long> fallback, long lo,
                    long hi) {
  long v;
  if (!obj.contains(key)) {
    if (!fallback) invalid(where, std::string("missing key '") + key + "'");
    v = *fallback;
  } else {
    const json& j = obj.at(key);
    if (!j.is_number_integer()) invalid(where + "." + key, "expected an integer");
    v = j.get<long>();
  }
  if (v < lo || v > hi) invalid(where + "." + key, "value " + std::to_string(v) + " outside [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
  return v;
}

inline std::string text(const json& obj, const char* key, const std::string& where, std::optional<std::string> fallback,
                        std::initializer_list<const char*> choices) {
  std::string v;
  if (!obj.contains(key)) {
    if (!fallback) invalid(where, std::string("missing key '") + key + "'");
    v = *fallback;
  } else {
    if (!obj.at(key).is_string()) invalid(where + "." + key, "expected a string");
    v = obj.at(key).get<std::string>();
  }
  for (const char* c : choices)
    if (v == c) return v;
  invalid(where + "." + key, "unsupported value '" + v + "'");
}

inline bool boolean(const json& obj, const char* key, const std::string& where, bool fallback) {
  if (!obj.contains(key)) return fallback;
  if (!obj.at(key).is_boolean()) invalid(where + "." + key, "expected true or false");
  return obj.at(key).get<bool>();
}

inline std::vector<double> numbers(const json& j, const std::string& where, std::size_t min_size = 1,
                                   std::size_t max_size = 4096) {
  if (!j.is_array()) invalid(where, "expected an array of numbers");
  if (j.size() < min_size || j.size() > max_size)
    invalid(where, "expected between " + std::to_string(min_size) + " and " + std::to_string(max_size) + " entries");
  std::vector<double> out;
  for (const auto& v : j) {
    if (!v.is_number() || !std::isfinite(v.get<double>())) invalid(where, "expected finite numbers");
    out.push_back(v.get<double>());
  }
  return out;
}

inline Point point(const json& j, std::size_t dims, const std::string& where) {
  const auto v = numbers(j, where, dims, dims);
  Point p(dims);
  for (std::size_t k = 0; k < dims; ++k) p[k] = v[k];
  return p;
}

}  // namespace detail

// ---------------------------------------------------------------- run setup

/// Parsed common sections; command sections are read by each command.
struct RunConfig {
  std::string command;
  std::uint64_t seed = 0;
  json raw;
  GridSpec grid{1, 4};
  FibrationSpec fibration = FibrationSpec::ray_sphere(1);
  std::size_t mesh_resolution = 32;
  DerivativeConvention conv{};
  std::optional<double> band_limit;
};

inline const char* const kCommands[] = {"project", "symbol", "commutator", "hmeasure", "nonlinearity", "defect", "experiment"};

inline RunConfig parse_config(const json& raw, const std::string& command) {
  using namespace detail;
  check_keys(raw,
             {"command", "seed", "grid", "fibration", "mesh", "partition", "sequence", "components", "flux", "lambda",
              "n_list", "flags", "project", "symbol", "commutator", "hmeasure", "nonlinearity", "defect", "experiment"},
             "config");
  RunConfig cfg;
  cfg.raw = raw;
  cfg.command = command;
  if (raw.contains("command")) {
    if (!raw.at("command").is_string() || raw.at("command").get<std::string>() != command)
      invalid("config.command", "does not match the requested command '" + command + "'");
  }
  cfg.seed = static_cast<std::uint64_t>(integer(raw, "seed", "config", 0, 0, std::numeric_limits<long>::max()));

  const json& g = object_at(raw, "grid", "config");
  check_keys(g, {"dims", "points", "length"}, "grid");
  const auto dims = static_cast<std::size_t>(integer(g, "dims", "grid", std::nullopt, 1, 3));
  const auto points = static_cast<std::size_t>(integer(g, "points", "grid", std::nullopt, 2, 8192));
  if ((points & (points - 1)) != 0) invalid("grid.points", "must be a power of two");
  std::size_t total = 1;
  for (std::size_t k = 0; k < dims; ++k) total *= points;
  if (total < 4 || total > (1u << 22)) invalid("grid", "total point count must lie in [4, 4194304]");
  std::array<double, kMaxDims> lengths{1.0, 1.0, 1.0};
  if (g.contains("length")) {
    if (g.at("length").is_array()) {
      const auto v = numbers(g.at("length"), "grid.length", dims, dims);
      for (std::size_t k = 0; k < dims; ++k) lengths[k] = v[k];
    } else {
      lengths.fill(number(g, "length", "grid", std::nullopt));
    }
    for (std::size_t k = 0; k < dims; ++k)
      if (!(lengths[k] > 0.0 && lengths[k] <= 1e6)) invalid("grid.length", "lengths must lie in (0, 1e6]");
  }
  cfg.grid = GridSpec(dims, points, lengths);

  const json& f = object_at(raw, "fibration", "config");
  check_keys(f, {"kind", "alpha"}, "fibration");
  const std::string kind = text(f, "kind", "fibration", std::nullopt, {"ray_sphere", "parabolic", "fractional"});
  if (kind == "fractional") {
    if (!f.contains("alpha")) invalid("fibration", "fractional fibration needs 'alpha'");
    const auto alpha = numbers(f.at("alpha"), "fibration.alpha", dims, dims);
    for (double a : alpha)
      if (!(a > 0.0 && a <= 1.0)) invalid("fibration.alpha", "exponents must lie in (0, 1], got " + std::to_string(a));
    cfg.fibration = FibrationSpec::fractional(alpha);
  } else {
    if (f.contains("alpha")) invalid("fibration", "'alpha' is only used by the fractional kind");
    cfg.fibration = kind == "parabolic" ? FibrationSpec::parabolic(dims) : FibrationSpec::ray_sphere(dims);
  }

  if (raw.contains("mesh")) {
    const json& m = object_at(raw, "mesh", "config");
    check_keys(m, {"resolution"}, "mesh");
    const long hi = dims == 3 ? 64 : 4096;
    cfg.mesh_resolution = static_cast<std::size_t>(integer(m, "resolution", "mesh", 32, dims == 1 ? 1 : 4, hi));
  } else if (dims == 3) {
    cfg.mesh_resolution = 8;
  }

  if (raw.contains("flags")) {
    const json& fl = object_at(raw, "flags", "config");
    check_keys(fl, {"two_pi_derivative", "band_limit_b"}, "flags");
    cfg.conv.two_pi = boolean(fl, "two_pi_derivative", "flags", false);
    if (fl.contains("band_limit_b") && !fl.at("band_limit_b").is_null())
      cfg.band_limit = number(fl, "band_limit_b", "flags", std::nullopt, 0.0);
  }
  return cfg;
}

namespace detail {

inline ManifoldMesh make_mesh(const RunConfig& cfg) { return ManifoldMesh(cfg.fibration, cfg.mesh_resolution); }

inline std::vector<SampledField> make_partition(const RunConfig& cfg) {
  std::size_t cells = 2;
  double transition = 0.5;
  if (cfg.raw.contains("partition")) {
    const json& p = object_at(cfg.raw, "partition", "config");
    check_keys(p, {"cells", "transition"}, "partition");
    const long hi = cfg.grid.dims() == 1 ? 64 : (cfg.grid.dims() == 2 ? 8 : 4);
    cells = static_cast<std::size_t>(integer(p, "cells", "partition", 2, 1, hi));
    transition = number(p, "transition", "partition", 0.5, 0.0, 1.0);
  }
  if (cells > cfg.grid.points_per_axis()) invalid("partition.cells", "more cells than grid points per axis");
  return partition_of_unity(cfg.grid, cells, transition);
}

inline std::vector<int> make_n_list(const RunConfig& cfg) {
  if (!cfg.raw.contains("n_list")) invalid("config", "missing key 'n_list'");
  const json& j = cfg.raw.at("n_list");
  if (!j.is_array() || j.empty() || j.size() > 64) invalid("n_list", "expected 1 to 64 positive integers");
  std::vector<int> out;
  for (const auto& v : j) {
    if (!v.is_number_integer() || v.get<long>() < 1 || v.get<long>() > (1 << 20))
      invalid("n_list", "entries must be integers in [1, 1048576]");
    out.push_back(v.get<int>());
  }
  return out;
}

inline SampledField make_window(const json& w, const GridSpec& grid, const std::string& where) {
  check_keys(w, {"kind", "value", "width", "radius", "center"}, where);
  const std::string kind = text(w, "kind", where, std::nullopt, {"constant", "gaussian", "bump"});
  if (kind == "constant") return SampledField::constant(grid, number(w, "value", where, 1.0));
  const Point center = w.contains("center") ? point(w.at("center"), grid.dims(), where + ".center") : box_center(grid);
  if (kind == "gaussian") return gaussian_window(grid, number(w, "width", where, std::nullopt, 1e-6), center);
  return smooth_bump(grid, number(w, "radius", where, std::nullopt, 1e-6), center);
}

inline SpatialFn make_spatial(const json& w, std::size_t dims, const std::string& where) {
  check_keys(w, {"kind", "value", "width", "radius"}, where);
  const std::string kind = text(w, "kind", where, std::nullopt, {"constant", "gaussian", "bump"});
  if (kind == "constant") {
    const double c = number(w, "value", where, 1.0);
    return [c](const Point&) { return Complex(c); };
  }
  if (kind == "gaussian") {
    const double s = number(w, "width", where, std::nullopt, 1e-6);
    return [s](const Point& y) { return Complex(std::exp(-0.5 * y.norm_sq() / (s * s))); };
  }
  const double r = number(w, "radius", where, std::nullopt, 1e-6);
  (void)dims;
  return [r](const Point& y) {
    double v = 1.0;
    for (double c : y) {
      const double s = c / r;
      v *= std::abs(s) < 1.0 ? std::exp(1.0 - 1.0 / (1.0 - s * s)) : 0.0;
    }
    return Complex(v);
  };
}

inline SequenceSpec make_sequence(const json& s, const GridSpec& grid, const std::string& where) {
  check_keys(s, {"kind", "xi0", "window", "center", "profile", "terms", "amplitude_power"}, where);
  const std::size_t d = grid.dims();
  const std::string kind = text(s, "kind", where, std::nullopt, {"plane_wave", "modulated_wave", "concentration", "two_scale"});
  SequenceSpec spec;
  if (kind == "plane_wave" || kind == "modulated_wave") {
    if (!s.contains("xi0")) invalid(where, "missing key 'xi0'");
    const Point xi0 = point(s.at("xi0"), d, where + ".xi0");
    if (kind == "plane_wave") {
      spec = SequenceSpec::plane_wave(xi0);
    } else {
      if (!s.contains("window")) invalid(where, "missing key 'window'");
      spec = SequenceSpec::modulated_wave(xi0, make_spatial(s.at("window"), d, where + ".window"));
    }
  } else if (kind == "concentration") {
    if (!s.contains("profile")) invalid(where, "missing key 'profile'");
    const Point center = s.contains("center") ? point(s.at("center"), d, where + ".center") : box_center(grid);
    spec = SequenceSpec::concentration(make_spatial(s.at("profile"), d, where + ".profile"), center);
  } else {
    // v(x, y) = sum amplitude sin(2 pi (kx.x + ky.y) + phase)
    if (!s.contains("terms") || !s.at("terms").is_array() || s.at("terms").empty())
      invalid(where, "two_scale needs a nonempty 'terms' array");
    struct Term {
      double amplitude, phase;
      Point kx, ky;
    };
    std::vector<Term> terms;
    for (std::size_t i = 0; i < s.at("terms").size(); ++i) {
      const json& t = s.at("terms")[i];
      const std::string tw = where + ".terms[" + std::to_string(i) + "]";
      check_keys(t, {"amplitude", "x", "y", "phase"}, tw);
      Term term{number(t, "amplitude", tw, 1.0), number(t, "phase", tw, 0.0), Point(d), Point(d)};
      if (t.contains("x")) term.kx = point(t.at("x"), d, tw + ".x");
      if (t.contains("y")) term.ky = point(t.at("y"), d, tw + ".y");
      terms.push_back(term);
    }
    spec = SequenceSpec::two_scale_wave([terms](const Point& x, const Point& y) {
      double v = 0.0;
      for (const auto& t : terms) {
        double arg = t.phase;
        for (std::size_t k = 0; k < x.dim(); ++k) arg += 2.0 * std::numbers::pi * (t.kx[k] * x[k] + t.ky[k] * y[k]);
        v += t.amplitude * std::sin(arg);
      }
      return Complex(v);
    });
  }
  spec.amplitude_power = number(s, "amplitude_power", where, 0.0, -4.0, 4.0);
  return spec;
}

inline std::vector<SequenceSpec> make_components(const RunConfig& cfg) {
  if (cfg.raw.contains("components")) {
    if (cfg.raw.contains("sequence")) invalid("config", "give either 'sequence' or 'components', not both");
    const json& c = cfg.raw.at("components");
    if (!c.is_array() || c.empty() || c.size() > 4) invalid("components", "expected 1 to 4 sequence objects");
    std::vector<SequenceSpec> out;
    for (std::size_t i = 0; i < c.size(); ++i)
      out.push_back(make_sequence(c[i], cfg.grid, "components[" + std::to_string(i) + "]"));
    return out;
  }
  return {make_sequence(object_at(cfg.raw, "sequence", "config"), cfg.grid, "sequence")};
}

inline std::optional<LambdaGrid> make_lambda(const RunConfig& cfg) {
  if (!cfg.raw.contains("lambda")) return std::nullopt;
  const json& l = object_at(cfg.raw, "lambda", "config");
  check_keys(l, {"lo", "hi", "count"}, "lambda");
  const double lo = number(l, "lo", "lambda", std::nullopt), hi = number(l, "hi", "lambda", std::nullopt);
  if (!(hi > lo)) invalid("lambda", "need hi > lo");
  return LambdaGrid(lo, hi, static_cast<std::size_t>(integer(l, "count", "lambda", 64, 2, 4096)));
}

inline FluxFamily make_flux(const RunConfig& cfg, const LambdaGrid& lam) {
  const json& f = object_at(cfg.raw, "flux", "config");
  check_keys(f, {"kind", "coeffs", "nodes", "values"}, "flux");
  const std::string kind = text(f, "kind", "flux", std::nullopt, {"zero", "linear", "burgers", "table"});
  const auto& alpha = cfg.fibration.exponents();
  const std::size_t d = alpha.size();
  if (kind == "zero") return FluxFamily::zero(alpha, lam);
  if (kind == "burgers") return FluxFamily::burgers(alpha, lam);
  if (kind == "linear") {
    if (!f.contains("coeffs")) invalid("flux", "linear flux needs 'coeffs'");
    return FluxFamily::linear(numbers(f.at("coeffs"), "flux.coeffs", d, d), alpha, lam);
  }
  if (!f.contains("nodes") || !f.contains("values")) invalid("flux", "table flux needs 'nodes' and 'values'");
  const auto nodes = numbers(f.at("nodes"), "flux.nodes", 2);
  for (std::size_t i = 1; i < nodes.size(); ++i)
    if (!(nodes[i] > nodes[i - 1])) invalid("flux.nodes", "nodes must be strictly increasing");
  const json& vals = f.at("values");
  if (!vals.is_array() || vals.size() != d) invalid("flux.values", "expected one row per axis");
  std::vector<std::vector<double>> rows;
  for (std::size_t k = 0; k < d; ++k)
    rows.push_back(numbers(vals[k], "flux.values[" + std::to_string(k) + "]", nodes.size(), nodes.size()));
  return FluxFamily::table(nodes, rows, alpha, lam);
}

inline ManifoldFn make_psi(const json& p, const RunConfig& cfg, const std::string& where) {
  check_keys(p, {"kind", "axis", "value"}, where);
  const std::string kind = text(p, "kind", where, std::nullopt, {"constant", "coordinate", "power_i"});
  if (kind == "constant") {
    const double c = number(p, "value", where, 1.0);
    return [c](const Point&) { return Complex(c); };
  }
  const auto k = static_cast<std::size_t>(integer(p, "axis", where, 0, 0, static_cast<long>(cfg.grid.dims()) - 1));
  if (kind == "coordinate") return [k](const Point& eta) { return Complex(eta[k]); };
  const double a = cfg.fibration.alpha(k);
  return [k, a](const Point& eta) { return fractional_power_i(eta[k], a); };
}

inline SymbolFn make_symbol(const json& s, const RunConfig& cfg, const std::string& where) {
  check_keys(s, {"kind", "axis", "order", "value", "psi"}, where);
  const std::string kind = text(s, "kind", where, std::nullopt,
                                {"normalized_fractional", "fractional", "derivative", "ray_component", "constant", "lifted"});
  const long last = static_cast<long>(cfg.grid.dims()) - 1;
  if (kind == "constant") return constant_symbol(number(s, "value", where, 1.0));
  if (kind == "lifted") {
    if (!s.contains("psi")) invalid(where, "lifted symbol needs 'psi'");
    return lift_symbol(make_psi(s.at("psi"), cfg, where + ".psi"), make_mesh(cfg), "lifted");
  }
  const auto k = static_cast<std::size_t>(integer(s, "axis", where, 0, 0, last));
  if (kind == "ray_component") return ray_component_symbol(k);
  if (kind == "derivative") return derivative_symbol(k, number(s, "order", where, 1.0, 1e-9, 1.0), cfg.conv);
  return fractional_symbol(k, cfg.fibration.exponents(), kind == "normalized_fractional");
}

inline const json& section(const RunConfig& cfg, const char* name) {
  static const json empty = json::object();
  if (!cfg.raw.contains(name)) return empty;
  return object_at(cfg.raw, name, "config");
}

inline std::string csv_double(double v) {
  std::ostringstream os;
  os.precision(std::numeric_limits<double>::max_digits10);
  os << v;
  return os.str();
}

inline std::string dump(const json& j) { return j.dump(2) + "\n"; }

}  // namespace detail

// ---------------------------------------------------------------- commands

inline std::vector<Artifact> run_project(const RunConfig& cfg) {
  using namespace detail;
  const json& sec = section(cfg, "project");
  check_keys(sec, {"points", "separation"}, "project");
  const std::size_t d = cfg.grid.dims();
  std::vector<Artifact> out;

  if (sec.contains("points")) {
    const json& pts = sec.at("points");
    if (!pts.is_array() || pts.empty() || pts.size() > 100000) invalid("project.points", "expected 1 to 100000 points");
    std::ostringstream os;
    os.precision(std::numeric_limits<double>::max_digits10);
    os << "index";
    for (std::size_t k = 0; k < d; ++k) os << ",xi_" << (k + 1);
    os << ",t";
    for (std::size_t k = 0; k < d; ++k) os << ",eta_" << (k + 1);
    os << '\n';
    for (std::size_t i = 0; i < pts.size(); ++i) {
      const Point xi = point(pts[i], d, "project.points[" + std::to_string(i) + "]");
      if (xi.is_zero()) invalid("project.points[" + std::to_string(i) + "]", "the origin has no fibre");
      const auto [eta, t] = fibre_solve(xi, cfg.fibration);
      os << i;
      for (double c : xi) os << ',' << c;
      os << ',' << t;
      for (double c : eta) os << ',' << c;
      os << '\n';
    }
    out.push_back({"project.csv", os.str()});
  }

  std::ostringstream mesh_csv;
  make_mesh(cfg).write_csv(mesh_csv);
  out.push_back({"mesh.csv", mesh_csv.str()});

  if (sec.contains("separation")) {
    const json& s = sec.at("separation");
    check_keys(s, {"z", "samples"}, "project.separation");
    if (!s.contains("z")) invalid("project.separation", "missing key 'z'");
    const auto zs = numbers(s.at("z"), "project.separation.z", 1, 256);
    const auto samples = static_cast<std::size_t>(integer(s, "samples", "project.separation", 1000, 100, 1000000));
    std::ostringstream os;
    os << "z,modulus\n";
    for (std::size_t i = 0; i < zs.size(); ++i) {
      if (!(zs[i] > 0.0)) invalid("project.separation.z", "entries must be positive");
      os << csv_double(zs[i]) << ',' << csv_double(separation_modulus(cfg.fibration, zs[i], samples, cfg.seed + i)) << '\n';
    }
    out.push_back({"separation.csv", os.str()});
  }
  return out;
}

inline std::vector<Artifact> run_symbol(const RunConfig& cfg) {
  using namespace detail;
  const json& sec = object_at(cfg.raw, "symbol", "config");
  check_keys(sec, {"symbol", "t_values", "uvjet"}, "symbol");
  if (!sec.contains("symbol")) invalid("symbol", "missing key 'symbol'");
  const SymbolFn a = make_symbol(sec.at("symbol"), cfg, "symbol.symbol");
  a.lattice_sup(cfg.grid);  // finiteness on the lattice
  std::vector<Artifact> out;
  std::ostringstream lattice;
  write_symbol_csv(a, cfg.grid, lattice);
  out.push_back({"symbol.csv", lattice.str()});

  if (sec.contains("t_values")) {
    if (!a.has_limit()) invalid("symbol", "admissibility profile needs a symbol with a declared limit");
    const auto ts = numbers(sec.at("t_values"), "symbol.t_values", 1, 1024);
    const ManifoldMesh mesh = make_mesh(cfg);
    std::ostringstream os;
    os << "t,defect\n";
    for (double t : ts) {
      if (!(t > 0.0)) invalid("symbol.t_values", "entries must be positive");
      os << csv_double(t) << ',' << csv_double(admissibility_defect(a, cfg.fibration, t, mesh)) << '\n';
    }
    out.push_back({"admissibility.csv", os.str()});
  }

  if (sec.contains("uvjet")) {
    const json& u = sec.at("uvjet");
    check_keys(u, {"R", "r", "samples"}, "symbol.uvjet");
    const double R = number(u, "R", "symbol.uvjet", std::nullopt, 1e-12);
    if (!u.contains("r")) invalid("symbol.uvjet", "missing key 'r'");
    const auto rs = numbers(u.at("r"), "symbol.uvjet.r", 1, 256);
    const auto samples = static_cast<std::size_t>(integer(u, "samples", "symbol.uvjet", 10000, 1, 10000000));
    std::ostringstream os;
    os << "R,r,modulus\n";
    for (std::size_t i = 0; i < rs.size(); ++i) {
      if (!(rs[i] > 0.0)) invalid("symbol.uvjet.r", "entries must be positive");
      os << csv_double(R) << ',' << csv_double(rs[i]) << ','
         << csv_double(uvjet_modulus(a, cfg.grid, R, rs[i], samples, cfg.seed + i)) << '\n';
    }
    out.push_back({"uvjet.csv", os.str()});
  }
  return out;
}

inline std::vector<Artifact> run_commutator(const RunConfig& cfg) {
  using namespace detail;
  const json& sec = object_at(cfg.raw, "commutator", "config");
  check_keys(sec, {"symbol", "window", "radii", "differences"}, "commutator");
  if (!sec.contains("symbol") || !sec.contains("window")) invalid("commutator", "needs 'symbol' and 'window'");
  if (cfg.grid.size() > kMaxDenseCommutator)
    invalid("grid", "dense commutator assembly is limited to 4096 lattice points");
  const SymbolFn a = make_symbol(sec.at("symbol"), cfg, "commutator.symbol");
  const SampledField b = make_window(sec.at("window"), cfg.grid, "commutator.window");
  CommutatorOptions opts;
  opts.band_limit = cfg.band_limit;
  opts.differences = text(sec, "differences", "commutator", "linear", {"linear", "periodic"}) == "periodic"
                         ? FrequencyDifference::periodic
                         : FrequencyDifference::linear;
  std::vector<double> radii;
  if (sec.contains("radii")) {
    radii = numbers(sec.at("radii"), "commutator.radii", 1, 1024);
    for (double r : radii)
      if (r < 0.0) invalid("commutator.radii", "radii must be nonnegative");
  } else {
    const double top = cfg.grid.nyquist_radius();
    for (int i = 0; i <= 16; ++i) radii.push_back(top * i / 16.0);
  }
  const auto op = commutator_matrix(a, b, cfg.grid, opts);
  std::ostringstream os;
  write_profile_csv(tail_profile(op, radii), os);
  return {{"profile.csv", os.str()}};
}

inline std::vector<Artifact> run_hmeasure(const RunConfig& cfg) {
  using namespace detail;
  check_keys(section(cfg, "hmeasure"), {}, "hmeasure");
  const auto specs = make_components(cfg);
  const auto windows = make_partition(cfg);
  const ManifoldMesh mesh = make_mesh(cfg);
  const auto estimates = estimate_hmeasure(specs, cfg.grid, windows, mesh, make_n_list(cfg));
  json j = {{"estimates", json::array()}, {"stabilization", stabilization_report(estimates)}};
  for (const auto& e : estimates) j["estimates"].push_back(to_json(e));
  std::ostringstream csv, marg;
  write_hmeasure_csv(estimates, csv);
  write_marginals_csv(estimates, mesh, marg);
  return {{"hmeasure.json", dump(j)}, {"hmeasure.csv", csv.str()}, {"marginals.csv", marg.str()}};
}

inline std::vector<Artifact> run_nonlinearity(const RunConfig& cfg) {
  using namespace detail;
  const json& sec = section(cfg, "nonlinearity");
  check_keys(sec, {"tol", "degeneracy_fraction", "x_samples"}, "nonlinearity");
  const LambdaGrid lam = make_lambda(cfg).value_or(LambdaGrid(-1.0, 1.0, 64));
  const FluxFamily flux = make_flux(cfg, lam);
  NonlinearityOptions opts;
  opts.tol = number(sec, "tol", "nonlinearity", 1e-6, 1e-300);
  opts.degeneracy_fraction = number(sec, "degeneracy_fraction", "nonlinearity", 0.1, 0.0, 1.0);
  if (sec.contains("x_samples")) {
    const json& xs = sec.at("x_samples");
    if (!xs.is_array() || xs.size() > 4096) invalid("nonlinearity.x_samples", "expected an array of points");
    for (std::size_t i = 0; i < xs.size(); ++i)
      opts.x_samples.push_back(point(xs[i], cfg.grid.dims(), "nonlinearity.x_samples[" + std::to_string(i) + "]"));
  }
  std::vector<Point> xs = opts.x_samples;
  if (xs.empty()) xs.push_back(Point(cfg.grid.dims()));
  const ManifoldMesh mesh = make_mesh(cfg);
  const auto rep = nonlinearity_index(flux, mesh, opts);
  json j = to_json(rep, mesh, xs);
  j["flux"] = flux.name();
  j["derivative_consistency"] = flux.derivative_consistency(xs);
  return {{"nonlinearity.json", dump(j)}};
}

inline std::vector<Artifact> run_defect(const RunConfig& cfg) {
  using namespace detail;
  const json& sec = object_at(cfg.raw, "defect", "config");
  check_keys(sec, {"n", "lambda", "modulations", "phi1", "bump"}, "defect");
  const auto spec = make_sequence(object_at(cfg.raw, "sequence", "config"), cfg.grid, "sequence");
  const int n = static_cast<int>(integer(sec, "n", "defect", 1, 1, 1 << 20));
  SampledField u = generate_sequence(spec, n, cfg.grid);
  if (!u.is_real(1e-12)) invalid("sequence", "defect probes need real-valued data");
  for (auto& v : u.values()) v = v.real();
  const LambdaGrid lam = make_lambda(cfg).value_or(LambdaGrid::around(u));
  const FluxFamily flux = make_flux(cfg, lam);
  const double lambda = number(sec, "lambda", "defect", std::nullopt);
  if (!sec.contains("modulations") || !sec.at("modulations").is_array() || sec.at("modulations").empty())
    invalid("defect", "needs a nonempty 'modulations' array");
  std::vector<int> mods;
  for (const auto& m : sec.at("modulations")) {
    if (!m.is_number_integer()) invalid("defect.modulations", "expected integers");
    mods.push_back(m.get<int>());
  }
  const SampledField phi1 = sec.contains("phi1") ? make_window(sec.at("phi1"), cfg.grid, "defect.phi1")
                                                 : smooth_bump(cfg.grid, 0.3 * cfg.grid.box_length(0));
  std::optional<SampledField> bump;
  if (sec.contains("bump")) bump = make_window(sec.at("bump"), cfg.grid, "defect.bump");
  const auto rep = compactness_probe(u, lambda, phi1, flux, mods, bump);
  json j = to_json(rep);
  j["flux"] = flux.name();
  j["n"] = n;
  j["weak_residual"] = defectscope::detail::complex_json(weak_residual(u, flux, phi1, cfg.conv));
  std::ostringstream csv;
  csv << "m,re,im\n";
  for (std::size_t i = 0; i < mods.size(); ++i)
    csv << mods[i] << ',' << csv_double(rep.values[i].real()) << ',' << csv_double(rep.values[i].imag()) << '\n';
  return {{"defect.json", dump(j)}, {"defect.csv", csv.str()}};
}

inline std::vector<Artifact> run_experiment(const RunConfig& cfg) {
  using namespace detail;
  const json& sec = section(cfg, "experiment");
  check_keys(sec, {"epsilon", "tau_end", "dtau"}, "experiment");
  const auto spec = make_sequence(object_at(cfg.raw, "sequence", "config"), cfg.grid, "sequence");
  const auto n_list = make_n_list(cfg);
  std::optional<LambdaGrid> lam = make_lambda(cfg);
  if (!lam) {
    SampledField u0 = generate_sequence(spec, n_list.front(), cfg.grid);
    for (auto& v : u0.values()) v = v.real();
    lam = LambdaGrid::around(u0);
  }
  const FluxFamily flux = make_flux(cfg, *lam);
  ExperimentOptions opts;
  opts.epsilon = number(sec, "epsilon", "experiment", 1e-3, 0.0, 1e3);
  opts.tau_end = number(sec, "tau_end", "experiment", 0.05, 1e-12, 1e6);
  if (sec.contains("dtau")) opts.dtau = number(sec, "dtau", "experiment", std::nullopt, 1e-15);
  opts.conv = cfg.conv;
  const auto rep = oscillation_experiment(flux, spec, cfg.grid, opts, make_partition(cfg), make_mesh(cfg), n_list);
  std::ostringstream csv;
  write_experiment_csv(rep, csv);
  return {{"experiment.json", dump(to_json(rep))}, {"experiment.csv", csv.str()}};
}

inline std::vector<Artifact> dispatch(const RunConfig& cfg) {
  if (cfg.command == "project") return run_project(cfg);
  if (cfg.command == "symbol") return run_symbol(cfg);
  if (cfg.command == "commutator") return run_commutator(cfg);
  if (cfg.command == "hmeasure") return run_hmeasure(cfg);
  if (cfg.command == "nonlinearity") return run_nonlinearity(cfg);
  if (cfg.command == "defect") return run_defect(cfg);
  if (cfg.command == "experiment") return run_experiment(cfg);
  throw ValidationError("unknown command '" + cfg.command + "'");
}

// ---------------------------------------------------------------- output

inline std::string sha256_hex(const std::string& data) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), md, &len, EVP_sha256(), nullptr) != 1)
    throw std::runtime_error("sha256: digest failed");
  std::ostringstream os;
  for (unsigned int i = 0; i < len; ++i) os << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(md[i]);
  return os.str();
}

inline json versions() {
  json v;
  v["defectscope"] = kVersion;
  v["eigen"] = std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
               std::to_string(EIGEN_MINOR_VERSION);
  v["fftw"] = std::string(fftw_version);
  v["nlohmann_json"] = std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." + std::to_string(NLOHMANN_JSON_VERSION_MINOR) +
                       "." + std::to_string(NLOHMANN_JSON_VERSION_PATCH);
  return v;
}

inline void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  os << content;
}

/// Writes the artifacts and manifest.json into `dir`.
inline void write_outputs(const std::filesystem::path& dir, const RunConfig& cfg, const std::vector<Artifact>& artifacts) {
  std::filesystem::create_directories(dir);
  json entries = json::array();
  for (const auto& a : artifacts) {
    write_file(dir / a.path, a.content);
    entries.push_back({{"path", a.path}, {"bytes", a.content.size()}, {"sha256", sha256_hex(a.content)}});
  }
  const json manifest = {{"command", cfg.command}, {"seed", cfg.seed},         {"config", cfg.raw},
                         {"versions", versions()}, {"artifacts", entries}};
  write_file(dir / "manifest.json", detail::dump(manifest));
}

inline void report_error(std::ostream& err, const char* kind, const std::string& message) {
  err << json{{"error", kind}, {"message", message}}.dump() << '\n';
}

/// Entry point; args excludes the program name. Returns the process exit code.
inline int run_command(const std::vector<std::string>& args, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"defectscope: numerical H-measure and fractional conservation law toolkit", "defectscope"};
  std::string command, config_path, out_dir;
  std::optional<std::uint64_t> seed;
  app.add_option("command", command, "project | symbol | commutator | hmeasure | nonlinearity | defect | experiment")
      ->required();
  app.add_option("--config", config_path, "JSON configuration file")->required();
  app.add_option("--seed", seed, "root seed (overrides the config)");
  app.add_option("--out", out_dir, "output directory (default: out)");
  app.set_version_flag("--version", kVersion);

  std::vector<std::string> argv(args.rbegin(), args.rend());
  try {
    app.parse(argv);
  } catch (const CLI::CallForVersion&) {
    out << kVersion << '\n';
    return kSuccess;
  } catch (const CLI::Success&) {
    out << app.help();
    return kSuccess;
  } catch (const CLI::ParseError& e) {
    report_error(err, "validation", e.what());
    return kValidation;
  }

  RunConfig cfg;
  try {
    bool known = false;
    for (const char* c : kCommands) known = known || command == c;
    if (!known) throw ValidationError("unknown command '" + command + "'");
    std::ifstream is(config_path);
    if (!is) throw ValidationError("cannot open config " + config_path);
    json raw;
    try {
      raw = json::parse(is);
    } catch (const json::parse_error& e) {
      throw ValidationError(std::string("config is not valid JSON: ") + e.what());
    }
    if (seed) raw["seed"] = *seed;
    cfg = parse_config(raw, command);
  } catch (const std::exception& e) {
    report_error(err, "validation", e.what());
    return kValidation;
  }
  const std::filesystem::path dir = out_dir.empty() ? std::filesystem::path("out") : std::filesystem::path(out_dir);

  std::vector<Artifact> artifacts;
  try {
    artifacts = dispatch(cfg);
  } catch (const NumericFailure& e) {
    report_error(err, "numeric", e.what());
    std::filesystem::create_directories(dir);
    write_file(dir / "diagnostic.json",
               detail::dump({{"error", "numeric"}, {"message", e.what()}, {"command", cfg.command}, {"seed", cfg.seed},
                             {"config", cfg.raw}}));
    return kNumeric;
  } catch (const SamplingError& e) {
    report_error(err, "numeric", e.what());
    std::filesystem::create_directories(dir);
    write_file(dir / "diagnostic.json",
               detail::dump({{"error", "numeric"}, {"message", e.what()}, {"command", cfg.command}, {"seed", cfg.seed},
                             {"config", cfg.raw}}));
    return kNumeric;
  } catch (const std::logic_error& e) {
    // ValidationError, ContractViolation, DomainError
    report_error(err, "validation", e.what());
    return kValidation;
  } catch (const std::runtime_error& e) {
    // AliasingError, SizeError and InsufficientLattice are configuration problems.
    report_error(err, "validation", e.what());
    return kValidation;
  }
  write_outputs(dir, cfg, artifacts);
  out << "wrote " << artifacts.size() << " artifacts and manifest.json to " << dir.string() << '\n';
  return kSuccess;
}

}  // namespace defectscope::cli
