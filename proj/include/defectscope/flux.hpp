#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "errors.hpp"
#include "field.hpp"

namespace defectscope {

/// Uniform grid of kinetic parameters lambda.
class LambdaGrid {
 public:
  LambdaGrid(double lo, double hi, std::size_t count) : lo_(lo), hi_(hi), count_(count) {
    if (count_ < 2 || !(hi_ > lo_)) throw ContractViolation("LambdaGrid: need count >= 2 and hi > lo");
  }

  /// 64 points spanning [min u - 0.1 range, max u + 0.1 range] of a real field
  /// (padding 0.1 when u is constant).
  static LambdaGrid around(const SampledField& u, std::size_t count = 64) {
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (const auto& v : u.values()) {
      lo = std::min(lo, v.real());
      hi = std::max(hi, v.real());
    }
    const double pad = hi > lo ? 0.1 * (hi - lo) : 0.1;
    return LambdaGrid(lo - pad, hi + pad, count);
  }

  double lo() const noexcept { return lo_; }
  double hi() const noexcept { return hi_; }
  std::size_t size() const noexcept { return count_; }
  double step() const noexcept { return (hi_ - lo_) / static_cast<double>(count_ - 1); }
  double operator[](std::size_t i) const noexcept { return lo_ + step() * static_cast<double>(i); }

  std::vector<double> values() const {
    std::vector<double> v(count_);
    for (std::size_t i = 0; i < count_; ++i) v[i] = (*this)[i];
    return v;
  }

 private:
  double lo_, hi_;
  std::size_t count_;
};

using FluxFn = std::function<double(const Point& x, double lambda)>;

/// Fluxes f_k(x, lambda), their lambda-derivatives and the fractional orders
/// alpha_k of sum_k d^{alpha_k}_{x_k} f_k(x, u) = 0.
class FluxFamily {
 public:
  FluxFamily(std::string name, std::vector<FluxFn> flux, std::vector<FluxFn> derivative, std::vector<double> alpha,
             LambdaGrid lambdas)
      : name_(std::move(name)),
        f_(std::move(flux)),
        df_(std::move(derivative)),
        alpha_(std::move(alpha)),
        lambdas_(lambdas) {
    if (f_.empty() || f_.size() > kMaxDims || f_.size() != df_.size() || f_.size() != alpha_.size())
      throw ContractViolation("FluxFamily: need matching flux, derivative and exponent counts in [1, 3]");
    for (double a : alpha_)
      if (!(a > 0.0 && a <= 1.0)) throw ContractViolation("FluxFamily: exponents must lie in (0, 1]");
  }

  static FluxFamily zero(std::vector<double> alpha, LambdaGrid lambdas) {
    std::vector<FluxFn> f(alpha.size(), [](const Point&, double) { return 0.0; });
    return FluxFamily("zero", f, f, std::move(alpha), lambdas);
  }

  /// f_k = c_k lambda.
  static FluxFamily linear(std::vector<double> coeffs, std::vector<double> alpha, LambdaGrid lambdas) {
    if (coeffs.size() != alpha.size()) throw ContractViolation("FluxFamily::linear: coefficient count mismatch");
    std::vector<FluxFn> f, df;
    for (double c : coeffs) {
      f.emplace_back([c](const Point&, double l) { return c * l; });
      df.emplace_back([c](const Point&, double) { return c; });
    }
    return FluxFamily("linear", std::move(f), std::move(df), std::move(alpha), lambdas);
  }

  /// f_1 = lambda^2 / 2, f_k = lambda for k > 1.
  static FluxFamily burgers(std::vector<double> alpha, LambdaGrid lambdas) {
    std::vector<FluxFn> f, df;
    f.emplace_back([](const Point&, double l) { return 0.5 * l * l; });
    df.emplace_back([](const Point&, double l) { return l; });
    for (std::size_t k = 1; k < alpha.size(); ++k) {
      f.emplace_back([](const Point&, double l) { return l; });
      df.emplace_back([](const Point&, double) { return 1.0; });
    }
    return FluxFamily("burgers", std::move(f), std::move(df), std::move(alpha), lambdas);
  }

  /// x-independent fluxes tabulated at increasing nodes, interpolated
  /// piecewise linearly (linear extrapolation outside). The derivative is the
  /// segment slope, averaged over the two segments at a node.
  static FluxFamily table(std::vector<double> nodes, std::vector<std::vector<double>> values, std::vector<double> alpha,
                          LambdaGrid lambdas) {
    if (nodes.size() < 2 || !std::is_sorted(nodes.begin(), nodes.end()) ||
        std::adjacent_find(nodes.begin(), nodes.end()) != nodes.end())
      throw ContractViolation("FluxFamily::table: need at least two strictly increasing nodes");
    if (values.size() != alpha.size()) throw ContractViolation("FluxFamily::table: one value row per axis");
    for (const auto& row : values)
      if (row.size() != nodes.size()) throw ContractViolation("FluxFamily::table: row length mismatch");

    std::vector<FluxFn> f, df;
    for (const auto& row : values) {
      auto segment = [nodes](double l) {
        auto it = std::upper_bound(nodes.begin(), nodes.end(), l);
        std::size_t j = it == nodes.begin() ? 0 : static_cast<std::size_t>(it - nodes.begin()) - 1;
        return std::min(j, nodes.size() - 2);
      };
      f.emplace_back([nodes, row, segment](const Point&, double l) {
        const std::size_t j = segment(l);
        const double s = (l - nodes[j]) / (nodes[j + 1] - nodes[j]);
        return row[j] + s * (row[j + 1] - row[j]);
      });
      df.emplace_back([nodes, row, segment](const Point&, double l) {
        auto slope = [&](std::size_t j) { return (row[j + 1] - row[j]) / (nodes[j + 1] - nodes[j]); };
        const std::size_t j = segment(l);
        const double scale = std::max(1.0, std::abs(l));
        if (j > 0 && std::abs(l - nodes[j]) <= 1e-12 * scale) return 0.5 * (slope(j - 1) + slope(j));
        if (j + 2 < nodes.size() && std::abs(l - nodes[j + 1]) <= 1e-12 * scale) return 0.5 * (slope(j) + slope(j + 1));
        return slope(j);
      });
    }
    return FluxFamily("table", std::move(f), std::move(df), std::move(alpha), lambdas);
  }

  const std::string& name() const noexcept { return name_; }
  std::size_t dims() const noexcept { return f_.size(); }
  const std::vector<double>& alpha() const noexcept { return alpha_; }
  const LambdaGrid& lambda_grid() const noexcept { return lambdas_; }

  double flux(std::size_t k, const Point& x, double lambda) const { return f_[k](x, lambda); }
  double derivative(std::size_t k, const Point& x, double lambda) const { return df_[k](x, lambda); }

  FluxFamily with_lambda_grid(LambdaGrid lambdas) const {
    FluxFamily out = *this;
    out.lambdas_ = lambdas;
    return out;
  }

  /// c f_k for c > 0.
  FluxFamily scaled(double c) const {
    FluxFamily out = *this;
    for (std::size_t k = 0; k < dims(); ++k) {
      out.f_[k] = [g = f_[k], c](const Point& x, double l) { return c * g(x, l); };
      out.df_[k] = [g = df_[k], c](const Point& x, double l) { return c * g(x, l); };
    }
    return out;
  }

  /// max |d_lambda f_k - central difference of f_k| over the lambda grid and
  /// the given x samples.
  double derivative_consistency(std::span<const Point> xs, double h = 1e-5) const {
    double worst = 0.0;
    for (const auto& x : xs)
      for (std::size_t k = 0; k < dims(); ++k)
        for (std::size_t i = 0; i < lambdas_.size(); ++i) {
          const double l = lambdas_[i];
          const double fd = (flux(k, x, l + h) - flux(k, x, l - h)) / (2.0 * h);
          worst = std::max(worst, std::abs(fd - derivative(k, x, l)));
        }
    return worst;
  }

  /// max |f_k| over the lambda grid and the given x samples; throws if not finite.
  double sup_on(std::span<const Point> xs) const {
    double m = 0.0;
    for (const auto& x : xs)
      for (std::size_t k = 0; k < dims(); ++k)
        for (std::size_t i = 0; i < lambdas_.size(); ++i) {
          const double v = flux(k, x, lambdas_[i]);
          if (!std::isfinite(v)) throw ContractViolation("FluxFamily '" + name_ + "' is not finite on the lambda grid");
          m = std::max(m, std::abs(v));
        }
    return m;
  }

 private:
  std::string name_;
  std::vector<FluxFn> f_;
  std::vector<FluxFn> df_;
  std::vector<double> alpha_;
  LambdaGrid lambdas_;
};

}  // namespace defectscope
