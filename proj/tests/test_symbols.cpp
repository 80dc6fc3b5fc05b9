#include <defectscope/symbols.hpp>

#include <catch2/catch_amalgamated.hpp>

#include <numbers>
#include <random>
#include <sstream>

using namespace defectscope;
using Catch::Approx;

namespace {

constexpr double pi = std::numbers::pi;

double max_abs_diff(const SampledField& a, const SampledField& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

SampledField random_real_field(const GridSpec& grid, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, 1.0);
  std::vector<Complex> v(grid.size());
  for (auto& z : v) z = n(rng);
  return SampledField(grid, std::move(v));
}

// Exhaustive sup of |a(xi) - a(eta)| over lattice pairs with |xi|,|eta| > r, 0 < |xi - eta| <= R.
double brute_uvjet(const SymbolFn& a, const GridSpec& grid, double R, double r) {
  double sup = 0.0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const Point xi = grid.frequency(i);
    if (xi.norm() <= r) continue;
    for (std::size_t j = 0; j < grid.size(); ++j) {
      const Point eta = grid.frequency(j);
      const double gap = distance(xi, eta);
      if (j == i || eta.norm() <= r || gap > R * (1.0 + 1e-12)) continue;
      sup = std::max(sup, std::abs(a(xi) - a(eta)));
    }
  }
  return sup;
}

}  // namespace

TEST_CASE("eval_fractional_symbol examples", "[symbols][fractional]") {
  const std::vector<double> half{0.5};
  const Complex v = eval_fractional_symbol(Point{1.0}, 0, half, false);
  CHECK(v.real() == Approx(std::sqrt(0.5)));
  CHECK(v.imag() == Approx(std::sqrt(0.5)));
  const Complex w = eval_fractional_symbol(Point{-1.0}, 0, half, false);
  CHECK(std::abs(w - std::polar(1.0, -pi / 4)) < 1e-15);

  const std::vector<double> ones{1.0, 1.0};
  const Complex n = eval_fractional_symbol(Point{1.0, 1.0}, 0, ones, true);
  CHECK(std::abs(n - Complex(0.0, 0.5)) < 1e-15);

  CHECK(eval_fractional_symbol(Point{0.0, 0.0}, 1, ones, true) == Complex(0.0));
  CHECK(eval_fractional_symbol(Point{0.0, 0.0}, 1, ones, false) == Complex(0.0));
  CHECK_THROWS_AS(eval_fractional_symbol(Point{1.0}, 1, half, true), ContractViolation);
}

TEST_CASE("fractional powers of i x", "[symbols][fractional]") {
  // a = 1 reduces to i x.
  for (double x : {-3.0, -0.5, 0.25, 7.0}) CHECK(std::abs(fractional_power_i(x, 1.0) - Complex(0.0, x)) < 1e-14);
  // Conjugate symmetry under x -> -x.
  for (double a : {0.2, 0.5, 0.9})
    for (double x : {0.3, 2.0, 11.0}) CHECK(std::abs(fractional_power_i(-x, a) - std::conj(fractional_power_i(x, a))) < 1e-14);
  CHECK(fractional_power_i(0.0, 0.5) == Complex(0.0));
}

TEST_CASE("real multipliers keep real fields real", "[symbols][multiplier]") {
  const GridSpec g(2, 32);
  // The Nyquist bins have no conjugate partner on the lattice, so clear them.
  auto spec = forward_dft(random_real_field(g, 5));
  for (std::size_t i = 0; i < spec.size(); ++i) {
    const auto m = g.modes(i);
    if (m[0] == -16 || m[1] == -16) spec[i] = 0.0;
  }
  const auto u = inverse_dft(spec);
  for (std::size_t k = 0; k < 2; ++k) {
    CHECK(apply_multiplier(u, fractional_symbol(k, {1.0, 0.5})).is_real(1e-12));
    CHECK(apply_multiplier(u, derivative_symbol(k, 0.3)).is_real(1e-12));
  }
}

TEST_CASE("normalized fractional symbols are constant along fibres", "[symbols][property]") {
  for (const std::vector<double>& alpha : {std::vector<double>{1.0, 0.5}, std::vector<double>{0.3, 0.8, 1.0}}) {
    const auto fib = FibrationSpec::fractional(alpha);
    const GridSpec grid(alpha.size(), alpha.size() == 2 ? 64 : 16, 1.0);
    for (std::size_t k = 0; k < alpha.size(); ++k) {
      const auto a = fractional_symbol(k, alpha);
      double worst = 0.0;
      for (std::size_t i = 1; i < grid.size(); ++i) {
        const Point xi = grid.frequency(i);
        const auto [eta, t] = fibre_solve(xi, fib);
        worst = std::max(worst, std::abs(a(xi) - a(eta)));
      }
      CHECK(worst <= 1e-12);
    }
  }
}

TEST_CASE("lift_symbol examples", "[symbols][lift]") {
  const auto ray = FibrationSpec::ray_sphere(2);
  const GridSpec grid(2, 32, 2.0);

  const auto one = lift_symbol([](const Point&) { return Complex(1.0); }, ray);
  CHECK(one(Point{0.0, 0.0}) == Complex(0.0));
  for (std::size_t i = 1; i < grid.size(); ++i) CHECK(one(grid.frequency(i)) == Complex(1.0));

  const auto first = lift_symbol([](const Point& eta) { return Complex(eta[0]); }, ray);
  const auto reference = ray_component_symbol(0);
  for (std::size_t i = 1; i < grid.size(); ++i) {
    const Point xi = grid.frequency(i);
    CHECK(std::abs(first(xi) - reference(xi)) < 1e-15);
    CHECK(std::abs(first(xi * 7.5) - first(xi)) < 1e-15);
  }
  CHECK(first.has_limit());
  CHECK(first.limit(Point{0.6, 0.8}) == Complex(0.6));
}

TEST_CASE("lifting (i eta_k)^a_k reproduces the normalized symbol", "[symbols][lift][property]") {
  const std::vector<double> alpha{1.0, 0.5};
  const auto fib = FibrationSpec::fractional(alpha);
  const GridSpec grid(2, 64, 1.0);
  for (std::size_t k = 0; k < 2; ++k) {
    const auto lifted = lift_symbol([k, alpha](const Point& eta) { return fractional_power_i(eta[k], alpha[k]); }, fib);
    const auto direct = fractional_symbol(k, alpha);
    double worst = 0.0;
    for (std::size_t i = 0; i < grid.size(); ++i) {
      const Point xi = grid.frequency(i);
      worst = std::max(worst, std::abs(lifted(xi) - direct(xi)));
    }
    CHECK(worst <= 1e-12);
  }
}

TEST_CASE("lift_symbol over a mesh rejects non-finite functions", "[symbols][lift][errors]") {
  const ManifoldMesh mesh(FibrationSpec::ray_sphere(2), 8);
  CHECK_THROWS_AS(lift_symbol([](const Point& eta) { return Complex(1.0 / eta[1]); }, mesh), ContractViolation);
  CHECK_NOTHROW(lift_symbol([](const Point& eta) { return Complex(eta[1]); }, mesh));
  CHECK_THROWS_AS(lift_symbol(ManifoldFn{}, FibrationSpec::ray_sphere(2)), ContractViolation);
}

TEST_CASE("SymbolFn binding to a lattice checks finiteness", "[symbols]") {
  const GridSpec grid(1, 16);
  const SymbolFn singular("inverse", [](const Point& xi) { return Complex(1.0 / xi[0]); });
  CHECK_THROWS_AS(singular.lattice_sup(grid), ContractViolation);
  CHECK_THROWS_AS(singular.on_lattice(grid), ContractViolation);
  CHECK_THROWS_AS(singular.limit(Point{1.0}), ContractViolation);
  CHECK(fractional_symbol(0, {0.5}).lattice_sup(grid) == Approx(1.0));
  CHECK(derivative_symbol(0, 1.0).lattice_sup(grid) == Approx(8.0));
}

TEST_CASE("admissibility_defect examples", "[symbols][admissibility]") {
  const std::vector<double> alpha{1.0, 0.5};
  const auto frac = FibrationSpec::fractional(alpha);
  const ManifoldMesh frac_mesh(frac, 64);
  for (double t : {0.1, 1.0, 10.0, 1e4})
    for (std::size_t k = 0; k < 2; ++k) CHECK(admissibility_defect(fractional_symbol(k, alpha), frac, t, frac_mesh) <= 1e-12);

  const auto ray = FibrationSpec::ray_sphere(3);
  const ManifoldMesh ray_mesh(ray, 8);
  for (double t : {0.5, 3.0, 100.0}) CHECK(admissibility_defect(ray_component_symbol(2), ray, t, ray_mesh) <= 1e-15);

  // psi(pi_P xi) + 1 / (1 + |xi|) against the direct evaluation oracle.
  const ManifoldFn psi = [](const Point& eta) { return Complex(std::cos(3.0 * eta[1])); };
  const SymbolFn perturbed(
      "perturbed", [psi, frac](const Point& xi) { return psi(fibre_solve(xi, frac).eta) + 1.0 / (1.0 + xi.norm()); },
      psi);
  double prev = std::numeric_limits<double>::infinity();
  for (double t : {1.0, 4.0, 16.0, 64.0, 256.0}) {
    double min_norm = std::numeric_limits<double>::infinity();
    for (const auto& eta : frac_mesh.nodes()) min_norm = std::min(min_norm, curve_point(eta, t, frac).norm());
    const double defect = admissibility_defect(perturbed, frac, t, frac_mesh);
    CHECK(defect == Approx(1.0 / (1.0 + min_norm)).epsilon(1e-12));
    CHECK(defect < prev);
    prev = defect;
  }

  const SymbolFn no_limit("bare", [](const Point&) { return Complex(1.0); });
  CHECK_THROWS_AS(admissibility_defect(no_limit, frac, 1.0, frac_mesh), ContractViolation);
}

TEST_CASE("uvjet_modulus of a constant is zero", "[symbols][uvjet]") {
  const GridSpec grid(2, 32);
  for (double R : {1.0, 3.0})
    for (double r : {1.0, 5.0}) CHECK(uvjet_modulus(constant_symbol(2.5), grid, R, r, 500, 1) == 0.0);
}

TEST_CASE("uvjet_modulus agrees with the exhaustive oracle", "[symbols][uvjet]") {
  const GridSpec grid(2, 16);
  const auto a = ray_component_symbol(0);
  for (double r : {1.5, 3.0, 5.0}) {
    const double exact = brute_uvjet(a, grid, 1.0, r);
    const double sampled = uvjet_modulus(a, grid, 1.0, r, 20000, 9);
    CHECK(sampled <= exact + 1e-15);
    CHECK(sampled == Approx(exact).epsilon(1e-12));
  }
}

TEST_CASE("uvjet_modulus of xi_1/|xi| scales like R/r", "[symbols][uvjet]") {
  const GridSpec grid(2, 128);
  const auto a = ray_component_symbol(0);
  const double R = 1.0;
  double prev = 0.0;
  for (double r : {32.0, 16.0, 8.0, 4.0}) {
    const double m = uvjet_modulus(a, grid, R, r, 20000, 3);
    CHECK(m <= R / r);
    if (prev > 0.0) CHECK(m / prev == Approx(2.0).epsilon(0.25));
    prev = m;
  }
}

TEST_CASE("uvjet_modulus of the normalized fractional symbol decreases in r", "[symbols][uvjet]") {
  const GridSpec grid(2, 128);
  const auto a = fractional_symbol(0, {1.0, 0.5});
  double prev = std::numeric_limits<double>::infinity();
  for (double r : {4.0, 8.0, 16.0, 32.0}) {
    const double m = uvjet_modulus(a, grid, 1.0, r, 20000, 3);
    CHECK(m < prev);
    prev = m;
  }
}

TEST_CASE("uvjet_modulus is nondecreasing in R", "[symbols][uvjet][property]") {
  const GridSpec grid(2, 16);
  const auto a = fractional_symbol(1, {1.0, 0.5});
  double prev = 0.0;
  for (double R : {1.0, 1.5, 2.0, 3.0}) {
    const double m = brute_uvjet(a, grid, R, 2.0);
    CHECK(m >= prev);
    prev = m;
  }
}

TEST_CASE("uvjet_modulus reports an empty region", "[symbols][uvjet][errors]") {
  const GridSpec grid(2, 16);
  CHECK_THROWS_AS(uvjet_modulus(ray_component_symbol(0), grid, 1.0, 100.0, 100, 1), InsufficientLattice);
  CHECK_THROWS_AS(uvjet_modulus(ray_component_symbol(0), grid, 0.0, 1.0, 100, 1), ContractViolation);
}

TEST_CASE("apply_multiplier examples", "[symbols][multiplier]") {
  const GridSpec g(1, 64);
  const auto u = random_real_field(g, 1);
  CHECK(max_abs_diff(apply_multiplier(u, constant_symbol(1.0)), u) <= 1e-12);

  const auto s = SampledField::sample(g, [](const Point& x) { return std::sin(2.0 * pi * x[0]); });
  const auto c = SampledField::sample(g, [](const Point& x) { return 2.0 * pi * std::cos(2.0 * pi * x[0]); });
  CHECK(max_abs_diff(apply_multiplier(s, derivative_symbol(0, 1.0, {.two_pi = true})), c) <= 1e-12);

  const GridSpec g2(2, 32);
  const auto a = fractional_symbol(1, {1.0, 0.5});
  const GridSpec::Modes m{3, -5, 0};
  const auto mode = lattice_mode(g2, m);
  const Complex value = a(g2.frequency(g2.flat_from_modes(m)));
  CHECK(max_abs_diff(apply_multiplier(mode, a), mode * value) <= 1e-12);

  CHECK_THROWS_AS(apply_multiplier(forward_dft(u), constant_symbol(1.0)), ContractViolation);
}

TEST_CASE("apply_multiplier is linear and composes", "[symbols][multiplier][property]") {
  const GridSpec g(2, 32, 1.5);
  const auto u = random_real_field(g, 2), v = random_real_field(g, 3);
  const auto a = fractional_symbol(0, {1.0, 0.5});
  const auto b = ray_component_symbol(1);
  const Complex s(0.7, -0.2);

  CHECK(max_abs_diff(apply_multiplier(u + v * s, a), apply_multiplier(u, a) + apply_multiplier(v, a) * s) <= 1e-10);

  const SymbolFn sum("sum", [a, b](const Point& xi) { return a(xi) + b(xi); });
  CHECK(max_abs_diff(apply_multiplier(u, sum), apply_multiplier(u, a) + apply_multiplier(u, b)) <= 1e-10);

  const SymbolFn product("product", [a, b](const Point& xi) { return a(xi) * b(xi); });
  CHECK(max_abs_diff(apply_multiplier(apply_multiplier(u, a), b), apply_multiplier(u, product)) <= 1e-10);

  CHECK(max_abs_diff(apply_multiplier(u, a), apply_multiplier(u, a.on_lattice(g))) == 0.0);
}

TEST_CASE("symbol lattice CSV", "[symbols][io]") {
  const GridSpec g(2, 4);
  std::stringstream os;
  write_symbol_csv(ray_component_symbol(0), g, os);
  std::string line;
  std::getline(os, line);
  CHECK(line == "index,xi_1,xi_2,re,im");
  std::getline(os, line);
  CHECK(line == "0,0,0,0,0");
  std::size_t rows = 1;
  while (std::getline(os, line)) ++rows;
  CHECK(rows == 16);
}
