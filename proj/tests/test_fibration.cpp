#include <defectscope/fibration.hpp>
#include <defectscope/mesh.hpp>

#include <catch2/catch_amalgamated.hpp>

#include <numbers>
#include <random>
#include <sstream>

using namespace defectscope;
using Catch::Approx;

namespace {

void check_point(const Point& p, std::initializer_list<double> expected, double tol) {
  REQUIRE(p.dim() == expected.size());
  std::size_t k = 0;
  for (double e : expected) CHECK(std::abs(p[k++] - e) <= tol);
}

std::vector<FibrationSpec> all_fibrations() {
  return {FibrationSpec::ray_sphere(1),          FibrationSpec::ray_sphere(2),
          FibrationSpec::ray_sphere(3),          FibrationSpec::parabolic(2),
          FibrationSpec::parabolic(3),           FibrationSpec::fractional({0.5}),
          FibrationSpec::fractional({1.0, 0.5}), FibrationSpec::fractional({0.3, 0.7, 1.0}),
          FibrationSpec::fractional({1.0, 1.0})};
}

}  // namespace

TEST_CASE("FibrationSpec validates exponents", "[fibration]") {
  CHECK_THROWS_AS(FibrationSpec::fractional({1.5, 0.5}), ContractViolation);
  CHECK_THROWS_AS(FibrationSpec::fractional({0.0}), ContractViolation);
  CHECK_THROWS_AS(FibrationSpec::fractional({}), ContractViolation);
  CHECK_THROWS_AS(FibrationSpec::fractional({1, 1, 1, 1}), ContractViolation);
  const auto p = FibrationSpec::parabolic(3);
  CHECK(p.alpha(0) == 1.0);
  CHECK(p.alpha(1) == 0.5);
  CHECK(p.alpha(2) == 0.5);
  CHECK(std::string(to_string(p.kind())) == "parabolic");
}

TEST_CASE("curve_point examples", "[fibration][curve_point]") {
  const auto frac = FibrationSpec::fractional({1.0, 0.5});
  check_point(curve_point({0.5, 0.25}, 4.0, frac), {2.0, 4.0}, 1e-14);

  const auto ray = FibrationSpec::ray_sphere(2);
  check_point(curve_point({0.6, 0.8}, 5.0, ray), {3.0, 4.0}, 1e-14);

  for (const auto& fib : all_fibrations()) {
    std::vector<double> dir(fib.dims(), 1.0);
    dir[0] = -0.4;
    Point theta(fib.dims());
    for (std::size_t k = 0; k < fib.dims(); ++k) theta[k] = dir[k];
    const Point eta = push_to_manifold(theta, fib);
    CHECK(distance(curve_point(eta, 1.0, fib), eta) == 0.0);
  }
}

TEST_CASE("curve_point errors", "[fibration][curve_point][errors]") {
  const auto frac = FibrationSpec::fractional({1.0, 0.5});
  CHECK_THROWS_AS(curve_point({0.5, 0.25}, 0.0, frac), DomainError);
  CHECK_THROWS_AS(curve_point({0.5, 0.25}, -1.0, frac), DomainError);
  CHECK_THROWS_AS(curve_point({0.5, 0.3}, 1.0, frac), ContractViolation);
  CHECK_THROWS_AS(curve_point({0.5}, 1.0, frac), ContractViolation);
  CHECK_THROWS_AS(curve_point({1.0, 1.0}, 2.0, FibrationSpec::ray_sphere(2)), ContractViolation);
}

TEST_CASE("fibre_solve examples", "[fibration][fibre_solve]") {
  const auto frac = FibrationSpec::fractional({1.0, 0.5});
  auto r = fibre_solve({2.0, 4.0}, frac);
  CHECK(r.t == Approx(4.0).epsilon(1e-15));
  check_point(r.eta, {0.5, 0.25}, 1e-15);
  CHECK(std::abs(frac.manifold_residual(r.eta)) < 1e-15);

  r = fibre_solve({3.0, 4.0}, FibrationSpec::ray_sphere(2));
  CHECK(r.t == Approx(5.0).epsilon(1e-15));
  check_point(r.eta, {0.6, 0.8}, 1e-15);

  r = fibre_solve({1.0, 1.0}, FibrationSpec::fractional({1.0, 1.0}));
  CHECK(r.t == 2.0);
  check_point(r.eta, {0.5, 0.5}, 0.0);

  CHECK_THROWS_AS(fibre_solve({0.0, 0.0}, frac), SingularPointError);
}

TEST_CASE("fibre_solve and curve_point round trip", "[fibration][property]") {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> mag(-6.0, 6.0);
  std::uniform_int_distribution<int> sign(0, 1);
  for (const auto& fib : all_fibrations()) {
    double worst = 0.0;
    for (int s = 0; s < 10000; ++s) {
      Point xi(fib.dims());
      for (double& c : xi) c = (sign(rng) ? 1.0 : -1.0) * std::pow(10.0, mag(rng));
      const auto [eta, t] = fibre_solve(xi, fib);
      CHECK(t > 0.0);
      worst = std::max(worst, distance(curve_point(eta, t, fib), xi) / xi.norm());
    }
    CHECK(worst <= 1e-9);
  }
}

TEST_CASE("projection is idempotent on P", "[fibration][property]") {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (const auto& fib : all_fibrations()) {
    for (int s = 0; s < 500; ++s) {
      Point theta(fib.dims());
      for (double& c : theta) c = normal(rng);
      const Point eta = push_to_manifold(theta, fib);
      CHECK(std::abs(fib.manifold_residual(eta)) <= 1e-12);
      const auto r = fibre_solve(eta, fib);
      CHECK(std::abs(r.t - 1.0) <= 1e-12);
      CHECK(distance(r.eta, eta) <= 1e-12);
    }
  }
}

TEST_CASE("fibre parameter grows along the fibre", "[fibration][property]") {
  const auto frac = FibrationSpec::fractional({0.3, 0.7, 1.0});
  const Point eta = push_to_manifold({0.2, -1.0, 0.5}, frac);
  double prev = 0.0;
  for (double s = 0.1; s < 50.0; s *= 1.3) {
    const Point xi = curve_point(eta, s, frac);
    const double t = fibre_solve(xi, frac).t;
    CHECK(t > prev);
    CHECK(t == Approx(s).epsilon(1e-12));
    double gauge = 0.0;
    for (std::size_t k = 0; k < 3; ++k) gauge += std::pow(std::abs(xi[k]), frac.alpha(k));
    CHECK(t == gauge);
    prev = t;
  }
}

TEST_CASE("separation modulus for rays equals z", "[fibration][separation]") {
  const auto ray = FibrationSpec::ray_sphere(2);
  for (double z : {1.0, 10.0}) {
    const double m = separation_modulus(ray, z, 2000, 11);
    // The ratio is at least z; the infimum is attained at t1 = t2.
    CHECK(m >= z * (1.0 - 1e-9));
    CHECK(m == Approx(z).epsilon(1e-6));
  }
  CHECK(separation_modulus(ray, 1.0, 500, 3) == separation_modulus(ray, 1.0, 500, 3));
}

TEST_CASE("separation modulus increases for the fractional family", "[fibration][separation]") {
  const auto frac = FibrationSpec::fractional({1.0, 0.5});
  double prev = separation_modulus(frac, 0.25, 2000, 5);
  for (double z = 0.5; z <= 16.0; z *= 2.0) {
    const double m = separation_modulus(frac, z, 2000, 5);
    CHECK(m > prev);
    prev = m;
  }
}

TEST_CASE("separation modulus errors", "[fibration][separation][errors]") {
  const auto ray = FibrationSpec::ray_sphere(2);
  CHECK_THROWS_AS(separation_modulus(ray, 0.0, 200, 1), DomainError);
  CHECK_THROWS_AS(separation_modulus(ray, 1.0, 99, 1), ContractViolation);
  // In one dimension only the two anchors +1 and -1 exist, so sampling still succeeds.
  CHECK(separation_modulus(FibrationSpec::ray_sphere(1), 2.0, 100, 1) == Approx(2.0));
}

TEST_CASE("manifold mesh invariants", "[fibration][mesh]") {
  for (const auto& fib : all_fibrations()) {
    const ManifoldMesh mesh(fib, 16);
    double sum = 0.0;
    for (std::size_t c = 0; c < mesh.cell_count(); ++c) {
      CHECK(std::abs(fib.manifold_residual(mesh.node(c))) <= 1e-12);
      CHECK(mesh.cell_measures()[c] > 0.0);
      CHECK(mesh.locate(mesh.node(c)) == c);
      sum += mesh.cell_measures()[c];
    }
    CHECK(sum == Approx(mesh.total_measure()));
  }
  CHECK(ManifoldMesh(FibrationSpec::ray_sphere(1), 1).cell_count() == 2);
  CHECK(ManifoldMesh(FibrationSpec::ray_sphere(3), 8).cell_count() == 128);
  CHECK_THROWS_AS(ManifoldMesh(FibrationSpec::ray_sphere(2), 3), ContractViolation);
}

TEST_CASE("mesh measure approximates the surface measure", "[fibration][mesh]") {
  const double circle = ManifoldMesh(FibrationSpec::ray_sphere(2), 512).total_measure();
  CHECK(circle == Approx(2.0 * std::numbers::pi).epsilon(1e-4));
  const double sphere = ManifoldMesh(FibrationSpec::ray_sphere(3), 128).total_measure();
  CHECK(sphere == Approx(4.0 * std::numbers::pi).epsilon(1e-3));
  // The l1 diamond has perimeter 4 sqrt 2.
  const double diamond = ManifoldMesh(FibrationSpec::fractional({1.0, 1.0}), 512).total_measure();
  CHECK(diamond == Approx(4.0 * std::sqrt(2.0)).epsilon(1e-3));
}

TEST_CASE("mesh locates frequencies through their foot point", "[fibration][mesh]") {
  const auto frac = FibrationSpec::fractional({1.0, 0.5});
  const ManifoldMesh mesh(frac, 32);
  CHECK_FALSE(mesh.cell_of_frequency({0.0, 0.0}).has_value());
  for (std::size_t c = 0; c < mesh.cell_count(); ++c) {
    for (double t : {0.01, 1.0, 300.0}) {
      const auto cell = mesh.cell_of_frequency(curve_point(mesh.node(c), t, frac));
      REQUIRE(cell.has_value());
      CHECK(*cell == c);
    }
  }
  CHECK(mesh.cell_distance(0, 31) == 1);
  CHECK(mesh.cell_distance(3, 10) == 7);

  std::stringstream os;
  mesh.write_csv(os);
  std::string header;
  std::getline(os, header);
  CHECK(header == "cell,eta_1,eta_2,measure");
  std::size_t rows = 0;
  for (std::string line; std::getline(os, line);) ++rows;
  CHECK(rows == 32);
}
