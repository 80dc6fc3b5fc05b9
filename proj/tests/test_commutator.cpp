#include <defectscope/commutator.hpp>

#include <catch2/catch_amalgamated.hpp>

#include <random>
#include <sstream>

using namespace defectscope;
using Catch::Approx;

namespace {

double power_iteration_norm(const Eigen::MatrixXcd& m, int iterations = 400) {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> n(0.0, 1.0);
  Eigen::VectorXcd v(m.cols());
  for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = {n(rng), n(rng)};
  double sigma = 0.0;
  for (int it = 0; it < iterations; ++it) {
    v = m.adjoint() * (m * v);
    const double len = v.norm();
    if (len == 0.0) return 0.0;
    sigma = std::sqrt(len);
    v /= len;
  }
  return sigma;
}

SampledField random_field(const GridSpec& grid, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, 1.0);
  std::vector<Complex> v(grid.size());
  for (auto& z : v) z = {n(rng), n(rng)};
  return SampledField(grid, std::move(v));
}

SampledField low_pass(const SampledField& u, std::int64_t keep) {
  auto spec = forward_dft(u);
  for (std::size_t i = 0; i < spec.size(); ++i) {
    const auto m = u.grid().modes(i);
    for (std::size_t k = 0; k < u.grid().dims(); ++k)
      if (std::abs(m[k]) >= keep) spec[i] = 0.0;
  }
  return inverse_dft(spec);
}

}  // namespace

TEST_CASE("commutator vanishes for constant symbols or windows", "[commutator]") {
  const GridSpec g(2, 16);
  const auto bump = gaussian_window(g, 0.1);
  const auto c1 = commutator_matrix(constant_symbol(3.0), bump, g);
  CHECK(c1.matrix().cwiseAbs().maxCoeff() == 0.0);
  CHECK(tail_operator_norm(c1, 0.0) == 0.0);
  CHECK(tail_operator_norm(c1, 2.0) == 0.0);

  const auto c2 = commutator_matrix(ray_component_symbol(0), SampledField::constant(g, 2.0), g);
  CHECK(c2.matrix().cwiseAbs().maxCoeff() <= 1e-14);
}

TEST_CASE("commutator of xi_1/|xi| with a Gaussian is bounded and nonzero", "[commutator]") {
  const GridSpec g(2, 16);
  const auto a = ray_component_symbol(0);
  const auto b = gaussian_window(g, 0.1);
  for (auto diff : {FrequencyDifference::linear, FrequencyDifference::periodic}) {
    const auto c = commutator_matrix(a, b, g, {.differences = diff});
    CHECK(c.matrix().rows() == 256);
    const double norm = tail_operator_norm(c, 0.0);
    CHECK(norm > 0.0);
    CHECK(std::isfinite(norm));
    CHECK(norm <= 2.0 * a.lattice_sup(g) * b.sup_norm() * (1.0 + 1e-9));
    CHECK(norm == Approx(power_iteration_norm(c.matrix())).epsilon(1e-6));
  }
}

TEST_CASE("periodic commutator is the exact torus commutator", "[commutator][oracle]") {
  const GridSpec g(2, 16, 2.0);
  const auto a = fractional_symbol(1, {1.0, 0.5});
  const auto b = smooth_bump(g, 0.4);
  const auto u = random_field(g, 4);
  const auto c = commutator_matrix(a, b, g, {.differences = FrequencyDifference::periodic});
  const auto direct = forward_dft(apply_multiplier(window_apply(u, b), a) - window_apply(apply_multiplier(u, a), b));
  const auto via = c.apply(u);
  double worst = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) worst = std::max(worst, std::abs(via[i] - direct[i]));
  CHECK(worst <= 1e-12 * std::max(1.0, direct.sup_norm()));
}

TEST_CASE("linear and periodic differences agree on band-limited data", "[commutator][oracle]") {
  const GridSpec g(1, 64);
  const auto a = fractional_symbol(0, {0.5});
  const auto b = low_pass(gaussian_window(g, 0.15), 8);
  const auto u = low_pass(random_field(g, 8), 16);
  const auto lin = commutator_matrix(a, b, g).apply(u);
  const auto per = commutator_matrix(a, b, g, {.differences = FrequencyDifference::periodic}).apply(u);
  double worst = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) worst = std::max(worst, std::abs(lin[i] - per[i]));
  CHECK(worst <= 1e-12);
}

TEST_CASE("band limit removes high window frequencies", "[commutator]") {
  const GridSpec g(1, 64);
  const auto a = fractional_symbol(0, {0.5});
  const auto b = gaussian_window(g, 0.05);
  const auto full = commutator_matrix(a, b, g);
  const auto limited = commutator_matrix(a, b, g, {.band_limit = 4.0});
  for (Eigen::Index i = 0; i < 64; ++i)
    for (Eigen::Index j = 0; j < 64; ++j) {
      const auto mi = g.modes(static_cast<std::size_t>(i))[0], mj = g.modes(static_cast<std::size_t>(j))[0];
      if (std::abs(mi - mj) > 4) CHECK(limited.matrix()(i, j) == Complex(0.0));
      else CHECK(limited.matrix()(i, j) == full.matrix()(i, j));
    }
}

TEST_CASE("tail norm profile is nonincreasing", "[commutator][property]") {
  const GridSpec g(1, 128);
  const auto c = commutator_matrix(fractional_symbol(0, {0.5}), gaussian_window(g, 0.1), g);
  std::vector<double> radii;
  for (double r = 0.0; r <= 70.0; r += 2.0) radii.push_back(r);
  const auto profile = tail_profile(c, radii);
  REQUIRE(profile.size() == radii.size());
  for (std::size_t i = 1; i < profile.size(); ++i) CHECK(profile[i].tail_norm <= profile[i - 1].tail_norm * (1.0 + 1e-12));
  CHECK(profile.front().tail_norm > 0.0);
  // Beyond the Nyquist radius the tail is empty.
  CHECK(profile.back().tail_norm == 0.0);
  CHECK(tail_operator_norm(c, g.nyquist_radius() + 1.0) == 0.0);

  std::stringstream os;
  write_profile_csv(profile, os);
  std::string line;
  std::getline(os, line);
  CHECK(line == "r,tail_norm");
}

TEST_CASE("commutator contract errors", "[commutator][errors]") {
  const GridSpec big(2, 128);
  CHECK_THROWS_AS(commutator_matrix(constant_symbol(1.0), SampledField::constant(big, 1.0), big), SizeError);
  const GridSpec g(1, 16);
  const auto b = gaussian_window(g, 0.1);
  CHECK_THROWS_AS(commutator_matrix(constant_symbol(1.0), forward_dft(b), g), ContractViolation);
  CHECK_THROWS_AS(commutator_matrix(constant_symbol(1.0), b, GridSpec(1, 32)), ContractViolation);
  const auto c = commutator_matrix(ray_component_symbol(0), b, g);
  CHECK_THROWS_AS(tail_operator_norm(c, -1.0), ContractViolation);
}
