#include <defectscope/experiment.hpp>
#include <defectscope/report_io.hpp>

#include <catch2/catch_amalgamated.hpp>

#include <numbers>
#include <sstream>

using namespace defectscope;
using Catch::Approx;

namespace {

constexpr double pi = std::numbers::pi;

SampledField real_field(const GridSpec& g, const std::function<double(const Point&)>& f) {
  return SampledField::sample(g, [&](const Point& x) { return Complex(f(x)); });
}

double mean(const SampledField& u) {
  double s = 0.0;
  for (const auto& v : u.values()) s += v.real();
  return s * u.grid().cell_volume();
}

SequenceSpec sine_wave() {
  return SequenceSpec::two_scale_wave([](const Point&, const Point& y) { return Complex(std::sin(2.0 * pi * y[0])); });
}

}  // namespace

TEST_CASE("heat flow preserves the mean and strictly dissipates", "[relax]") {
  const GridSpec g(2, 32);
  const LambdaGrid lam(-2.0, 2.0, 16);
  const auto flux = FluxFamily::zero({1.0, 0.5}, lam);
  auto u = real_field(g, [](const Point& x) { return 0.3 + std::sin(2.0 * pi * x[0]) * std::cos(4.0 * pi * x[1]); });
  const double m0 = mean(u);
  const double dtau = default_step(u, flux, 1e-2, 1.0);
  double prev = u.norm_sq();
  for (int s = 0; s < 50; ++s) {
    u = relax_to_quasisolution(u, flux, 1e-2, dtau, dtau).state;
    CHECK(mean(u) == Approx(m0).epsilon(1e-12));
    const double now = u.norm_sq();
    CHECK(now < prev);
    prev = now;
  }
}

TEST_CASE("heat flow damps a single mode at the heat-kernel rate", "[relax][oracle]") {
  const GridSpec g(1, 64);
  const auto flux = FluxFamily::zero({1.0}, LambdaGrid(-1.0, 1.0, 8));
  const auto u0 = real_field(g, [](const Point& x) { return std::cos(2.0 * pi * 3.0 * x[0]); });
  const double eps = 1e-3, tau = 0.2;
  const auto res = relax_to_quasisolution(u0, flux, eps, tau, default_step(u0, flux, eps, tau));
  // Explicit Euler factor (1 - dt eps k^2)^steps against the exact exponential.
  const double k2 = std::pow(2.0 * pi * 3.0, 2);
  const double euler = std::pow(1.0 - res.dtau * eps * k2, static_cast<double>(res.steps));
  CHECK(res.state.sup_norm() == Approx(euler).epsilon(1e-10));
  CHECK(euler == Approx(std::exp(-eps * k2 * tau)).epsilon(1e-3));
}

TEST_CASE("constant data is a fixed point", "[relax]") {
  const GridSpec g(2, 16);
  const LambdaGrid lam(-2.0, 2.0, 16);
  const auto u0 = SampledField::constant(g, 0.7);
  for (const auto& flux : {FluxFamily::burgers({1.0, 0.5}, lam), FluxFamily::zero({1.0, 1.0}, lam)}) {
    const auto res = relax_to_quasisolution(u0, flux, 1e-2, 0.1, default_step(u0, flux, 1e-2, 0.1));
    for (std::size_t i = 0; i < g.size(); ++i) CHECK(std::abs(res.state[i] - Complex(0.7)) <= 1e-14);
    CHECK(res.residual_norm <= 1e-12);
  }
}

TEST_CASE("Burgers relaxation conserves mass and dissipates before the shock", "[relax]") {
  const GridSpec g(1, 128);
  const LambdaGrid lam(-0.5, 0.5, 16);
  const auto flux = FluxFamily::burgers({1.0}, lam);
  const DerivativeConvention conv{.two_pi = true};
  // Shock time 1 / (2 pi 0.2) ~ 0.8; stay well before it.
  auto u = real_field(g, [](const Point& x) { return 0.1 + 0.2 * std::sin(2.0 * pi * x[0]); });
  const double m0 = mean(u);
  const double eps = 1e-3;
  double prev = u.norm_sq();
  for (int leg = 0; leg < 10; ++leg) {
    const auto res = relax_to_quasisolution(u, flux, eps, 0.03, default_step(u, flux, eps, 0.03), conv);
    u = res.state;
    CHECK(std::abs(mean(u) - m0) <= 1e-8);
    const double now = u.norm_sq();
    CHECK(now <= prev * (1.0 + 1e-12));
    prev = now;
  }
  CHECK(u.is_real());
}

TEST_CASE("relaxation enforces the stability bound", "[relax][errors]") {
  const GridSpec g(1, 64);
  const LambdaGrid lam(-1.0, 1.0, 16);
  const auto flux = FluxFamily::burgers({1.0}, lam);
  const auto u0 = real_field(g, [](const Point& x) { return std::sin(2.0 * pi * x[0]); });
  const double eps = 1e-3;
  const double bound = stable_step_bound(u0, flux, eps);
  const double kmax = 2.0 * pi * 64.0;
  // max |f'| covers the padded range of u0: 1.2.
  CHECK(bound == Approx(0.5 / (eps * kmax * kmax + 1.2 * kmax)).epsilon(1e-12));
  CHECK_THROWS_AS(relax_to_quasisolution(u0, flux, eps, 0.1, 1.01 * bound), ContractViolation);
  CHECK_NOTHROW(relax_to_quasisolution(u0, flux, eps, 10.0 * bound, bound));
  CHECK_THROWS_AS(relax_to_quasisolution(u0, flux, -1.0, 0.1, bound), ContractViolation);
  CHECK_THROWS_AS(relax_to_quasisolution(u0, flux, eps, 0.0, bound), ContractViolation);
  CHECK(std::isinf(stable_step_bound(u0, FluxFamily::zero({1.0}, lam), 0.0)));
}

TEST_CASE("relaxation aborts on non-finite values", "[relax][errors]") {
  const GridSpec g(1, 32);
  const LambdaGrid lam(-1.0, 1.0, 8);
  const FluxFamily blowup("blowup", {[](const Point&, double l) { return l > 5.0 ? std::nan("") : l; }},
                          {[](const Point&, double) { return 1.0; }}, {1.0}, lam);
  auto u0 = SampledField::constant(g, 0.0);
  u0[7] = 6.0;
  CHECK_THROWS_AS(relax_to_quasisolution(u0, blowup, 0.0, 1e-3, 1e-4), NumericFailure);
}

TEST_CASE("zero-flux experiment loses mass as n grows", "[relax][experiment]") {
  const GridSpec g(1, 256);
  const LambdaGrid lam(-1.2, 1.2, 32);
  const auto flux = FluxFamily::zero({1.0}, lam);
  const ManifoldMesh mesh(FibrationSpec::fractional({1.0}), 1);
  const auto windows = partition_of_unity(g, 4, 0.5);
  const ExperimentOptions opts{.epsilon = 1e-3, .tau_end = 0.2};
  const auto rep = oscillation_experiment(flux, sine_wave(), g, opts, windows, mesh, {4, 8, 16, 32});
  REQUIRE(rep.total_mass.size() == 4);
  for (std::size_t i = 1; i < rep.total_mass.size(); ++i) CHECK(rep.total_mass[i] < rep.total_mass[i - 1]);
  // The relaxed amplitudes follow the heat factor exp(-eps (2 pi n)^2 tau).
  for (int n : {4, 8, 16, 32}) {
    const auto u0 = generate_sequence(sine_wave(), n, g);
    const auto res = relax_to_quasisolution(u0, flux, opts.epsilon, opts.tau_end, default_step(u0, flux, opts.epsilon, opts.tau_end));
    const double k2 = std::pow(2.0 * pi * n, 2);
    const double euler = std::pow(1.0 - res.dtau * opts.epsilon * k2, static_cast<double>(res.steps));
    CHECK(res.state.sup_norm() == Approx(euler).epsilon(1e-9));
    CHECK(euler == Approx(std::exp(-opts.epsilon * k2 * opts.tau_end)).epsilon(5e-2));
  }
  CHECK(rep.mass.size() == 4);
  CHECK(rep.mass.front().size() == lam.size());
}

TEST_CASE("transport without viscosity keeps the oscillation mass", "[relax][experiment]") {
  const GridSpec g(1, 256);
  const LambdaGrid lam(-1.2, 1.2, 32);
  const auto flux = FluxFamily::linear({1.0}, {1.0}, lam);
  const ManifoldMesh mesh(FibrationSpec::fractional({1.0}), 1);
  const auto windows = partition_of_unity(g, 4, 0.5);
  const ExperimentOptions opts{.epsilon = 0.0, .tau_end = 0.05};
  const auto rep = oscillation_experiment(flux, sine_wave(), g, opts, windows, mesh, {4, 8, 16, 32});
  const double first = rep.total_mass.front();
  CHECK(first > 0.1);
  for (double m : rep.total_mass) CHECK(m >= 0.5 * first);
}

TEST_CASE("single-entry n list gives one mass row", "[relax][experiment]") {
  const GridSpec g(1, 64);
  const LambdaGrid lam(-1.2, 1.2, 16);
  const ManifoldMesh mesh(FibrationSpec::fractional({1.0}), 1);
  const auto rep = oscillation_experiment(FluxFamily::burgers({1.0}, lam), sine_wave(), g, {.tau_end = 0.01},
                                          partition_of_unity(g, 2, 0.5), mesh, {4});
  REQUIRE(rep.mass.size() == 1);
  CHECK(rep.mass[0].size() == lam.size());
  // The mean over a single n is h_n itself.
  for (double m : rep.mass[0]) CHECK(m == 0.0);

  const auto j = to_json(rep);
  CHECK(j["n_list"].size() == 1);
  std::stringstream csv;
  write_experiment_csv(rep, csv);
  std::string line;
  std::getline(csv, line);
  CHECK(line == "n,lambda,mass");

  CHECK_THROWS_AS(oscillation_experiment(FluxFamily::burgers({1.0}, lam), sine_wave(), g, {}, partition_of_unity(g, 2, 0.5),
                                         mesh, {}),
                  ContractViolation);
  CHECK_THROWS_AS(oscillation_experiment(FluxFamily::burgers({1.0}, lam), SequenceSpec::plane_wave({1.0}), g, {},
                                         partition_of_unity(g, 2, 0.5), mesh, {2}),
                  ContractViolation);
}
