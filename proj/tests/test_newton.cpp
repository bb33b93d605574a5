#include <doctest.h>

#include <cmath>
#include <random>

#include "mprk/newton.hpp"

using namespace mprk;

TEST_CASE("default configuration") {
  const NewtonConfig<double> cfg;
  CHECK(cfg.tolerance == 1.001 * machine_epsilon<double>());
  CHECK(cfg.max_iterations == 20);
  const NewtonSettings settings;
  CHECK(settings.config<float>().tolerance == 1.001f * machine_epsilon<float>());
  CHECK(settings.config<quad>().tolerance == quad(1.001) * machine_epsilon<quad>());
}

TEST_CASE("linear residual converges in one step") {
  const auto r = newton_solve(
      [](const StateVector<double>& y) { return StateVector<double>{y[0] - 1.0}; },
      [](const StateVector<double>&) { return Matrix<double>(1, {1.0}); },
      StateVector<double>{0.0}, NewtonConfig<double>{});
  CHECK(r.converged);
  CHECK(r.iterations == 1);
  CHECK(r.solution[0] == 1.0);
  CHECK(r.residual_norm == 0.0);
}

TEST_CASE("implicit midpoint stage on Dahlquist") {
  // y = 1 + 0.05 (-y)  =>  y = 1 / 1.05.
  const auto r = newton_solve(
      [](const StateVector<double>& y) { return StateVector<double>{y[0] - 1.0 + 0.05 * y[0]}; },
      [](const StateVector<double>&) { return Matrix<double>(1, {1.05}); },
      StateVector<double>{0.0}, NewtonConfig<double>{});
  CHECK(r.converged);
  CHECK(r.solution[0] == doctest::Approx(1.0 / 1.05).epsilon(4e-16));
}

TEST_CASE("Van der Pol stage in double") {
  const VanDerPol vdp;
  const StateVector<double> base{2.0, 0.0};
  const double coeff = 0.025;
  const StateVector<double> zero(2);
  const NewtonConfig<double> cfg;
  const auto r = solve_stage_at<double>(vdp, 0.0, base, coeff, zero, cfg);
  CHECK(r.converged);
  CHECK(r.iterations <= 6);
  // Residual certificate.
  const auto res = stage_residual<double>(vdp, 0.0, r.solution, base, coeff, zero);
  CHECK(norm_inf(res) <= cfg.tolerance);
  CHECK(r.residual_norm == norm_inf(res));
}

TEST_CASE("singular Jacobian is reported") {
  CHECK_THROWS_AS(newton_solve(
                      [](const StateVector<double>& y) { return StateVector<double>{y[0] * 0 + 1}; },
                      [](const StateVector<double>&) { return Matrix<double>(1, {0.0}); },
                      StateVector<double>{0.0}, NewtonConfig<double>{}),
                  NewtonError);
  try {
    newton_solve([](const StateVector<double>& y) { return StateVector<double>{y[0], y[1] + 1}; },
                 [](const StateVector<double>&) { return Matrix<double>(2, {1, 2, 2, 4}); },
                 StateVector<double>{0.0, 0.0}, NewtonConfig<double>{});
    FAIL("expected NewtonError");
  } catch (const NewtonError& e) {
    CHECK(e.kind() == NewtonError::Kind::SingularJacobian);
  }
}

TEST_CASE("non-finite iterate is reported as divergence") {
  try {
    newton_solve(
        [](const StateVector<double>& y) { return StateVector<double>{y[0] == 0 ? 1.0 : std::nan("")}; },
        [](const StateVector<double>&) { return Matrix<double>(1, {1.0}); },
        StateVector<double>{0.0}, NewtonConfig<double>{});
    FAIL("expected NewtonError");
  } catch (const NewtonError& e) {
    CHECK(e.kind() == NewtonError::Kind::Divergence);
  }
}

TEST_CASE("iteration cap returns an unconverged result") {
  NewtonConfig<double> cfg;
  cfg.max_iterations = 2;
  // y^3 = 8 from a poor guess needs more than two steps.
  const auto r = newton_solve(
      [](const StateVector<double>& y) { return StateVector<double>{y[0] * y[0] * y[0] - 8}; },
      [](const StateVector<double>& y) { return Matrix<double>(1, {3 * y[0] * y[0]}); },
      StateVector<double>{10.0}, cfg);
  CHECK_FALSE(r.converged);
  CHECK(r.iterations == 2);
  CHECK(r.residual_norm > cfg.tolerance);
}

TEST_CASE("property: LU with partial pivoting matches the 2x2 inverse") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  for (int i = 0; i < 500; ++i) {
    Matrix<double> a(2, {u(rng), u(rng), u(rng), u(rng)});
    const double det = a(0, 0) * a(1, 1) - a(0, 1) * a(1, 0);
    if (std::fabs(det) < 1e-3) continue;
    StateVector<double> b{u(rng), u(rng)};
    const double x0 = (a(1, 1) * b[0] - a(0, 1) * b[1]) / det;
    const double x1 = (a(0, 0) * b[1] - a(1, 0) * b[0]) / det;
    std::array<std::size_t, kMaxDimension> piv{};
    Matrix<double> lu = a;
    REQUIRE(lu_factor(lu, piv));
    lu_solve(lu, piv, b);
    const double cond = (std::fabs(a(0, 0)) + std::fabs(a(0, 1)) + std::fabs(a(1, 0)) +
                         std::fabs(a(1, 1))) * 4 / std::fabs(det);
    CHECK(std::fabs(b[0] - x0) <= 64 * cond * 1.1e-16 * std::max(1.0, std::fabs(x0)));
    CHECK(std::fabs(b[1] - x1) <= 64 * cond * 1.1e-16 * std::max(1.0, std::fabs(x1)));
  }
}

TEST_CASE("LU solves a pivoting-sensitive 3x3 system") {
  Matrix<double> a(3, {0, 2, 1, 1, 1, 1, 2, 1, 0});
  StateVector<double> b{5, 4, 4};  // x = (1, 2, 1)
  std::array<std::size_t, kMaxDimension> piv{};
  REQUIRE(lu_factor(a, piv));
  lu_solve(a, piv, b);
  CHECK(b[0] == doctest::Approx(1.0));
  CHECK(b[1] == doctest::Approx(2.0));
  CHECK(b[2] == doctest::Approx(1.0));
}

TEST_CASE("stage solve: low == high is the plain solve") {
  const VanDerPol vdp;
  const StateVector<double> base{2.0, 0.0};
  const StateVector<double> explicit_part{1e-3, -2e-3};
  const NewtonSettings settings;
  const auto mixed = solve_stage<double, double>(vdp, 0.0, base, 0.0125, explicit_part, settings);
  const auto plain = solve_stage_at<double>(vdp, 0.0, base, 0.0125, explicit_part,
                                            settings.config<double>());
  CHECK(mixed.solution == plain.solution);
  CHECK(mixed.iterations == plain.iterations);
}

TEST_CASE("stage solve: Dahlquist closed form") {
  const Dahlquist dq;
  const NewtonSettings settings;
  const auto r = solve_stage<quad, double>(dq, 0, StateVector<quad>{1}, quad(0.05), StateVector<quad>(1),
                                           settings);
  CHECK(r.converged);
  const double expected = 1.0 / 1.05;
  CHECK(std::fabs(static_cast<double>(r.solution[0]) - expected) <= 2.3e-16);
  // Solved at double and cast up, so exactly representable in double.
  CHECK(precision_cast<quad>(precision_cast<double>(r.solution[0])) == r.solution[0]);
}

TEST_CASE("stage solve: single-precision Van der Pol stage") {
  const VanDerPol vdp;
  const StateVector<double> base{2.0, 0.0};
  const StateVector<double> zero(2);
  const NewtonSettings settings;
  const auto low = solve_stage<double, float>(vdp, 0.0, base, 0.0125, zero, settings);
  const auto high = solve_stage<double, double>(vdp, 0.0, base, 0.0125, zero, settings);
  CHECK(low.converged);
  StateVector<double> diff(2);
  for (std::size_t i = 0; i < 2; ++i) diff[i] = low.solution[i] - high.solution[i];
  CHECK(norm_inf(diff) <= 1e-6);
  // Precision isolation: the solution is a binary32 value.
  for (double v : low.solution) CHECK(static_cast<double>(static_cast<float>(v)) == v);
  // Residual certificate at the stage precision.
  const auto res = stage_residual<float>(vdp, 0.0f, precision_cast<float>(low.solution),
                                         precision_cast<float>(base), 0.0125f,
                                         StateVector<float>(2));
  CHECK(norm_inf(res) <= settings.config<float>().tolerance);
}
