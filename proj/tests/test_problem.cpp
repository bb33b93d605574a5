#include <doctest.h>

#include <cmath>
#include <random>

#include "mprk/problem.hpp"

using namespace mprk;

namespace {

// Central finite differences of the double-precision rhs.
Matrix<double> fd_jacobian(const OdeSystem& sys, const StateVector<double>& y, double h) {
  const std::size_t n = y.size();
  Matrix<double> j(n);
  for (std::size_t c = 0; c < n; ++c) {
    StateVector<double> yp = y, ym = y;
    yp[c] += h;
    ym[c] -= h;
    const auto fp = sys.evaluate(0.0, yp);
    const auto fm = sys.evaluate(0.0, ym);
    for (std::size_t r = 0; r < n; ++r) j(r, c) = (fp[r] - fm[r]) / (yp[c] - ym[c]);
  }
  return j;
}

}  // namespace

TEST_CASE("Van der Pol right-hand side") {
  const VanDerPol vdp;
  auto f = vdp.evaluate(0.0, StateVector<double>{2.0, 0.0});
  CHECK(f[0] == 0.0);
  CHECK(f[1] == -2.0);
  f = vdp.evaluate(0.0, StateVector<double>{0.0, 0.0});
  CHECK(f[0] == 0.0);
  CHECK(f[1] == 0.0);
  f = vdp.evaluate(0.0, StateVector<double>{1.0, 1.0});
  CHECK(f[0] == 1.0);
  CHECK(f[1] == -1.0);

  CHECK(vdp.dimension() == 2);
  CHECK(vdp.initial_state() == StateVector<quad>{2, 0});
  CHECK(vdp.t0() == 0);
  CHECK(vdp.t_end() == 1);
}

TEST_CASE("Van der Pol Jacobian examples") {
  const VanDerPol vdp;
  struct Case {
    double y1, y2;
    double expected[4];
  } cases[] = {{2, 0, {0, 1, -1, -3}}, {0, 0, {0, 1, -1, 1}}, {1, 1, {0, 1, -3, 0}}};
  for (const auto& c : cases) {
    const StateVector<double> y{c.y1, c.y2};
    const auto j = vdp.evaluate_jacobian(0.0, y);
    const auto fd = fd_jacobian(vdp, y, 1e-6);
    for (int k = 0; k < 4; ++k) {
      CHECK(j(k / 2, k % 2) == c.expected[k]);
      CHECK(fd(k / 2, k % 2) == doctest::Approx(c.expected[k]).epsilon(1e-8));
    }
  }
}

TEST_CASE("property: analytic Jacobian matches central differences") {
  const VanDerPol vdp;
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  const double h = std::cbrt(machine_epsilon<double>());
  for (int i = 0; i < 100; ++i) {
    const StateVector<double> y{u(rng), u(rng)};
    const auto j = vdp.evaluate_jacobian(0.0, y);
    const auto fd = fd_jacobian(vdp, y, h);
    for (std::size_t r = 0; r < 2; ++r)
      for (std::size_t c = 0; c < 2; ++c) {
        const double scale = std::max(1.0, std::fabs(j(r, c)));
        CHECK(std::fabs(fd(r, c) - j(r, c)) <= 1e-6 * scale);
      }
  }
}

TEST_CASE("property: single-precision rhs is the double rhs rounded through binary32") {
  const VanDerPol vdp;
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<float> u(-3.0f, 3.0f);
  for (int i = 0; i < 1000; ++i) {
    const StateVector<float> ys{u(rng), u(rng)};
    const auto fs = vdp.evaluate(0.0f, ys);
    const auto fd = vdp.evaluate(0.0, precision_cast<double>(ys));
    // The second component cancels y2 (1 - y1^2) against y1, so the ulp is
    // taken at the magnitude of the larger operand.
    const double y1 = ys[0], y2 = ys[1];
    const double scales[2] = {std::fabs(fd[0]),
                              std::max({std::fabs(fd[1]), std::fabs(y2 * (1 - y1 * y1)),
                                        std::fabs(y1)})};
    for (std::size_t k = 0; k < 2; ++k) {
      const float s = static_cast<float>(scales[k]);
      const double ulp = std::nextafter(s, INFINITY) - s;
      CHECK(std::fabs(static_cast<double>(fs[k]) - fd[k]) <= 8 * ulp);
    }
  }
}

TEST_CASE("Dahlquist right-hand side") {
  StateVector<double> out(1);
  dahlquist_rhs(0.0, StateVector<double>{1.0}, -1.0, out);
  CHECK(out[0] == -1.0);
  dahlquist_rhs(0.0, StateVector<double>{7.0}, 0.0, out);
  CHECK(out[0] == 0.0);
  dahlquist_rhs(0.0, StateVector<double>{0.5}, -1.0, out);
  CHECK(out[0] == -0.5);

  const Dahlquist d;
  CHECK(d.evaluate(0.0, StateVector<double>{0.5})[0] == -0.5);
  CHECK(d.evaluate_jacobian(0.0f, StateVector<float>{3.0f})(0, 0) == -1.0f);
}

TEST_CASE("problem registry") {
  auto vdp = make_problem("vdp");
  CHECK(vdp->name() == "vdp");
  auto dq = make_problem("dahlquist");
  CHECK(dq->dimension() == 1);
  CHECK_THROWS_AS(make_problem("lorenz"), std::invalid_argument);

  register_problem("vdp-long", [] {
    return std::make_unique<VanDerPol>(StateVector<quad>{2, 0}, 0, 2);
  });
  auto longer = make_problem("vdp-long");
  CHECK(longer->t_end() == 2);
  CHECK(longer->identity() != vdp->identity());
  const auto names = problem_names();
  CHECK(std::find(names.begin(), names.end(), "vdp-long") != names.end());

  CHECK(Dahlquist(-1, 1, 0, 1).identity() != Dahlquist(-2, 1, 0, 1).identity());
}
