#include <doctest.h>

#include <bit>
#include <cmath>
#include <cstdint>
#include <random>

#include "mprk/precision.hpp"
#include "mprk/state.hpp"

using namespace mprk;

TEST_CASE("unit roundoff ordering and bounds") {
  CHECK(unit_roundoff(Precision::Single) > unit_roundoff(Precision::Double));
  CHECK(unit_roundoff(Precision::Double) > unit_roundoff(Precision::Quad));
  CHECK(unit_roundoff(Precision::Single) == std::ldexp(1.0, -24));
  CHECK(unit_roundoff(Precision::Single) <= 1.2e-7);
  CHECK(unit_roundoff(Precision::Double) == std::ldexp(1.0, -53));
  CHECK(unit_roundoff(Precision::Double) <= 1.2e-16);
  CHECK(unit_roundoff(Precision::Quad) <= 1e-30);
}

TEST_CASE("machine epsilon") {
  CHECK(machine_epsilon<double>() == std::ldexp(1.0, -52));
  CHECK(machine_epsilon<float>() == std::ldexp(1.0f, -23));

  // Probe: halve until 1 + e/2 rounds to 1, all at quad.
  quad e = 1;
  while (quad(1) + e / 2 != quad(1)) e /= 2;
  CHECK(machine_epsilon<quad>() == e);
  CHECK(machine_epsilon<quad>() <= quad(1e-30));
  CHECK(machine_epsilon(Precision::Quad) == e);
}

TEST_CASE_TEMPLATE("epsilon probe holds at its own level", T, float, double, quad) {
  const T eps = machine_epsilon<T>();
  const T one = T(1);
  volatile T a = one + eps;
  volatile T b = one + eps / T(2);
  CHECK(T(a) - one != T(0));
  CHECK(T(b) - one == T(0));
}

TEST_CASE("cast examples") {
  CHECK(precision_cast<float>(1.0) == 1.0f);
  // Oracle: the compiler's own decimal -> binary32 conversion.
  CHECK(precision_cast<float>(0.1) == 0.1f);
  CHECK(std::bit_cast<std::uint32_t>(precision_cast<float>(0.1)) == 0x3DCCCCCDu);

  const float x = 0.3f;
  CHECK(std::bit_cast<std::uint32_t>(precision_cast<float>(precision_cast<quad>(x))) ==
        std::bit_cast<std::uint32_t>(x));
}

TEST_CASE("narrowing overflow") {
  CHECK(std::isinf(precision_cast<float>(1e300)));
  CHECK_THROWS_AS(checked_precision_cast<float>(1e300), std::range_error);
  CHECK_THROWS_AS(checked_precision_cast<double>(quad(1e300) * quad(1e300)), std::range_error);
  CHECK(checked_precision_cast<float>(2.5) == 2.5f);
  // Non-finite inputs propagate rather than raising.
  CHECK(std::isinf(checked_precision_cast<float>(std::numeric_limits<double>::infinity())));
}

TEST_CASE("property: widening round-trips exactly") {
  std::mt19937_64 rng(7);
  for (int i = 0; i < 5000; ++i) {
    const auto fbits = static_cast<std::uint32_t>(rng());
    const float f = std::bit_cast<float>(fbits);
    if (!std::isfinite(f)) continue;
    CHECK(std::bit_cast<std::uint32_t>(precision_cast<float>(precision_cast<double>(f))) == fbits);
    CHECK(std::bit_cast<std::uint32_t>(precision_cast<float>(precision_cast<quad>(f))) == fbits);

    const std::uint64_t dbits = rng();
    const double d = std::bit_cast<double>(dbits);
    if (!std::isfinite(d)) continue;
    CHECK(std::bit_cast<std::uint64_t>(precision_cast<double>(precision_cast<quad>(d))) == dbits);
  }
}

TEST_CASE("property: narrowing keeps sign and moves at most one ulp") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> mant(-1.0, 1.0);
  std::uniform_int_distribution<int> expo(-100, 100);
  for (int i = 0; i < 5000; ++i) {
    const double d = std::ldexp(mant(rng), expo(rng));
    const float f = precision_cast<float>(d);
    CHECK(std::signbit(f) == std::signbit(d));
    const float away = std::nextafter(f, d > f ? INFINITY : -INFINITY);
    const double ulp = std::fabs(static_cast<double>(away) - static_cast<double>(f));
    CHECK(std::fabs(static_cast<double>(f) - d) <= ulp);
    // Round to nearest: no other float is closer.
    CHECK(std::fabs(static_cast<double>(f) - d) <= std::fabs(static_cast<double>(away) - d));
  }
}

TEST_CASE("precision strings") {
  CHECK(to_string(Precision::Single) == "32");
  CHECK(to_string(Precision::Double) == "64");
  CHECK(to_string(Precision::Quad) == "128");
  CHECK(parse_precision("128") == Precision::Quad);
  CHECK_FALSE(parse_precision("16").has_value());
  CHECK(finer_or_equal(Precision::Quad, Precision::Single));
  CHECK_FALSE(finer_or_equal(Precision::Single, Precision::Double));
}

TEST_CASE("quad text round-trip") {
  const quad third = quad(1) / quad(3);
  CHECK(parse_quad(format_quad(third, 36)) == third);
  CHECK(parse_quad("0.5") == quad(0.5));
  CHECK_THROWS_AS(parse_quad("1.5x"), std::invalid_argument);
  CHECK_THROWS_AS(parse_quad(""), std::invalid_argument);
}

TEST_CASE("state vector casts and norms") {
  const StateVector<double> v{3e-4, -4e-4};
  CHECK(norm_euclidean(v) == doctest::Approx(5e-4).epsilon(1e-15));
  CHECK(norm_inf(v) == 4e-4);
  const auto q = precision_cast<quad>(v);
  CHECK(precision_cast<double>(q) == v);
  StateVector<double> bad{1.0, std::nan("")};
  CHECK_FALSE(all_finite(bad));
  CHECK(std::isnan(norm_inf(bad)));
  CHECK_THROWS_AS(StateVector<double>(kMaxDimension + 1), std::invalid_argument);
}
