#pragma once

// Working precision levels (binary32, binary64, binary128) and the casts and
// scalar helpers every other module is templated over.

#include <quadmath.h>

#include <cmath>
#include <concepts>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <type_traits>

namespace mprk {

/// IEEE binary128. Software-emulated through libquadmath on x86_64.
using quad = __float128;

enum class Precision { Single, Double, Quad };

template <class T>
concept Real = std::same_as<T, float> || std::same_as<T, double> ||
               std::same_as<T, quad>;

template <class T>
struct PrecisionTraits;

template <>
struct PrecisionTraits<float> {
  static constexpr Precision level = Precision::Single;
  static constexpr int bits = 32;
  static constexpr float epsilon() { return std::numeric_limits<float>::epsilon(); }
  static constexpr float max() { return std::numeric_limits<float>::max(); }
};

template <>
struct PrecisionTraits<double> {
  static constexpr Precision level = Precision::Double;
  static constexpr int bits = 64;
  static constexpr double epsilon() { return std::numeric_limits<double>::epsilon(); }
  static constexpr double max() { return std::numeric_limits<double>::max(); }
};

template <>
struct PrecisionTraits<quad> {
  static constexpr Precision level = Precision::Quad;
  static constexpr int bits = 128;
  static constexpr quad epsilon() { return FLT128_EPSILON; }
  static constexpr quad max() { return FLT128_MAX; }
};

template <Precision P>
struct ScalarFor;
template <>
struct ScalarFor<Precision::Single> { using type = float; };
template <>
struct ScalarFor<Precision::Double> { using type = double; };
template <>
struct ScalarFor<Precision::Quad> { using type = quad; };

template <Precision P>
using scalar_t = typename ScalarFor<P>::type;

template <Real T>
inline constexpr Precision precision_of = PrecisionTraits<T>::level;

/// Ordering used for "finer than": Single < Double < Quad.
constexpr int rank(Precision p) noexcept { return static_cast<int>(p); }

constexpr bool finer_or_equal(Precision a, Precision b) noexcept {
  return rank(a) >= rank(b);
}

constexpr int bits(Precision p) noexcept {
  switch (p) {
    case Precision::Single: return 32;
    case Precision::Double: return 64;
    case Precision::Quad: return 128;
  }
  return 0;
}

/// Distance from 1 to the next representable value (Fortran EPSILON()).
template <Real T>
constexpr T machine_epsilon() noexcept {
  return PrecisionTraits<T>::epsilon();
}

/// Half of machine_epsilon; the rounding bound for round-to-nearest.
/// Every level's unit roundoff is a power of two, so double holds it exactly.
double unit_roundoff(Precision p) noexcept;

/// machine_epsilon of a runtime level, widened to quad (exact).
quad machine_epsilon(Precision p) noexcept;

/// "32", "64" or "128".
std::string_view to_string(Precision p) noexcept;
std::optional<Precision> parse_precision(std::string_view text) noexcept;

/// Round-to-nearest-even conversion. Widening is exact; narrowing may
/// overflow to infinity, which propagates.
template <Real To, Real From>
constexpr To precision_cast(From x) noexcept {
  return static_cast<To>(x);
}

/// As precision_cast, but a finite input that overflows the target range
/// raises std::range_error.
template <Real To, Real From>
To checked_precision_cast(From x);

namespace num {

inline float abs(float x) noexcept { return std::fabs(x); }
inline double abs(double x) noexcept { return std::fabs(x); }
inline quad abs(quad x) noexcept { return fabsq(x); }

inline float sqrt(float x) noexcept { return std::sqrt(x); }
inline double sqrt(double x) noexcept { return std::sqrt(x); }
inline quad sqrt(quad x) noexcept { return sqrtq(x); }

inline bool isfinite(float x) noexcept { return std::isfinite(x); }
inline bool isfinite(double x) noexcept { return std::isfinite(x); }
inline bool isfinite(quad x) noexcept { return finiteq(x) != 0; }

inline bool isnan(quad x) noexcept { return isnanq(x) != 0; }

inline quad log(quad x) noexcept { return logq(x); }
inline quad exp(quad x) noexcept { return expq(x); }

template <Real T>
T infinity() noexcept {
  if constexpr (std::same_as<T, quad>) {
    return static_cast<quad>(std::numeric_limits<double>::infinity());
  } else {
    return std::numeric_limits<T>::infinity();
  }
}

}  // namespace num

/// Decimal rendering with the given number of significant digits.
std::string format_quad(quad x, int significant_digits = 36);

/// Parses a decimal (or "inf"/"nan") at full binary128 precision.
/// Throws std::invalid_argument on malformed text.
quad parse_quad(std::string_view text);

/// True when binary128 arithmetic runs on hardware rather than in software.
constexpr bool quad_is_hardware() noexcept {
#if defined(__FLOAT128_HARDWARE__)
  return true;
#else
  return false;
#endif
}

template <Real To, Real From>
To checked_precision_cast(From x) {
  const To y = precision_cast<To>(x);
  if (num::isfinite(x) && !num::isfinite(y)) {
    throw std::range_error("value " + format_quad(static_cast<quad>(x), 17) +
                           " overflows binary" +
                           std::to_string(PrecisionTraits<To>::bits));
  }
  return y;
}

}  // namespace mprk
