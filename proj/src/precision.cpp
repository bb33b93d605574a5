#include "mprk/precision.hpp"

#include <cerrno>
#include <cstdio>
#include <vector>

namespace mprk {

double unit_roundoff(Precision p) noexcept {
  switch (p) {
    case Precision::Single: return 0.5 * static_cast<double>(machine_epsilon<float>());
    case Precision::Double: return 0.5 * machine_epsilon<double>();
    case Precision::Quad: return 0.5 * static_cast<double>(machine_epsilon<quad>());
  }
  return 0.0;
}

quad machine_epsilon(Precision p) noexcept {
  switch (p) {
    case Precision::Single: return machine_epsilon<float>();
    case Precision::Double: return machine_epsilon<double>();
    case Precision::Quad: return machine_epsilon<quad>();
  }
  return 0;
}

std::string_view to_string(Precision p) noexcept {
  switch (p) {
    case Precision::Single: return "32";
    case Precision::Double: return "64";
    case Precision::Quad: return "128";
  }
  return "?";
}

std::optional<Precision> parse_precision(std::string_view text) noexcept {
  if (text == "32") return Precision::Single;
  if (text == "64") return Precision::Double;
  if (text == "128") return Precision::Quad;
  return std::nullopt;
}

std::string format_quad(quad x, int significant_digits) {
  char buf[128];
  const int n = quadmath_snprintf(buf, sizeof buf, "%.*Qg", significant_digits, x);
  if (n < 0) return "nan";
  if (static_cast<std::size_t>(n) < sizeof buf) return std::string(buf, static_cast<std::size_t>(n));
  std::vector<char> big(static_cast<std::size_t>(n) + 1);
  quadmath_snprintf(big.data(), big.size(), "%.*Qg", significant_digits, x);
  return std::string(big.data(), static_cast<std::size_t>(n));
}

quad parse_quad(std::string_view text) {
  const std::string s(text);
  if (s.empty()) throw std::invalid_argument("empty number");
  char* end = nullptr;
  errno = 0;
  const quad v = strtoflt128(s.c_str(), &end);
  if (end != s.c_str() + s.size()) {
    throw std::invalid_argument("malformed number '" + s + "'");
  }
  return v;
}

}  // namespace mprk
