#include "mprk/integrators.hpp"

#include <cmath>

namespace mprk {

std::string_view to_string(Method m) noexcept {
  switch (m) {
    case Method::Imr: return "imr";
    case Method::Sdirk: return "sdirk";
    case Method::Ark4s3pA: return "4s3pa";
    case Method::Rk4: return "rk4";
  }
  return "?";
}

std::optional<Method> parse_method(std::string_view text) noexcept {
  if (text == "imr") return Method::Imr;
  if (text == "sdirk") return Method::Sdirk;
  if (text == "4s3pa") return Method::Ark4s3pA;
  if (text == "rk4") return Method::Rk4;
  return std::nullopt;
}

ArkTableau ArkTableau::published() noexcept {
  ArkTableau t{};
  t.a21 = 0.211324865405187Q;
  t.a31 = 0.709495523817170Q;
  t.a32 = -0.865314250619423Q;
  t.a41 = 0.705123240545107Q;
  t.a42 = 0.943370088535775Q;
  t.a43 = -0.859818194486069Q;
  t.ae11 = 0.788675134594813Q;
  t.ae31 = 0.051944240459852Q;
  t.ae33 = 0.788675134594813Q;
  return t;
}

quad default_sdirk_gamma() noexcept { return (quad(3) + sqrtq(quad(3))) / quad(6); }

void MethodSpec::validate() const {
  if (!finer_or_equal(high, low)) {
    throw std::invalid_argument("low precision " + std::string(to_string(low)) +
                                " is finer than high precision " + std::string(to_string(high)));
  }
  if (corrections < 0) throw std::invalid_argument("corrections must be non-negative");
  if (newton.max_iterations <= 0) throw std::invalid_argument("Newton iteration cap must be positive");
  if (!(newton.tolerance_factor > 0.0) || !std::isfinite(newton.tolerance_factor)) {
    throw std::invalid_argument("Newton tolerance factor must be positive");
  }
  if (!num::isfinite(sdirk_gamma)) throw std::invalid_argument("SDIRK gamma must be finite");
}

std::string MethodSpec::label() const {
  std::string s(to_string(method));
  s += ' ';
  s += to_string(high);
  if (method != Method::Rk4) {
    s += '/';
    s += to_string(low);
    if (method != Method::Ark4s3pA) s += " c" + std::to_string(corrections);
  }
  return s;
}

IntegrationError::IntegrationError(long step_index, double t, const std::string& reason)
    : std::runtime_error("step " + std::to_string(step_index) + " at t=" + std::to_string(t) +
                         ": " + reason),
      step_index_(step_index),
      t_(t) {}

StepPlan plan_steps(quad span, quad dt) {
  if (!(dt > 0) || !num::isfinite(dt)) throw std::invalid_argument("time step must be positive");
  if (!(span >= 0) || !num::isfinite(span)) throw std::invalid_argument("time span must be non-negative");
  if (span == 0) return {0, 0};
  const quad ratio = span / dt;
  const quad nearest = roundq(ratio);
  if (nearest >= 1 && fabsq(ratio - nearest) <= quad(1e-12) * ratio) {
    const long n = static_cast<long>(nearest);
    return {n, span - static_cast<quad>(n - 1) * dt};
  }
  const long full = static_cast<long>(floorq(ratio));
  return {full + 1, span - static_cast<quad>(full) * dt};
}

namespace {

template <Real High, Real Low>
RunOutcome run_typed(const MethodSpec& spec, const OdeSystem& system, quad dt) {
  const MethodCoefficients<High, Low> coeffs(spec);
  const StateVector<High> initial = precision_cast<High>(system.initial_state());
  const High t0 = precision_cast<High>(system.t0());
  const High t_end = precision_cast<High>(system.t_end());
  const High h = precision_cast<High>(dt);

  RunOutcome out;
  const auto start = std::chrono::steady_clock::now();
  try {
    const IntegrationSummary<High> s = integrate(coeffs, system, initial, t0, t_end, h);
    out.elapsed = std::chrono::steady_clock::now() - start;
    out.final_state = precision_cast<quad>(s.final_state);
    out.steps = s.steps;
    out.newton_iterations = s.newton_iterations;
    out.implicit_solves = s.implicit_solves;
    out.max_newton_iterations = s.max_newton_iterations;
    out.unconverged_stages = s.unconverged_stages;
    out.diverged = s.diverged;
  } catch (const IntegrationError& e) {
    out.elapsed = std::chrono::steady_clock::now() - start;
    out.final_state = StateVector<quad>(system.dimension());
    for (auto& v : out.final_state) v = num::infinity<quad>();
    out.failure = e.what();
  }
  return out;
}

}  // namespace

RunOutcome run_method(const MethodSpec& spec, const OdeSystem& system, quad dt) {
  spec.validate();
  const Precision low = spec.method == Method::Rk4 ? spec.high : spec.low;
  using P = Precision;
  switch (spec.high) {
    case P::Single:
      return run_typed<float, float>(spec, system, dt);
    case P::Double:
      if (low == P::Single) return run_typed<double, float>(spec, system, dt);
      return run_typed<double, double>(spec, system, dt);
    case P::Quad:
      if (low == P::Single) return run_typed<quad, float>(spec, system, dt);
      if (low == P::Double) return run_typed<quad, double>(spec, system, dt);
      return run_typed<quad, quad>(spec, system, dt);
  }
  throw std::logic_error("unknown precision");
}

}  // namespace mprk
