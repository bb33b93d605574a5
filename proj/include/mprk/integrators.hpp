#pragma once

// Mixed-precision Runge-Kutta steppers and the fixed-step time loop.
//
// Every implicit stage is solved at the low precision (F^eps) through
// solve_stage; every explicit evaluation, correction and update runs at the
// high precision (F). Setting low == high gives the uniform-precision scheme.

#include <chrono>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

#include "mprk/newton.hpp"
#include "mprk/precision.hpp"
#include "mprk/problem.hpp"
#include "mprk/state.hpp"

namespace mprk {

enum class Method { Imr, Sdirk, Ark4s3pA, Rk4 };

/// "imr", "sdirk", "4s3pa", "rk4".
std::string_view to_string(Method m) noexcept;
std::optional<Method> parse_method(std::string_view text) noexcept;

constexpr bool is_implicit(Method m) noexcept { return m != Method::Rk4; }

/// Explicit (A) and low-precision implicit (A^eps) coefficients of the
/// four-stage, third-order additive method. Unlisted entries are zero.
struct ArkTableau {
  quad a21, a31, a32, a41, a42, a43;
  quad ae11, ae31, ae33;

  static ArkTableau published() noexcept;
};

/// (3 + sqrt(3)) / 6: third order for the two-stage SDIRK with b = (1/2, 1/2).
quad default_sdirk_gamma() noexcept;

struct MethodSpec {
  Method method = Method::Imr;
  Precision high = Precision::Double;
  Precision low = Precision::Double;
  /// Explicit high-precision correction passes per implicit stage (IMR and
  /// SDIRK only).
  int corrections = 0;
  quad sdirk_gamma = default_sdirk_gamma();
  ArkTableau tableau = ArkTableau::published();
  NewtonSettings newton{};

  /// Throws std::invalid_argument when low is finer than high, corrections
  /// is negative, or the Newton settings are unusable.
  void validate() const;

  /// e.g. "imr 128/64 c1"; rk4 omits low and corrections.
  std::string label() const;
};

template <Real T>
struct StepResult {
  StateVector<T> next_state;
  long newton_iterations_total = 0;
  int implicit_solves = 0;
  int max_newton_iterations = 0;
  /// Stage solves that hit the iteration cap but stayed within 100x tolerance.
  int unconverged_stages = 0;
  /// Stage solves that hit the cap with residual above 100x tolerance.
  int stage_failures = 0;
};

/// Spec coefficients cast once to the two working precisions.
template <Real High, Real Low>
struct MethodCoefficients {
  Method method;
  int corrections;
  High gamma;
  High one_minus_two_gamma;
  High a21, a31, a32, a41, a42, a43, ae11, ae33;
  Low ae31;
  NewtonConfig<Low> newton;

  explicit MethodCoefficients(const MethodSpec& spec)
      : method(spec.method),
        corrections(spec.corrections),
        gamma(precision_cast<High>(spec.sdirk_gamma)),
        one_minus_two_gamma(precision_cast<High>(quad(1) - 2 * spec.sdirk_gamma)),
        a21(precision_cast<High>(spec.tableau.a21)),
        a31(precision_cast<High>(spec.tableau.a31)),
        a32(precision_cast<High>(spec.tableau.a32)),
        a41(precision_cast<High>(spec.tableau.a41)),
        a42(precision_cast<High>(spec.tableau.a42)),
        a43(precision_cast<High>(spec.tableau.a43)),
        ae11(precision_cast<High>(spec.tableau.ae11)),
        ae33(precision_cast<High>(spec.tableau.ae33)),
        ae31(precision_cast<Low>(spec.tableau.ae31)),
        newton(spec.newton.config<Low>()) {}
};

namespace detail {

template <Real High, Real Low>
void record_stage(StepResult<High>& out, const NewtonResult<High>& solve, const NewtonConfig<Low>& cfg) {
  out.newton_iterations_total += solve.iterations;
  out.implicit_solves += 1;
  if (solve.iterations > out.max_newton_iterations) out.max_newton_iterations = solve.iterations;
  if (!solve.converged) {
    if (solve.residual_norm > High(100) * precision_cast<High>(cfg.tolerance)) {
      out.stage_failures += 1;
    } else {
      out.unconverged_stages += 1;
    }
  }
}

template <Real T>
StateVector<T> zeros(std::size_t n) {
  return StateVector<T>(n);
}

}  // namespace detail

/// Implicit midpoint: y0 = u + dt/2 F^eps(y0) at low precision, then
/// `corrections` passes y_k = u + dt/2 F(y_{k-1}), then u + dt F(y_last).
template <Real High, Real Low>
StepResult<High> step_mp_imr(const MethodCoefficients<High, Low>& c, const OdeSystem& system,
                             High t, const StateVector<High>& u, High dt) {
  const std::size_t n = u.size();
  const High half = dt / High(2);
  const High t_stage = t + half;
  StepResult<High> out;

  const auto stage = solve_stage<High, Low>(system, t_stage, u, half, detail::zeros<High>(n), c.newton);
  detail::record_stage(out, stage, c.newton);
  StateVector<High> y = stage.solution;

  StateVector<High> f(n);
  for (int k = 0; k < c.corrections; ++k) {
    system.rhs(t_stage, y, f);
    for (std::size_t i = 0; i < n; ++i) y[i] = u[i] + half * f[i];
  }
  system.rhs(t_stage, y, f);
  out.next_state = StateVector<High>(n);
  for (std::size_t i = 0; i < n; ++i) out.next_state[i] = u[i] + dt * f[i];
  return out;
}

/// Two-stage SDIRK, diagonal gamma, b = (1/2, 1/2), with `corrections`
/// high-precision passes after each low-precision stage solve.
template <Real High, Real Low>
StepResult<High> step_mp_sdirk(const MethodCoefficients<High, Low>& c, const OdeSystem& system,
                               High t, const StateVector<High>& u, High dt) {
  const std::size_t n = u.size();
  const High g = c.gamma * dt;
  const High half = dt / High(2);
  const High t1 = t + g;
  const High t2 = t + (dt - g);
  StepResult<High> out;

  auto s1 = solve_stage<High, Low>(system, t1, u, g, detail::zeros<High>(n), c.newton);
  detail::record_stage(out, s1, c.newton);
  StateVector<High> y1 = s1.solution;
  StateVector<High> f1(n);
  for (int k = 0; k < c.corrections; ++k) {
    system.rhs(t1, y1, f1);
    for (std::size_t i = 0; i < n; ++i) y1[i] = u[i] + g * f1[i];
  }
  system.rhs(t1, y1, f1);

  // (1 - 2 gamma) dt F(y1), formed at high precision.
  const High e_coeff = c.one_minus_two_gamma * dt;
  StateVector<High> explicit_part(n);
  for (std::size_t i = 0; i < n; ++i) explicit_part[i] = e_coeff * f1[i];

  auto s2 = solve_stage<High, Low>(system, t2, u, g, explicit_part, c.newton);
  detail::record_stage(out, s2, c.newton);
  StateVector<High> y2 = s2.solution;
  StateVector<High> f2(n);
  for (int k = 0; k < c.corrections; ++k) {
    system.rhs(t2, y2, f2);
    for (std::size_t i = 0; i < n; ++i) y2[i] = (u[i] + explicit_part[i]) + g * f2[i];
  }
  system.rhs(t2, y2, f2);

  out.next_state = StateVector<High>(n);
  for (std::size_t i = 0; i < n; ++i) out.next_state[i] = (u[i] + half * f1[i]) + half * f2[i];
  return out;
}

/// Four-stage, third-order additive method: stages 1 and 3 carry the
/// low-precision implicit terms, stages 2 and 4 are explicit at high
/// precision, and the update is u + dt/2 [F(y2) + F(y4)].
template <Real High, Real Low>
StepResult<High> step_mp_4s3pa(const MethodCoefficients<High, Low>& c, const OdeSystem& system,
                               High t, const StateVector<High>& u, High dt) {
  const std::size_t n = u.size();
  const High half = dt / High(2);
  StepResult<High> out;

  const High d11 = c.ae11 * dt;
  const High t1 = t + d11;
  auto s1 = solve_stage<High, Low>(system, t1, u, d11, detail::zeros<High>(n), c.newton);
  detail::record_stage(out, s1, c.newton);
  const StateVector<High>& y1 = s1.solution;
  StateVector<High> f1(n);
  system.rhs(t1, y1, f1);

  const High d21 = c.a21 * dt;
  const High t2 = t + d21;
  StateVector<High> y2(n);
  for (std::size_t i = 0; i < n; ++i) y2[i] = u[i] + d21 * f1[i];
  StateVector<High> f2(n);
  system.rhs(t2, y2, f2);

  // Stage 3: the A-part is formed at high precision, the A^eps_31 part at
  // low precision on the down-cast y1, and the implicit A^eps_33 part is
  // solved at low precision.
  const High d31 = c.a31 * dt;
  const High d32 = c.a32 * dt;
  const High d33 = c.ae33 * dt;
  const High t3 = t + ((d31 + d32) + (precision_cast<High>(c.ae31) * dt + d33));
  StateVector<High> explicit_high(n);
  for (std::size_t i = 0; i < n; ++i) explicit_high[i] = d31 * f1[i] + d32 * f2[i];

  const Low dt_low = precision_cast<Low>(dt);
  const Low t3_low = precision_cast<Low>(t3);
  const StateVector<Low> y1_low = precision_cast<Low>(y1);
  StateVector<Low> f1_low(n);
  system.rhs(precision_cast<Low>(t1), y1_low, f1_low);
  const Low d31_low = c.ae31 * dt_low;
  StateVector<Low> explicit_low = precision_cast<Low>(explicit_high);
  for (std::size_t i = 0; i < n; ++i) explicit_low[i] += d31_low * f1_low[i];

  const NewtonResult<Low> s3_low = solve_stage_at<Low>(
      system, t3_low, precision_cast<Low>(u), precision_cast<Low>(d33), explicit_low, c.newton);
  const NewtonResult<High> s3{precision_cast<High>(s3_low.solution), s3_low.iterations,
                              precision_cast<High>(s3_low.residual_norm), s3_low.converged};
  detail::record_stage(out, s3, c.newton);
  const StateVector<High>& y3 = s3.solution;
  StateVector<High> f3(n);
  system.rhs(t3, y3, f3);

  const High d41 = c.a41 * dt;
  const High d42 = c.a42 * dt;
  const High d43 = c.a43 * dt;
  const High t4 = t + ((d41 + d42) + d43);
  StateVector<High> y4(n);
  for (std::size_t i = 0; i < n; ++i) y4[i] = u[i] + ((d41 * f1[i] + d42 * f2[i]) + d43 * f3[i]);
  StateVector<High> f4(n);
  system.rhs(t4, y4, f4);

  out.next_state = StateVector<High>(n);
  for (std::size_t i = 0; i < n; ++i) out.next_state[i] = u[i] + half * (f2[i] + f4[i]);
  return out;
}

/// Classical fourth-order Runge-Kutta, all arithmetic at T.
template <Real T>
StepResult<T> step_rk4(const OdeSystem& system, T t, const StateVector<T>& u, T dt) {
  const std::size_t n = u.size();
  const T half = dt / T(2);
  const T sixth = dt / T(6);
  StateVector<T> k1(n), k2(n), k3(n), k4(n), tmp(n);

  system.rhs(t, u, k1);
  for (std::size_t i = 0; i < n; ++i) tmp[i] = u[i] + half * k1[i];
  system.rhs(t + half, tmp, k2);
  for (std::size_t i = 0; i < n; ++i) tmp[i] = u[i] + half * k2[i];
  system.rhs(t + half, tmp, k3);
  for (std::size_t i = 0; i < n; ++i) tmp[i] = u[i] + dt * k3[i];
  system.rhs(t + dt, tmp, k4);

  StepResult<T> out;
  out.next_state = StateVector<T>(n);
  for (std::size_t i = 0; i < n; ++i) {
    out.next_state[i] = u[i] + sixth * ((k1[i] + T(2) * k2[i]) + (T(2) * k3[i] + k4[i]));
  }
  return out;
}

template <Real High, Real Low>
StepResult<High> step(const MethodCoefficients<High, Low>& c, const OdeSystem& system, High t,
                      const StateVector<High>& u, High dt) {
  switch (c.method) {
    case Method::Imr: return step_mp_imr(c, system, t, u, dt);
    case Method::Sdirk: return step_mp_sdirk(c, system, t, u, dt);
    case Method::Ark4s3pA: return step_mp_4s3pa(c, system, t, u, dt);
    case Method::Rk4: return step_rk4(system, t, u, dt);
  }
  throw std::logic_error("unknown method");
}

/// Raised when a stage solve fails during `integrate`.
class IntegrationError : public std::runtime_error {
 public:
  IntegrationError(long step_index, double t, const std::string& reason);
  long step_index() const noexcept { return step_index_; }
  double time() const noexcept { return t_; }

 private:
  long step_index_;
  double t_;
};

template <Real T>
struct IntegrationSummary {
  StateVector<T> final_state;
  long steps = 0;
  long newton_iterations = 0;
  long implicit_solves = 0;
  int max_newton_iterations = 0;
  long unconverged_stages = 0;
  /// Some state left the finite range or exceeded kDivergenceThreshold in
  /// norm; the loop stopped early.
  bool diverged = false;
};

inline constexpr double kDivergenceThreshold = 1e10;

/// Number of steps and the size of the last one for a fixed dt over a span.
struct StepPlan {
  long steps = 0;
  quad last_dt = 0;
};

/// Uses span/dt steps when dt divides the span to one part in 1e12,
/// otherwise adds a shortened final step that lands on t_end.
StepPlan plan_steps(quad span, quad dt);

template <Real High, Real Low>
IntegrationSummary<High> integrate(const MethodCoefficients<High, Low>& c, const OdeSystem& system,
                                   const StateVector<High>& initial, High t0, High t_end,
                                   High dt) {
  const StepPlan plan = plan_steps(precision_cast<quad>(t_end) - precision_cast<quad>(t0),
                                   precision_cast<quad>(dt));
  const High last_dt = precision_cast<High>(plan.last_dt);

  IntegrationSummary<High> summary;
  summary.final_state = initial;
  StateVector<High>& u = summary.final_state;
  for (long k = 0; k < plan.steps; ++k) {
    const High t = t0 + High(k) * dt;
    const High h = (k + 1 == plan.steps) ? last_dt : dt;
    StepResult<High> r;
    try {
      r = step(c, system, t, u, h);
    } catch (const NewtonError& e) {
      throw IntegrationError(k, static_cast<double>(t), e.what());
    }
    if (r.stage_failures > 0) {
      throw IntegrationError(k, static_cast<double>(t),
                             "Newton iteration cap reached with residual above 100x tolerance");
    }
    summary.newton_iterations += r.newton_iterations_total;
    summary.implicit_solves += r.implicit_solves;
    summary.unconverged_stages += r.unconverged_stages;
    if (r.max_newton_iterations > summary.max_newton_iterations) {
      summary.max_newton_iterations = r.max_newton_iterations;
    }
    u = r.next_state;
    summary.steps = k + 1;
    if (!all_finite(u) || norm_inf(u) > High(kDivergenceThreshold)) {
      summary.diverged = true;
      break;
    }
  }
  return summary;
}

/// Precision-erased result of one integration over the system's time span.
struct RunOutcome {
  StateVector<quad> final_state;
  long steps = 0;
  long newton_iterations = 0;
  long implicit_solves = 0;
  int max_newton_iterations = 0;
  long unconverged_stages = 0;
  bool diverged = false;
  /// Empty unless a stage solve failed; then holds the IntegrationError text.
  std::string failure;
  /// Wall time of the time loop only (coefficient setup excluded).
  std::chrono::duration<double> elapsed{0};

  bool ok() const noexcept { return failure.empty() && !diverged; }
  double newton_iterations_mean() const noexcept {
    return implicit_solves ? static_cast<double>(newton_iterations) / implicit_solves : 0.0;
  }
};

/// Integrates `system` over its time span with the spec's precisions.
/// IntegrationError is caught and reported through RunOutcome::failure.
RunOutcome run_method(const MethodSpec& spec, const OdeSystem& system, quad dt);

}  // namespace mprk
