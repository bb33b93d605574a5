#pragma once

// Newton-Raphson for the implicit stage equations, run entirely at one
// precision level. The linear solve is dense LU with partial pivoting.

#include <array>
#include <cstddef>
#include <stdexcept>
#include <string>

#include "mprk/precision.hpp"
#include "mprk/problem.hpp"
#include "mprk/state.hpp"

namespace mprk {

class NewtonError : public std::runtime_error {
 public:
  enum class Kind { SingularJacobian, Divergence };

  NewtonError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  Kind kind() const noexcept { return kind_; }

 private:
  Kind kind_;
};

template <Real T>
struct NewtonConfig {
  T tolerance = T(1.001) * machine_epsilon<T>();
  int max_iterations = 20;
  static constexpr Precision precision = precision_of<T>;
};

/// Precision-independent solver policy; tolerance is tolerance_factor times
/// machine epsilon of whichever level the solve runs at.
struct NewtonSettings {
  double tolerance_factor = 1.001;
  int max_iterations = 20;

  template <Real T>
  NewtonConfig<T> config() const noexcept {
    return {precision_cast<T>(tolerance_factor) * machine_epsilon<T>(), max_iterations};
  }
};

template <Real T>
struct NewtonResult {
  StateVector<T> solution;
  int iterations = 0;
  T residual_norm = T(0);
  bool converged = false;
};

/// In-place LU factorization with partial pivoting. `pivots[k]` is the row
/// swapped into position k. Returns false if a pivot falls below
/// n * eps * max|a_ij|.
template <Real T>
bool lu_factor(Matrix<T>& a, std::array<std::size_t, kMaxDimension>& pivots) noexcept {
  const std::size_t n = a.size();
  T scale = T(0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      const T v = num::abs(a(i, j));
      if (v > scale) scale = v;
    }
  const T threshold = T(static_cast<int>(n)) * machine_epsilon<T>() * scale;

  for (std::size_t k = 0; k < n; ++k) {
    std::size_t p = k;
    T best = num::abs(a(k, k));
    for (std::size_t i = k + 1; i < n; ++i) {
      const T v = num::abs(a(i, k));
      if (v > best) {
        best = v;
        p = i;
      }
    }
    pivots[k] = p;
    if (!(best > threshold)) return false;
    if (p != k) {
      for (std::size_t j = 0; j < n; ++j) std::swap(a(k, j), a(p, j));
    }
    for (std::size_t i = k + 1; i < n; ++i) {
      const T m = a(i, k) / a(k, k);
      a(i, k) = m;
      for (std::size_t j = k + 1; j < n; ++j) a(i, j) -= m * a(k, j);
    }
  }
  return true;
}

/// Solves LU x = P b in place on `b`.
template <Real T>
void lu_solve(const Matrix<T>& lu, const std::array<std::size_t, kMaxDimension>& pivots,
              StateVector<T>& b) noexcept {
  const std::size_t n = lu.size();
  for (std::size_t k = 0; k < n; ++k) {
    if (pivots[k] != k) std::swap(b[k], b[pivots[k]]);
  }
  for (std::size_t i = 1; i < n; ++i)
    for (std::size_t j = 0; j < i; ++j) b[i] -= lu(i, j) * b[j];
  for (std::size_t i = n; i-- > 0;) {
    for (std::size_t j = i + 1; j < n; ++j) b[i] -= lu(i, j) * b[j];
    b[i] /= lu(i, i);
  }
}

/// Iterates y <- y - J(y)^{-1} r(y) until ||r(y)||_inf <= tolerance or the
/// iteration cap is reached. A capped run returns converged = false; a
/// singular Jacobian or a non-finite iterate throws NewtonError.
///
/// `residual`: StateVector<T>(const StateVector<T>&)
/// `jacobian`: Matrix<T>(const StateVector<T>&)
template <Real T, class Residual, class Jacobian>
NewtonResult<T> newton_solve(Residual&& residual, Jacobian&& jacobian, const StateVector<T>& guess,
                             const NewtonConfig<T>& config) {
  NewtonResult<T> result;
  result.solution = guess;
  StateVector<T> r = residual(result.solution);
  T rnorm = norm_inf(r);
  std::array<std::size_t, kMaxDimension> pivots{};

  for (;;) {
    if (!num::isfinite(rnorm)) {
      throw NewtonError(NewtonError::Kind::Divergence,
                        "non-finite residual after " + std::to_string(result.iterations) +
                            " Newton iterations");
    }
    if (rnorm <= config.tolerance) {
      result.converged = true;
      break;
    }
    if (result.iterations >= config.max_iterations) break;

    Matrix<T> jac = jacobian(result.solution);
    if (!lu_factor(jac, pivots)) {
      throw NewtonError(NewtonError::Kind::SingularJacobian,
                        "singular Jacobian at Newton iteration " +
                            std::to_string(result.iterations));
    }
    lu_solve(jac, pivots, r);
    for (std::size_t i = 0; i < r.size(); ++i) result.solution[i] -= r[i];
    ++result.iterations;

    r = residual(result.solution);
    rnorm = norm_inf(r);
  }
  result.residual_norm = rnorm;
  return result;
}

/// Residual of the stage equation y = base + explicit_part + coeff F(y),
/// arranged as ((y - base) - explicit_part) - coeff F(y) so that the
/// cancellation of y against base happens first.
template <Real T>
StateVector<T> stage_residual(const OdeSystem& system, T t, const StateVector<T>& y,
                              const StateVector<T>& base, T coeff,
                              const StateVector<T>& explicit_part) {
  StateVector<T> f(y.size());
  system.rhs(t, y, f);
  StateVector<T> r(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) {
    r[i] = ((y[i] - base[i]) - explicit_part[i]) - coeff * f[i];
  }
  return r;
}

/// d/dy of stage_residual: I - coeff J(y).
template <Real T>
Matrix<T> stage_residual_jacobian(const OdeSystem& system, T t, const StateVector<T>& y, T coeff) {
  Matrix<T> j(y.size());
  system.jacobian(t, y, j);
  for (std::size_t r = 0; r < y.size(); ++r)
    for (std::size_t c = 0; c < y.size(); ++c) {
      j(r, c) = (r == c ? T(1) : T(0)) - coeff * j(r, c);
    }
  return j;
}

/// Stage solve with every input already at the working precision. The guess
/// is `base`.
template <Real T>
NewtonResult<T> solve_stage_at(const OdeSystem& system, T t, const StateVector<T>& base, T coeff,
                               const StateVector<T>& explicit_part, const NewtonConfig<T>& config) {
  return newton_solve(
      [&](const StateVector<T>& y) {
        return stage_residual(system, t, y, base, coeff, explicit_part);
      },
      [&](const StateVector<T>& y) { return stage_residual_jacobian(system, t, y, coeff); },
      base, config);
}

/// Solves y = base + explicit_part + coeff F^eps(y) at precision Low, with
/// inputs and output at precision High. The inputs are cast down, the solve
/// runs at Low with Low's tolerance, and the solution is cast back up.
template <Real High, Real Low>
NewtonResult<High> solve_stage(const OdeSystem& system, High t, const StateVector<High>& base,
                               High coeff, const StateVector<High>& explicit_part,
                               const NewtonConfig<Low>& config) {
  const NewtonResult<Low> low = solve_stage_at<Low>(
      system, precision_cast<Low>(t), precision_cast<Low>(base), precision_cast<Low>(coeff),
      precision_cast<Low>(explicit_part), config);
  return {precision_cast<High>(low.solution), low.iterations,
          precision_cast<High>(low.residual_norm), low.converged};
}

template <Real High, Real Low>
NewtonResult<High> solve_stage(const OdeSystem& system, High t, const StateVector<High>& base,
                               High coeff, const StateVector<High>& explicit_part,
                               const NewtonSettings& settings) {
  return solve_stage<High, Low>(system, t, base, coeff, explicit_part, settings.config<Low>());
}

}  // namespace mprk
