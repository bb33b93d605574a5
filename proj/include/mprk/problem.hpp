#pragma once

// ODE systems under test. Every system evaluates its right-hand side and
// analytic Jacobian at whichever precision the caller's state is stored in;
// all arithmetic inside an evaluation stays at that precision.

#include <functional>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "mprk/precision.hpp"
#include "mprk/state.hpp"

namespace mprk {

class OdeSystem {
 public:
  virtual ~OdeSystem() = default;

  virtual std::string_view name() const noexcept = 0;
  virtual std::size_t dimension() const noexcept = 0;

  /// Identifies the system and its parameters; used to key cached references.
  virtual std::string identity() const;

  virtual void rhs(float t, const StateVector<float>& y, StateVector<float>& out) const = 0;
  virtual void rhs(double t, const StateVector<double>& y, StateVector<double>& out) const = 0;
  virtual void rhs(quad t, const StateVector<quad>& y, StateVector<quad>& out) const = 0;

  virtual void jacobian(float t, const StateVector<float>& y, Matrix<float>& out) const = 0;
  virtual void jacobian(double t, const StateVector<double>& y, Matrix<double>& out) const = 0;
  virtual void jacobian(quad t, const StateVector<quad>& y, Matrix<quad>& out) const = 0;

  /// Initial state, stored at quad and cast down by the integrators.
  const StateVector<quad>& initial_state() const noexcept { return initial_; }
  quad t0() const noexcept { return t0_; }
  quad t_end() const noexcept { return t_end_; }

  template <Real T>
  StateVector<T> evaluate(T t, const StateVector<T>& y) const {
    StateVector<T> out(dimension());
    rhs(t, y, out);
    return out;
  }

  template <Real T>
  Matrix<T> evaluate_jacobian(T t, const StateVector<T>& y) const {
    Matrix<T> out(dimension());
    jacobian(t, y, out);
    return out;
  }

 protected:
  OdeSystem(StateVector<quad> initial, quad t0, quad t_end)
      : initial_(initial), t0_(t0), t_end_(t_end) {}

 private:
  StateVector<quad> initial_;
  quad t0_;
  quad t_end_;
};

/// Forwards the precision-specific virtuals to `Derived::rhs_at<T>` and
/// `Derived::jacobian_at<T>`.
template <class Derived>
class OdeSystemBase : public OdeSystem {
 public:
  using OdeSystem::OdeSystem;

  void rhs(float t, const StateVector<float>& y, StateVector<float>& out) const override {
    self().rhs_at(t, y, out);
  }
  void rhs(double t, const StateVector<double>& y, StateVector<double>& out) const override {
    self().rhs_at(t, y, out);
  }
  void rhs(quad t, const StateVector<quad>& y, StateVector<quad>& out) const override {
    self().rhs_at(t, y, out);
  }
  void jacobian(float t, const StateVector<float>& y, Matrix<float>& out) const override {
    self().jacobian_at(t, y, out);
  }
  void jacobian(double t, const StateVector<double>& y, Matrix<double>& out) const override {
    self().jacobian_at(t, y, out);
  }
  void jacobian(quad t, const StateVector<quad>& y, Matrix<quad>& out) const override {
    self().jacobian_at(t, y, out);
  }

 private:
  const Derived& self() const noexcept { return static_cast<const Derived&>(*this); }
};

// Van der Pol with mu = 1:
//   y1' = y2
//   y2' = y2 (1 - y1^2) - y1
template <Real T>
void vdp_rhs(T /*t*/, const StateVector<T>& y, StateVector<T>& out) noexcept {
  const T y1 = y[0];
  const T y2 = y[1];
  out[0] = y2;
  out[1] = y2 * (T(1) - y1 * y1) - y1;
}

template <Real T>
void vdp_jacobian(T /*t*/, const StateVector<T>& y, Matrix<T>& out) noexcept {
  const T y1 = y[0];
  const T y2 = y[1];
  out(0, 0) = T(0);
  out(0, 1) = T(1);
  out(1, 0) = T(-2) * y1 * y2 - T(1);
  out(1, 1) = T(1) - y1 * y1;
}

template <Real T>
void dahlquist_rhs(T /*t*/, const StateVector<T>& y, T lambda, StateVector<T>& out) noexcept {
  out[0] = lambda * y[0];
}

class VanDerPol final : public OdeSystemBase<VanDerPol> {
 public:
  /// u0 = (2, 0) on [0, 1].
  VanDerPol();
  VanDerPol(StateVector<quad> initial, quad t0, quad t_end);

  std::string_view name() const noexcept override { return "vdp"; }
  std::size_t dimension() const noexcept override { return 2; }

  template <Real T>
  void rhs_at(T t, const StateVector<T>& y, StateVector<T>& out) const noexcept {
    vdp_rhs(t, y, out);
  }
  template <Real T>
  void jacobian_at(T t, const StateVector<T>& y, Matrix<T>& out) const noexcept {
    vdp_jacobian(t, y, out);
  }
};

/// y' = lambda y. The closed-form solution makes it the oracle problem.
class Dahlquist final : public OdeSystemBase<Dahlquist> {
 public:
  /// lambda = -1, u0 = 1 on [0, 1].
  Dahlquist();
  Dahlquist(quad lambda, quad y0, quad t0, quad t_end);

  std::string_view name() const noexcept override { return "dahlquist"; }
  std::size_t dimension() const noexcept override { return 1; }
  quad lambda() const noexcept { return lambda_; }
  std::string identity() const override;

  template <Real T>
  void rhs_at(T t, const StateVector<T>& y, StateVector<T>& out) const noexcept {
    dahlquist_rhs(t, y, precision_cast<T>(lambda_), out);
  }
  template <Real T>
  void jacobian_at(T /*t*/, const StateVector<T>& /*y*/, Matrix<T>& out) const noexcept {
    out(0, 0) = precision_cast<T>(lambda_);
  }

 private:
  quad lambda_;
};

using ProblemFactory = std::function<std::unique_ptr<OdeSystem>()>;

/// Adds (or replaces) a named system. "vdp" and "dahlquist" are built in.
void register_problem(std::string key, ProblemFactory factory);

/// Registry keys accepted on the command line, sorted.
std::vector<std::string> problem_names();

/// Builds the registered system for `key`; throws std::invalid_argument for
/// unknown keys.
std::unique_ptr<OdeSystem> make_problem(std::string_view key);

}  // namespace mprk
