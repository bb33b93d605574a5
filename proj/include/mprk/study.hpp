#pragma once

// Convergence and runtime studies: quad-precision reference solutions,
// up-cast error measurement, dt sweeps, slope fits and CSV/manifest output.

#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "mprk/integrators.hpp"
#include "mprk/precision.hpp"
#include "mprk/problem.hpp"
#include "mprk/state.hpp"

namespace mprk {

enum class ErrorNorm { Euclidean, Max };

std::string_view to_string(ErrorNorm n) noexcept;
std::optional<ErrorNorm> parse_norm(std::string_view text) noexcept;

/// One integration run. These fields are exactly the CSV columns.
struct RunRecord {
  std::string method;
  Precision high = Precision::Double;
  Precision low = Precision::Double;
  int corrections = 0;
  double dt = 0.0;
  /// +inf for diverged or failed runs.
  quad error = 0;
  double wall_time_s = 0.0;
  double newton_iters_mean = 0.0;
  std::string host;
  /// Reserved for externally measured energy; never filled in here.
  std::optional<double> energy_j;

  friend bool operator==(const RunRecord& a, const RunRecord& b) noexcept;
};

/// Per-run facts that are not part of the CSV schema.
struct RunDiagnostics {
  std::string label;
  long steps = 0;
  long implicit_solves = 0;
  int max_newton_iterations = 0;
  long unconverged_stages = 0;
  bool diverged = false;
  std::string failure;
  /// Timer resolution exceeded 1% of the measured time.
  bool low_confidence = false;
};

struct StudyReport {
  std::vector<RunRecord> records;
  std::vector<RunDiagnostics> diagnostics;  // parallel to records
  /// Fitted log-log order per MethodSpec::label(); labels with fewer than two
  /// points inside the asymptotic window are absent.
  std::map<std::string, double> slopes;
  double reference_dt = 0.0;
  quad reference_floor = 0;
  std::vector<double> grid;
  ErrorNorm norm = ErrorNorm::Euclidean;
};

struct StudyOptions {
  quad reference_dt = quad(1) / quad(1 << 20);
  ErrorNorm norm = ErrorNorm::Euclidean;
  /// Worker threads for convergence studies; 0 picks hardware concurrency.
  unsigned jobs = 0;
  /// Empty means host_tag().
  std::string host;
};

/// dt = 2^-k for k = min_exp..max_exp, strictly decreasing.
std::vector<double> power_of_two_grid(int min_exp = 4, int max_exp = 14);

/// MPRK_HOST_TAG if set, otherwise "<machine>-<soft|hw>quad".
std::string host_tag();

/// Compiler identification for manifests.
std::string toolchain_string();

/// Final state of quad-precision RK4 at `reference_dt` over the system's
/// span. Cached per (system identity, reference_dt); thread-safe.
StateVector<quad> compute_reference(const OdeSystem& system, quad reference_dt);

/// Estimated error of compute_reference(system, reference_dt), from the
/// Richardson difference against the 2 * reference_dt solution.
quad reference_error_floor(const OdeSystem& system, quad reference_dt);

/// Up-casts `final_state` to quad and returns the chosen norm of its
/// difference from `reference`. Non-finite states give +inf. Throws
/// std::invalid_argument on a dimension mismatch.
quad compute_error(const StateVector<quad>& final_state, const StateVector<quad>& reference,
                   ErrorNorm norm = ErrorNorm::Euclidean);

template <Real T>
quad compute_error(const StateVector<T>& final_state, const StateVector<quad>& reference,
                   ErrorNorm norm = ErrorNorm::Euclidean) {
  return compute_error(precision_cast<quad>(final_state), reference, norm);
}

/// Least-squares slope of log(error) against log(dt) over points with
/// lower < error < upper. Returns nullopt with fewer than two such points.
std::optional<double> fit_slope(const std::vector<double>& dts, const std::vector<quad>& errors,
                                quad lower, quad upper);

/// Lower edge of the asymptotic window is 1e3 times the reference floor;
/// the upper edge is 1e-1.
inline constexpr double kWindowFloorFactor = 1e3;
inline constexpr double kWindowUpper = 1e-1;

/// One record per (spec, dt), errors against the cached reference, and a
/// slope per spec. Runs may execute concurrently; record order is
/// spec-major, grid-minor regardless.
StudyReport run_convergence_study(const std::vector<MethodSpec>& specs, const OdeSystem& system,
                                  const std::vector<double>& grid,
                                  const StudyOptions& options = {});

/// As run_convergence_study, but each wall time is the minimum over
/// `repetitions` (>= 3) serial integrations.
StudyReport run_timing_study(const std::vector<MethodSpec>& specs, const OdeSystem& system,
                             const std::vector<double>& grid, int repetitions,
                             const StudyOptions& options = {});

/// Smallest positive step observed on the steady clock, in seconds.
double timer_resolution();

// CSV: method,high,low,corrections,dt,error,wall_time_s,newton_iters_mean,host
// with a trailing energy_j column only when some record carries one.
void write_csv(const std::vector<RunRecord>& records, std::ostream& out);
void emit_csv(const StudyReport& report, const std::filesystem::path& path);
std::vector<RunRecord> parse_csv(std::istream& in);
std::vector<RunRecord> read_csv(const std::filesystem::path& path);

/// key: value lines describing how a study was produced.
void write_manifest(const StudyReport& report, const StudyOptions& options,
                    const std::vector<std::pair<std::string, std::string>>& extra,
                    const std::filesystem::path& path);

}  // namespace mprk
