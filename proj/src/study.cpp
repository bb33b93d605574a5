#include "mprk/study.hpp"

#include <sys/utsname.h>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <future>
#include <mutex>
#include <sstream>
#include <thread>

namespace mprk {

std::string_view to_string(ErrorNorm n) noexcept {
  return n == ErrorNorm::Max ? "max" : "euclidean";
}

std::optional<ErrorNorm> parse_norm(std::string_view text) noexcept {
  if (text == "euclidean") return ErrorNorm::Euclidean;
  if (text == "max") return ErrorNorm::Max;
  return std::nullopt;
}

bool operator==(const RunRecord& a, const RunRecord& b) noexcept {
  const bool same_error = a.error == b.error || (num::isnan(a.error) && num::isnan(b.error));
  return a.method == b.method && a.high == b.high && a.low == b.low &&
         a.corrections == b.corrections && a.dt == b.dt && same_error &&
         a.wall_time_s == b.wall_time_s && a.newton_iters_mean == b.newton_iters_mean &&
         a.host == b.host && a.energy_j == b.energy_j;
}

std::vector<double> power_of_two_grid(int min_exp, int max_exp) {
  if (min_exp > max_exp) throw std::invalid_argument("grid exponent range is empty");
  std::vector<double> grid;
  for (int k = min_exp; k <= max_exp; ++k) grid.push_back(std::ldexp(1.0, -k));
  return grid;
}

std::string host_tag() {
  if (const char* env = std::getenv("MPRK_HOST_TAG"); env && *env) return env;
  std::string machine = "unknown";
  struct utsname u {};
  if (uname(&u) == 0) machine = u.machine;
  return machine + (quad_is_hardware() ? "-hwquad" : "-softquad");
}

std::string toolchain_string() {
#if defined(__clang__)
  return "clang " __clang_version__;
#elif defined(__GNUC__)
  return "gcc " __VERSION__;
#else
  return "unknown";
#endif
}

namespace {

struct ReferenceCache {
  std::mutex mutex;
  std::map<std::pair<std::string, std::string>, StateVector<quad>> entries;
};

ReferenceCache& reference_cache() {
  static ReferenceCache cache;
  return cache;
}

}  // namespace

StateVector<quad> compute_reference(const OdeSystem& system, quad reference_dt) {
  auto key = std::make_pair(system.identity(), format_quad(reference_dt));
  auto& cache = reference_cache();
  {
    std::lock_guard lock(cache.mutex);
    if (auto it = cache.entries.find(key); it != cache.entries.end()) return it->second;
  }
  MethodSpec spec;
  spec.method = Method::Rk4;
  spec.high = spec.low = Precision::Quad;
  const RunOutcome run = run_method(spec, system, reference_dt);
  if (!run.ok()) {
    throw std::runtime_error("reference integration of " + std::string(system.name()) +
                             " diverged");
  }
  std::lock_guard lock(cache.mutex);
  cache.entries.emplace(std::move(key), run.final_state);
  return run.final_state;
}

quad reference_error_floor(const OdeSystem& system, quad reference_dt) {
  const StateVector<quad> fine = compute_reference(system, reference_dt);
  const StateVector<quad> coarse = compute_reference(system, 2 * reference_dt);
  // RK4: e(h) ~ (ref(2h) - ref(h)) / (2^4 - 1).
  return compute_error(coarse, fine, ErrorNorm::Euclidean) / 15;
}

quad compute_error(const StateVector<quad>& final_state, const StateVector<quad>& reference,
                   ErrorNorm norm) {
  if (final_state.size() != reference.size()) {
    throw std::invalid_argument("state dimension mismatch in error computation");
  }
  if (!all_finite(final_state)) return num::infinity<quad>();
  StateVector<quad> diff(final_state.size());
  for (std::size_t i = 0; i < diff.size(); ++i) diff[i] = final_state[i] - reference[i];
  return norm == ErrorNorm::Max ? norm_inf(diff) : norm_euclidean(diff);
}

std::optional<double> fit_slope(const std::vector<double>& dts, const std::vector<quad>& errors,
                                quad lower, quad upper) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int n = 0;
  for (std::size_t i = 0; i < dts.size() && i < errors.size(); ++i) {
    const quad e = errors[i];
    if (!(e > lower && e < upper) || !(dts[i] > 0)) continue;
    const double x = std::log(dts[i]);
    const double y = static_cast<double>(logq(e));
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    ++n;
  }
  if (n < 2) return std::nullopt;
  const double denom = n * sxx - sx * sx;
  if (denom == 0) return std::nullopt;
  return (n * sxy - sx * sy) / denom;
}

double timer_resolution() {
  static const double resolution = [] {
    using clock = std::chrono::steady_clock;
    double best = 1.0;
    for (int i = 0; i < 32; ++i) {
      const auto a = clock::now();
      auto b = clock::now();
      while (b == a) b = clock::now();
      best = std::min(best, std::chrono::duration<double>(b - a).count());
    }
    return best;
  }();
  return resolution;
}

namespace {

struct Job {
  std::size_t spec_index;
  std::size_t dt_index;
};

RunRecord make_record(const MethodSpec& spec, double dt, const RunOutcome& run,
                      const StateVector<quad>& reference, ErrorNorm norm, const std::string& host) {
  RunRecord r;
  r.method = std::string(to_string(spec.method));
  r.high = spec.high;
  r.low = spec.method == Method::Rk4 ? spec.high : spec.low;
  r.corrections = spec.corrections;
  r.dt = dt;
  r.error = run.ok() ? compute_error(run.final_state, reference, norm) : num::infinity<quad>();
  r.wall_time_s = run.elapsed.count();
  r.newton_iters_mean = run.newton_iterations_mean();
  r.host = host;
  return r;
}

RunDiagnostics make_diagnostics(const MethodSpec& spec, const RunOutcome& run) {
  RunDiagnostics d;
  d.label = spec.label();
  d.steps = run.steps;
  d.implicit_solves = run.implicit_solves;
  d.max_newton_iterations = run.max_newton_iterations;
  d.unconverged_stages = run.unconverged_stages;
  d.diverged = run.diverged;
  d.failure = run.failure;
  d.low_confidence = run.elapsed.count() * 0.01 < timer_resolution();
  return d;
}

void check_grid(const std::vector<double>& grid) {
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (!(grid[i] > 0) || !std::isfinite(grid[i])) {
      throw std::invalid_argument("dt grid entries must be positive");
    }
    if (i > 0 && !(grid[i] < grid[i - 1])) {
      throw std::invalid_argument("dt grid must be strictly decreasing");
    }
  }
}

StudyReport start_report(const OdeSystem& system, const std::vector<MethodSpec>& specs,
                         const std::vector<double>& grid, const StudyOptions& options) {
  check_grid(grid);
  for (const auto& s : specs) s.validate();
  StudyReport report;
  report.grid = grid;
  report.reference_dt = static_cast<double>(options.reference_dt);
  report.norm = options.norm;
  if (!specs.empty() && !grid.empty()) {
    report.reference_floor = reference_error_floor(system, options.reference_dt);
  }
  report.records.resize(specs.size() * grid.size());
  report.diagnostics.resize(report.records.size());
  return report;
}

void fit_slopes(StudyReport& report, const std::vector<MethodSpec>& specs) {
  const std::size_t m = report.grid.size();
  const quad lower = quad(kWindowFloorFactor) * report.reference_floor;
  for (std::size_t s = 0; s < specs.size(); ++s) {
    std::vector<quad> errors;
    for (std::size_t k = 0; k < m; ++k) errors.push_back(report.records[s * m + k].error);
    if (auto slope = fit_slope(report.grid, errors, lower, quad(kWindowUpper))) {
      report.slopes[specs[s].label()] = *slope;
    }
  }
}

}  // namespace

StudyReport run_convergence_study(const std::vector<MethodSpec>& specs, const OdeSystem& system,
                                  const std::vector<double>& grid, const StudyOptions& options) {
  StudyReport report = start_report(system, specs, grid, options);
  if (report.records.empty()) return report;
  const StateVector<quad> reference = compute_reference(system, options.reference_dt);
  const std::string host = options.host.empty() ? host_tag() : options.host;

  std::vector<Job> jobs;
  for (std::size_t s = 0; s < specs.size(); ++s)
    for (std::size_t k = 0; k < grid.size(); ++k) jobs.push_back({s, k});

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t j = next++; j < jobs.size(); j = next++) {
      const auto [s, k] = jobs[j];
      const RunOutcome run = run_method(specs[s], system, quad(grid[k]));
      const std::size_t slot = s * grid.size() + k;
      // Distinct slots: no two workers write the same element.
      report.records[slot] = make_record(specs[s], grid[k], run, reference, options.norm, host);
      report.diagnostics[slot] = make_diagnostics(specs[s], run);
    }
  };

  unsigned threads = options.jobs ? options.jobs : std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, jobs.size()));
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::future<void>> pool;
    for (unsigned i = 0; i < threads; ++i) pool.push_back(std::async(std::launch::async, worker));
    for (auto& f : pool) f.get();
  }

  fit_slopes(report, specs);
  return report;
}

StudyReport run_timing_study(const std::vector<MethodSpec>& specs, const OdeSystem& system,
                             const std::vector<double>& grid, int repetitions,
                             const StudyOptions& options) {
  if (repetitions < 3) throw std::invalid_argument("timing studies need at least 3 repetitions");
  StudyReport report = start_report(system, specs, grid, options);
  if (report.records.empty()) return report;
  const StateVector<quad> reference = compute_reference(system, options.reference_dt);
  const std::string host = options.host.empty() ? host_tag() : options.host;

  // Serial on purpose: one measured integration at a time.
  for (std::size_t s = 0; s < specs.size(); ++s) {
    for (std::size_t k = 0; k < grid.size(); ++k) {
      RunOutcome best = run_method(specs[s], system, quad(grid[k]));
      for (int rep = 1; rep < repetitions && best.ok(); ++rep) {
        RunOutcome run = run_method(specs[s], system, quad(grid[k]));
        if (run.elapsed < best.elapsed) best.elapsed = run.elapsed;
      }
      const std::size_t slot = s * grid.size() + k;
      report.records[slot] = make_record(specs[s], grid[k], best, reference, options.norm, host);
      report.diagnostics[slot] = make_diagnostics(specs[s], best);
    }
  }
  fit_slopes(report, specs);
  return report;
}

// ---------------------------------------------------------------------------
// CSV

namespace {

constexpr std::string_view kColumns =
    "method,high,low,corrections,dt,error,wall_time_s,newton_iters_mean,host";

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      fields.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  fields.push_back(cur);
  return fields;
}

double parse_double(const std::string& s) {
  std::size_t used = 0;
  const double v = std::stod(s, &used);
  if (used != s.size()) throw std::invalid_argument("malformed number '" + s + "'");
  return v;
}

}  // namespace

void write_csv(const std::vector<RunRecord>& records, std::ostream& out) {
  const bool energy = std::any_of(records.begin(), records.end(),
                                  [](const RunRecord& r) { return r.energy_j.has_value(); });
  out << kColumns << (energy ? ",energy_j" : "") << '\n';
  for (const auto& r : records) {
    if (r.method.find(',') != std::string::npos || r.host.find(',') != std::string::npos) {
      throw std::invalid_argument("CSV text fields must not contain commas");
    }
    out << r.method << ',' << to_string(r.high) << ',' << to_string(r.low) << ','
        << r.corrections << ',' << format_double(r.dt) << ',' << format_quad(r.error, 36) << ','
        << format_double(r.wall_time_s) << ',' << format_double(r.newton_iters_mean) << ','
        << r.host;
    if (energy) out << ',' << (r.energy_j ? format_double(*r.energy_j) : std::string());
    out << '\n';
  }
}

void emit_csv(const StudyReport& report, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
  write_csv(report.records, out);
  if (!out.flush()) throw std::runtime_error("failed writing '" + path.string() + "'");
}

std::vector<RunRecord> parse_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw std::invalid_argument("CSV is empty");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  bool energy = false;
  if (line == std::string(kColumns) + ",energy_j") {
    energy = true;
  } else if (line != kColumns) {
    throw std::invalid_argument("unexpected CSV header '" + line + "'");
  }
  const std::size_t expected = energy ? 10 : 9;

  std::vector<RunRecord> records;
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") continue;
    const auto f = split(line);
    if (f.size() != expected) throw std::invalid_argument("CSV row has wrong field count");
    RunRecord r;
    r.method = f[0];
    auto high = parse_precision(f[1]);
    auto low = parse_precision(f[2]);
    if (!high || !low) throw std::invalid_argument("bad precision in CSV row");
    r.high = *high;
    r.low = *low;
    r.corrections = std::stoi(f[3]);
    r.dt = parse_double(f[4]);
    r.error = parse_quad(f[5]);
    r.wall_time_s = parse_double(f[6]);
    r.newton_iters_mean = parse_double(f[7]);
    r.host = f[8];
    if (energy && !f[9].empty()) r.energy_j = parse_double(f[9]);
    records.push_back(std::move(r));
  }
  return records;
}

std::vector<RunRecord> read_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open '" + path.string() + "'");
  return parse_csv(in);
}

void write_manifest(const StudyReport& report, const StudyOptions& options,
                    const std::vector<std::pair<std::string, std::string>>& extra,
                    const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
  out << "host: " << (options.host.empty() ? host_tag() : options.host) << '\n';
  out << "toolchain: " << toolchain_string() << '\n';
  out << "quad: binary128 " << (quad_is_hardware() ? "hardware" : "software (libquadmath)") << '\n';
  out << "seed: none (deterministic)\n";
  out << "norm: " << to_string(report.norm) << '\n';
  out << "reference_method: rk4 128\n";
  out << "reference_dt: " << format_double(report.reference_dt) << '\n';
  out << "reference_floor: " << format_quad(report.reference_floor, 6) << '\n';
  out << "grid:";
  for (std::size_t i = 0; i < report.grid.size(); ++i) {
    out << (i ? "," : " ") << format_double(report.grid[i]);
  }
  out << '\n';
  out << "records: " << report.records.size() << '\n';
  for (const auto& [k, v] : extra) out << k << ": " << v << '\n';
  for (const auto& [label, slope] : report.slopes) {
    out << "slope[" << label << "]: " << format_double(slope) << '\n';
  }
  if (!out.flush()) throw std::runtime_error("failed writing '" + path.string() + "'");
}

}  // namespace mprk
