#include "mprk/cli.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <ostream>

namespace mprk::cli {

namespace {

constexpr const char* kDescription =
    "Mixed-precision Runge-Kutta integrators: single runs, convergence sweeps, "
    "timing sweeps and figure data.";

void add_common_options(CLI::App& app, CliConfig& c) {
  app.add_option("--problem", c.problem, "Problem key (vdp, dahlquist)");
  app.add_option("--method", c.method, "imr | sdirk | 4s3pa | rk4");
  app.add_option("--high", c.high, "High precision: 32 | 64 | 128");
  app.add_option("--low", c.low, "Low (implicit-stage) precision; defaults to --high");
  app.add_option("--corrections", c.corrections, "Correction passes per implicit stage (0-3)");
  app.add_option("--dt", c.dt, "Time step for `run`");
  app.add_option("--dt-min-exp", c.dt_min_exp, "Coarsest grid step is 2^-k");
  app.add_option("--dt-max-exp", c.dt_max_exp, "Finest grid step is 2^-k");
  app.add_option("--reps", c.repetitions, "Timing repetitions (min of N, N >= 3)");
  app.add_option("--out", c.out, "CSV path (run/converge/bench) or directory (figures)");
  app.add_option("--newton-max-iter", c.newton_max_iter, "Newton iteration cap");
  app.add_option("--newton-tol-factor", c.newton_tol_factor,
                 "Newton tolerance as a multiple of machine epsilon");
  app.add_option("--sdirk-gamma", c.sdirk_gamma, "SDIRK diagonal coefficient");
  app.add_option("--norm", c.norm, "Error norm: euclidean | max");
  app.add_option("--ref-dt", c.ref_dt, "Reference RK4 step");
}

quad parse_quad_option(const std::string& name, const std::string& text) {
  try {
    return parse_quad(text);
  } catch (const std::invalid_argument&) {
    throw UsageError("--" + name + ": not a number: " + text);
  }
}

void validate(CliConfig& c) {
  if (c.low.empty()) c.low = c.high;
  const auto method = parse_method(c.method);
  if (!method) throw UsageError("unknown method '" + c.method + "'");
  if (*method == Method::Rk4) c.low = c.high;
  const auto high = parse_precision(c.high);
  const auto low = parse_precision(c.low);
  if (!high) throw UsageError("unknown precision '" + c.high + "'");
  if (!low) throw UsageError("unknown precision '" + c.low + "'");
  if (!finer_or_equal(*high, *low)) {
    throw UsageError("--low " + c.low + " is finer than --high " + c.high);
  }
  const auto names = problem_names();
  if (std::find(names.begin(), names.end(), c.problem) == names.end()) {
    throw UsageError("unknown problem '" + c.problem + "'");
  }
  if (c.corrections < 0 || c.corrections > 3) throw UsageError("--corrections must be in 0..3");
  if (c.dt && !(*c.dt > 0 && std::isfinite(*c.dt))) throw UsageError("--dt must be positive");
  if (c.dt_min_exp < 0 || c.dt_max_exp > 40 || c.dt_min_exp > c.dt_max_exp) {
    throw UsageError("grid exponents must satisfy 0 <= --dt-min-exp <= --dt-max-exp <= 40");
  }
  if (c.repetitions < 3) throw UsageError("--reps must be at least 3");
  if (c.newton_max_iter <= 0) throw UsageError("--newton-max-iter must be positive");
  if (!(c.newton_tol_factor > 0 && std::isfinite(c.newton_tol_factor))) {
    throw UsageError("--newton-tol-factor must be positive");
  }
  if (!parse_norm(c.norm)) throw UsageError("unknown norm '" + c.norm + "'");
  if (c.sdirk_gamma) parse_quad_option("sdirk-gamma", *c.sdirk_gamma);
  if (c.ref_dt && !(parse_quad_option("ref-dt", *c.ref_dt) > 0)) {
    throw UsageError("--ref-dt must be positive");
  }
}

std::string format_state(const StateVector<quad>& s) {
  std::string text = "(";
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (i) text += ", ";
    text += format_quad(s[i], 36);
  }
  return text + ")";
}

std::string summary_line(const RunRecord& r, const RunDiagnostics& d) {
  char buf[256];
  std::snprintf(buf, sizeof buf, "%-18s dt=%-12.6g error=%-12s time=%.6fs newton=%.2f%s",
                d.label.c_str(), r.dt, format_quad(r.error, 6).c_str(), r.wall_time_s,
                r.newton_iters_mean,
                d.failure.empty() ? (d.diverged ? "  DIVERGED" : "") : "  FAILED");
  std::string line = buf;
  if (!d.failure.empty()) line += " (" + d.failure + ")";
  return line;
}

bool any_failed(const StudyReport& report) {
  return std::any_of(report.diagnostics.begin(), report.diagnostics.end(),
                     [](const RunDiagnostics& d) { return d.diverged || !d.failure.empty(); });
}

std::vector<std::pair<std::string, std::string>> manifest_extras(const CliConfig& c,
                                                                 const OdeSystem& system) {
  return {{"problem", system.identity()},
          {"newton_tol_factor", std::to_string(c.newton_tol_factor)},
          {"newton_max_iter", std::to_string(c.newton_max_iter)},
          {"sdirk_gamma", format_quad(c.method_spec().sdirk_gamma)},
          {"repetitions", std::to_string(c.repetitions)}};
}

void write_study(const StudyReport& report, const CliConfig& c, const OdeSystem& system,
                 const std::filesystem::path& csv, std::ostream& out) {
  if (csv.has_parent_path()) std::filesystem::create_directories(csv.parent_path());
  emit_csv(report, csv);
  std::filesystem::path manifest = csv;
  manifest += ".manifest";
  write_manifest(report, c.study_options(), manifest_extras(c, system), manifest);
  out << "wrote " << csv.string() << '\n';
}

int run_single(const CliConfig& c, const OdeSystem& system, std::ostream& out) {
  const MethodSpec spec = c.method_spec();
  const StudyOptions opts = c.study_options();
  const double dt = c.dt.value_or(std::ldexp(1.0, -10));
  const RunOutcome run = run_method(spec, system, quad(dt));
  const StateVector<quad> reference = compute_reference(system, opts.reference_dt);

  StudyReport report;
  report.grid = {dt};
  report.reference_dt = static_cast<double>(opts.reference_dt);
  report.norm = opts.norm;
  RunRecord r;
  r.method = std::string(to_string(spec.method));
  r.high = spec.high;
  r.low = spec.low;
  r.corrections = spec.corrections;
  r.dt = dt;
  r.error = run.ok() ? compute_error(run.final_state, reference, opts.norm) : num::infinity<quad>();
  r.wall_time_s = run.elapsed.count();
  r.newton_iters_mean = run.newton_iterations_mean();
  r.host = opts.host;
  RunDiagnostics d;
  d.label = spec.label();
  d.steps = run.steps;
  d.diverged = run.diverged;
  d.failure = run.failure;
  report.records.push_back(r);
  report.diagnostics.push_back(d);

  out << summary_line(r, d) << '\n';
  out << "final state: " << format_state(run.final_state) << '\n';
  out << "steps: " << run.steps << '\n';
  if (!c.out.empty()) write_study(report, c, system, c.out, out);
  return run.ok() ? 0 : 1;
}

int run_study(const CliConfig& c, const OdeSystem& system, std::ostream& out) {
  const std::vector<MethodSpec> specs{c.method_spec()};
  const StudyReport report =
      c.subcommand == Subcommand::Bench
          ? run_timing_study(specs, system, c.grid(), c.repetitions, c.study_options())
          : run_convergence_study(specs, system, c.grid(), c.study_options());
  for (std::size_t i = 0; i < report.records.size(); ++i) {
    out << summary_line(report.records[i], report.diagnostics[i]) << '\n';
  }
  for (const auto& [label, slope] : report.slopes) out << "order[" << label << "] = " << slope << '\n';
  const std::string path =
      !c.out.empty() ? c.out : (c.subcommand == Subcommand::Bench ? "bench.csv" : "converge.csv");
  write_study(report, c, system, path, out);
  return any_failed(report) ? 1 : 0;
}

int run_figures(const CliConfig& c, const OdeSystem& system, std::ostream& out) {
  const std::filesystem::path dir = std::filesystem::path(c.out.empty() ? "." : c.out);
  std::filesystem::create_directories(dir);
  bool failed = false;
  for (const FigureSpec& fig : figure_catalog(c)) {
    out << "== figure " << fig.label << '\n';
    const StudyReport report =
        fig.timed ? run_timing_study(fig.specs, system, c.grid(), c.repetitions, c.study_options())
                  : run_convergence_study(fig.specs, system, c.grid(), c.study_options());
    for (std::size_t i = 0; i < report.records.size(); ++i) {
      out << summary_line(report.records[i], report.diagnostics[i]) << '\n';
    }
    failed = failed || any_failed(report);
    write_study(report, c, system, dir / ("figure-" + fig.label + ".csv"), out);
  }
  return failed ? 1 : 0;
}

}  // namespace

MethodSpec CliConfig::method_spec() const {
  MethodSpec s;
  s.method = parse_method(method).value_or(Method::Imr);
  s.high = parse_precision(high).value_or(Precision::Double);
  s.low = parse_precision(low.empty() ? high : low).value_or(s.high);
  if (s.method == Method::Rk4) s.low = s.high;
  s.corrections = corrections;
  if (sdirk_gamma) s.sdirk_gamma = parse_quad(*sdirk_gamma);
  s.newton.tolerance_factor = newton_tol_factor;
  s.newton.max_iterations = newton_max_iter;
  return s;
}

StudyOptions CliConfig::study_options() const {
  StudyOptions o;
  if (ref_dt) o.reference_dt = parse_quad(*ref_dt);
  o.norm = parse_norm(norm).value_or(ErrorNorm::Euclidean);
  o.host = host_tag();
  return o;
}

std::vector<double> CliConfig::grid() const { return power_of_two_grid(dt_min_exp, dt_max_exp); }

CliConfig parse_args(int argc, const char* const argv[]) {
  CliConfig c;
  CLI::App app{kDescription, "mprk"};
  app.require_subcommand(1);
  struct Entry {
    const char* name;
    const char* help;
    Subcommand sub;
  };
  const Entry entries[] = {
      {"run", "Integrate once at --dt and report the final state and error", Subcommand::Run},
      {"converge", "Error sweep over the dt grid with fitted convergence order", Subcommand::Converge},
      {"bench", "Timing sweep: min wall time over --reps runs per dt", Subcommand::Bench},
      {"figures", "Regenerate every figure's data as figure-<label>.csv", Subcommand::Figures},
  };
  std::vector<std::pair<CLI::App*, Subcommand>> subs;
  for (const auto& e : entries) {
    CLI::App* sub = app.add_subcommand(e.name, e.help);
    add_common_options(*sub, c);
    subs.emplace_back(sub, e.sub);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    throw UsageError(app.help(), 0);
  } catch (const CLI::ParseError& e) {
    throw UsageError(std::string(e.what()) + "\n\n" + app.help(), 2);
  }
  for (const auto& [sub, kind] : subs) {
    if (sub->parsed()) c.subcommand = kind;
  }
  validate(c);
  return c;
}

std::vector<FigureSpec> figure_catalog(const CliConfig& config) {
  const MethodSpec base = config.method_spec();
  using P = Precision;
  const std::pair<P, P> all_pairs[] = {{P::Single, P::Single}, {P::Double, P::Double},
                                       {P::Double, P::Single}, {P::Quad, P::Quad},
                                       {P::Quad, P::Double},   {P::Quad, P::Single}};
  auto specs_for = [&](Method m, std::initializer_list<int> corrections, bool include_single) {
    std::vector<MethodSpec> out;
    for (int corr : corrections) {
      for (const auto& [h, l] : all_pairs) {
        if (!include_single && h == P::Single) continue;
        MethodSpec s = base;
        s.method = m;
        s.high = h;
        s.low = l;
        s.corrections = m == Method::Ark4s3pA ? 0 : corr;
        out.push_back(s);
      }
    }
    return out;
  };
  return {
      {"imr-errors", false, specs_for(Method::Imr, {0}, true)},
      {"imr-1corr-errors", false, specs_for(Method::Imr, {1}, true)},
      {"imr-2corr-runtime", true, specs_for(Method::Imr, {2}, false)},
      {"imr-1corr-efficiency", true, specs_for(Method::Imr, {1}, false)},
      {"sdirk-errors", false, specs_for(Method::Sdirk, {0, 1, 2, 3}, true)},
      {"sdirk-efficiency", true, specs_for(Method::Sdirk, {0, 3}, false)},
      {"4s3pa-errors", false, specs_for(Method::Ark4s3pA, {0}, true)},
      {"4s3pa-efficiency", true, specs_for(Method::Ark4s3pA, {0}, false)},
  };
}

int run(const CliConfig& config, std::ostream& out, std::ostream& /*err*/) {
  const auto system = make_problem(config.problem);
  switch (config.subcommand) {
    case Subcommand::Run: return run_single(config, *system, out);
    case Subcommand::Converge:
    case Subcommand::Bench: return run_study(config, *system, out);
    case Subcommand::Figures: return run_figures(config, *system, out);
  }
  return 2;
}

int main(int argc, const char* const argv[], std::ostream& out, std::ostream& err) {
  CliConfig config;
  try {
    config = parse_args(argc, argv);
  } catch (const UsageError& e) {
    (e.exit_code() == 0 ? out : err) << e.what() << '\n';
    return e.exit_code();
  }
  try {
    return run(config, out, err);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace mprk::cli
