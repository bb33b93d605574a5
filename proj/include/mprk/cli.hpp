#pragma once

#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "mprk/integrators.hpp"
#include "mprk/study.hpp"

namespace mprk::cli {

enum class Subcommand { Run, Converge, Bench, Figures };

struct CliConfig {
  Subcommand subcommand = Subcommand::Run;
  std::string problem = "vdp";
  std::string method = "imr";
  std::string high = "64";
  /// Defaults to `high`.
  std::string low;
  int corrections = 0;
  std::optional<double> dt;
  int dt_min_exp = 4;
  int dt_max_exp = 14;
  int repetitions = 3;
  /// CSV file for run/converge/bench, output directory for figures.
  std::string out;
  int newton_max_iter = 20;
  double newton_tol_factor = 1.001;
  std::optional<std::string> sdirk_gamma;
  std::string norm = "euclidean";
  std::optional<std::string> ref_dt;

  MethodSpec method_spec() const;
  StudyOptions study_options() const;
  std::vector<double> grid() const;
};

class UsageError : public std::runtime_error {
 public:
  UsageError(const std::string& what, int exit_code = 2)
      : std::runtime_error(what), exit_code_(exit_code) {}
  int exit_code() const noexcept { return exit_code_; }

 private:
  int exit_code_;
};

/// Parses and validates; every rejected input raises UsageError before any
/// computation. `--help` raises UsageError with exit code 0 and the help
/// text as its message.
CliConfig parse_args(int argc, const char* const argv[]);

/// One figure the `figures` subcommand regenerates.
struct FigureSpec {
  std::string label;
  /// Timed figures run a timing study; the rest a convergence study.
  bool timed = false;
  std::vector<MethodSpec> specs;
};

std::vector<FigureSpec> figure_catalog(const CliConfig& config);

/// Executes a validated config. 0 on success, 1 if any run diverged or failed.
int run(const CliConfig& config, std::ostream& out, std::ostream& err);

/// parse_args + run, mapping usage errors to exit code 2.
int main(int argc, const char* const argv[], std::ostream& out, std::ostream& err);

}  // namespace mprk::cli
