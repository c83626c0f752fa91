#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "semilin/feynman_kac.hpp"
#include "semilin/localization.hpp"
#include "semilin/picard.hpp"
#include "semilin/problem.hpp"
#include "semilin/validation.hpp"

namespace semilin {

struct RunConfig {
  double kappa = 8.0;
  bool kappa_adaptive = false;
  double tol = 1e-6;
  double sup_tol = 1e-5;
  int max_iter = 60;
  int quad_nodes_per_dim = 16;
  double tail_cut_sigmas = 6.0;
  std::vector<double> ladder;  // empty: radius/4, radius/2, radius for suites B, C, D
  McSettings mc;
  std::vector<PathStart> crosscheck_points;  // empty: default_crosscheck_points
  double residual_warn = 5e-3;
  std::filesystem::path out_dir;  // empty: nothing written by solve
  std::string source_text;        // config the run came from, copied into the run directory

  /// Throws Validation on tol <= 0, a non-increasing ladder or a bad MC setting.
  void validate() const;
  std::vector<double> ladder_for(const Problem& problem) const;
};

struct StageError {
  std::string stage;
  std::string message;
};

enum class Route { Direct, Localized, Ladder };
const char* to_string(Route route);

struct RunResult {
  Problem problem;  // as declared
  Problem solved;   // what was iterated, localized unless routed directly
  Route route = Route::Direct;
  std::optional<CutoffFamily> cutoffs;
  double kappa = 0.0;
  RunConfig config;

  ValidationReport validation;  // declared problem under its declared suite
  GridField solution;
  IterationTrace trace;
  double residual = 0.0;
  std::optional<StabilityReport> stability;
  std::optional<SaddleField> saddle;
  CrossCheckReport crosscheck;

  std::vector<std::string> warnings;
  std::optional<StageError> error;
  bool ladder_agreed = false;  // suite D: consecutive rungs within 5 tol

  bool converged() const;
  /// 0 converged and every check passed, 2 converged with warnings, 1 failure.
  int exit_code() const;
};

/// Routes on the declared suite: A (passing validation) iterates directly, a failing A and suites B
/// and C localize and run the stability ladder, D runs the truncation ladder until consecutive rungs
/// agree within 5 tol. Stage failures are recorded in `error`, never thrown. Exports when
/// config.out_dir is set.
RunResult solve(const Problem& problem, const RunConfig& config);

struct ManifestEntry {
  std::string file;
  std::string sha256;
};

struct Manifest {
  std::vector<ManifestEntry> files;
  std::string text;
};

/// Writes solution.csv, trace.csv, crosscheck.csv, validation.csv, stability.csv and saddle.csv when
/// present, then manifest.cfg. config.source_text is copied to input.cfg when non-empty.
/// Throws Io if the directory cannot be written.
Manifest export_result(const RunResult& result, const std::filesystem::path& dir);

std::string sha256_hex(std::string_view data);

/// Entries of a manifest.cfg keyed "section.key".
std::map<std::string, std::string> read_manifest(const std::filesystem::path& file);

/// Reads a solution.csv written by export_result back into a field on `grid`.
GridField read_solution_csv(const std::filesystem::path& file, const SpaceTimeGrid& grid);

/// Lines "t, x1, ..., xN"; blank lines and '#' comments are skipped.
std::vector<PathStart> read_points(const std::filesystem::path& file, int dim);

void write_crosscheck_csv(const CrossCheckReport& report, int dim, const std::filesystem::path& file);

}  // namespace semilin
