#ifndef PTOBS_RUN_HPP
#define PTOBS_RUN_HPP

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "ptobs/certify.hpp"
#include "ptobs/metrics.hpp"
#include "ptobs/scenario.hpp"

namespace ptobs {

inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 2;
inline constexpr int kExitIntegration = 3;

struct RunOptions
{
  std::filesystem::path out_dir = ".";
  bool check_only = false;              // validate and certify, no simulation, nothing written
  std::optional<std::uint64_t> seed;    // overrides sim.seed
};

struct PairComparison
{
  std::string pt_name;
  std::string hg_name;
  Comparison result;
};

struct RunResult
{
  int exit_code = kExitOk;
  std::string report;
  std::vector<std::filesystem::path> written;

  // One entry per observer, in scenario order. Empty in check-only mode
  // and after an integration failure.
  std::vector<Trajectory> trajectories;
  std::vector<RunMetrics> metrics;
  std::vector<PairComparison> comparisons;

  // One entry per observer; empty optionals where not applicable.
  std::vector<std::optional<Certificate>> certificates;
  std::vector<std::optional<BoundReport>> bounds;
};

/// Simulates every observer of the scenario, writes CSVs, the report and the
/// optional plot script under `opts.out_dir`.
RunResult run_scenario(Scenario sc, const RunOptions& opts);

/// `t,x1..xn,xhat1..xhatn,[dhat],err_norm,mu,[d]`
std::vector<std::string> csv_columns(const Trajectory& traj);
std::string trajectory_csv(const Trajectory& traj);

struct PlotSource
{
  std::string label;
  std::string csv_file;  // as referenced from the script
  std::vector<std::string> columns;
};

/// gnuplot script: states against estimates, log-scale error norm, and the
/// disturbance against its estimate when a `dhat` column is present.
std::string gnuplot_script(const std::vector<PlotSource>& sources);

/// Scans `run_dir` for CSV files and writes `plot.gp` next to them.
std::filesystem::path write_plot_script(const std::filesystem::path& run_dir);

}  // namespace ptobs

#endif  // PTOBS_RUN_HPP
