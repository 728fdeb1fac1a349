#ifndef PTOBS_SCENARIO_HPP
#define PTOBS_SCENARIO_HPP

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "ptobs/certify.hpp"
#include "ptobs/observers.hpp"
#include "ptobs/sim.hpp"
#include "ptobs/system.hpp"

namespace ptobs {

struct SystemDef
{
  int n = 0;
  std::vector<std::string> f;
  std::string f0;
  std::string u;
  std::string d;
};

struct ObserverDef
{
  std::string name;
  std::string variant;  // "pt", "hg" or "extended_pt"
  ObserverSpec spec = HgObserverSpec{};
  std::optional<std::vector<Complex>> poles;  // when gains were derived from poles
};

struct CertifyDef
{
  bool enabled = true;
  double gamma_bar_f = 0.0;
  double sigma_bar = 0.0;
};

struct MetricsDef
{
  std::optional<double> reference_T;
  std::optional<double> delta;
  std::optional<double> dhat_window_start;
  double settle_tol = 1e-2;
};

struct OutputDef
{
  std::string csv_path = "{observer}.csv";  // `{observer}` is replaced by the observer name
  std::string report_path = "report.txt";
  std::optional<std::string> plot_script = "plot.gp";
};

/// Fully resolved experiment: every default has been applied.
struct Scenario
{
  std::string name;
  std::string description;
  SystemDef system_def;
  std::shared_ptr<const TriangularSystem> system;
  std::vector<ObserverDef> observers;
  StateVec x0;
  std::vector<StateVec> xhat0;  // one per observer
  SimConfig sim;
  CertifyDef certify;
  MetricsDef metrics;
  OutputDef output;
};

/// Parses and validates a JSON scenario. Schema problems raise
/// ValidationError with the offending field path; expression problems
/// raise ParseError; plant-structure problems raise Error.
Scenario parse_scenario(std::string_view json_text);

Scenario load_scenario(const std::filesystem::path& path);

/// Scenario files compiled into the library, keyed by file name.
const std::vector<std::pair<std::string, std::string_view>>& builtin_scenarios();

/// Loads `ref` as a file when it exists, otherwise as a built-in name
/// (with or without the .json suffix).
Scenario resolve_scenario(const std::string& ref);

}  // namespace ptobs

#endif  // PTOBS_SCENARIO_HPP
