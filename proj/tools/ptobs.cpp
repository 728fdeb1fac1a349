#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"

#include "ptobs/error.hpp"
#include "ptobs/run.hpp"
#include "ptobs/scenario.hpp"

namespace {

int cmd_run(const std::string& ref, const std::string& out, bool check_only, std::optional<std::uint64_t> seed)
{
  ptobs::Scenario sc;
  try {
    sc = ptobs::resolve_scenario(ref);
  } catch (const ptobs::ValidationError& e) {
    std::cerr << "ptobs: invalid scenario: " << e.what() << '\n';
    return ptobs::kExitValidation;
  } catch (const ptobs::Error& e) {
    std::cerr << "ptobs: " << e.what() << '\n';
    return ptobs::kExitValidation;
  }

  ptobs::RunOptions opts;
  opts.out_dir = out.empty() ? std::filesystem::path("runs") / sc.name : std::filesystem::path(out);
  opts.check_only = check_only;
  opts.seed = seed;

  const ptobs::RunResult res = ptobs::run_scenario(std::move(sc), opts);
  if (check_only) {
    std::cout << res.report;
  } else {
    for (const auto& p : res.written) std::cout << "wrote " << p.string() << '\n';
  }
  if (res.exit_code == ptobs::kExitIntegration) std::cerr << "ptobs: integration failed, see report\n";
  return res.exit_code;
}

}  // namespace

int main(int argc, char** argv)
{
  CLI::App app{"Prescribed-time observer simulation and certification"};
  app.require_subcommand(1);

  std::string scenario;
  std::string out_dir;
  bool check_only = false;
  std::uint64_t seed = 0;
  auto* run = app.add_subcommand("run", "Simulate a scenario and write CSVs, report and plot script");
  run->add_option("scenario", scenario, "Scenario file or built-in name")->required();
  run->add_option("--out", out_dir, "Output directory (default runs/<name>)");
  run->add_flag("--check-only", check_only, "Validate and certify without simulating");
  auto* seed_opt = run->add_option("--seed", seed, "Noise seed override");

  auto* scenarios = app.add_subcommand("scenarios", "Built-in scenarios");
  scenarios->require_subcommand(1);
  auto* list = scenarios->add_subcommand("list", "List built-in scenarios");

  std::string run_dir;
  auto* plot = app.add_subcommand("plot", "Write plot.gp for a run directory");
  plot->add_option("run-dir", run_dir, "Directory holding the run CSVs")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : ptobs::kExitValidation;
  }

  try {
    if (*run) {
      return cmd_run(scenario, out_dir, check_only,
                     *seed_opt ? std::optional<std::uint64_t>(seed) : std::nullopt);
    }
    if (*list) {
      for (const auto& [name, text] : ptobs::builtin_scenarios()) {
        const ptobs::Scenario sc = ptobs::parse_scenario(text);
        std::cout << name << "  " << sc.description << '\n';
      }
      return 0;
    }
    if (*plot) {
      std::cout << "wrote " << ptobs::write_plot_script(run_dir).string() << '\n';
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "ptobs: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
