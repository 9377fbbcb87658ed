// rigscat command-line front door.
//
//   rigscat run <config>                 run a scenario pipeline
//   rigscat compare <mA> <mB>            diff shared CSV artifacts of two runs
//   rigscat plotdata <manifest> <qty>    extract plot-ready columns
//
// Global options: --out <dir> (or RIGSCAT_OUT), --threads <n>,
// --tol-profile {default, strict}.
//
// Exit codes: 0 success, 1 invariant failure, 2 config parse error.

#include <rigscat/config.hpp>
#include <rigscat/manifest.hpp>
#include <rigscat/scenario.hpp>

#include <CLI11.hpp>

#include <cstdio>
#include <cstdlib>
#include <string>

int main(int argc, char** argv) {
  CLI::App app{"rigscat: stationary scattering on desk-scale operator models"};
  app.require_subcommand(1);

  std::string outDir;
  if (const char* env = std::getenv("RIGSCAT_OUT")) outDir = env;
  unsigned threads = 1;
  std::string tolProfile = "default";
  app.add_option("--out", outDir, "output directory (default: RIGSCAT_OUT or 'out')");
  app.add_option("--threads", threads, "worker threads for grid sweeps");
  app.add_option("--tol-profile", tolProfile, "tolerance profile")
      ->check(CLI::IsMember({"default", "strict"}));

  std::string configPath, manifestA, manifestB, quantity;
  CLI::App* cmdRun = app.add_subcommand("run", "run a scenario from a config file");
  cmdRun->add_option("config", configPath, "key=value config file")->required();
  CLI::App* cmdCompare =
      app.add_subcommand("compare", "entrywise max deviation of two runs");
  cmdCompare->add_option("manifestA", manifestA)->required();
  cmdCompare->add_option("manifestB", manifestB)->required();
  CLI::App* cmdPlot =
      app.add_subcommand("plotdata", "extract plot-ready data from a run");
  cmdPlot->add_option("manifest", manifestA)->required();
  cmdPlot
      ->add_option("quantity", quantity,
                   "eigenphases | transmission | fiber_rank | residuals")
      ->required();

  CLI11_PARSE(app, argc, argv);
  if (outDir.empty()) outDir = "out";
  double tolFactor = (tolProfile == "strict") ? 0.5 : 1.0;

  try {
    if (cmdRun->parsed()) {
      rigscat::RunConfig cfg = rigscat::load_run_config(configPath);
      rigscat::ScenarioOutcome outcome =
          rigscat::run_scenario(cfg, outDir, tolFactor, threads);
      for (const auto& c : outcome.checks)
        std::printf("%-36s value=%-12.3e tol=%-9.1e %s\n", c.name.c_str(), c.value,
                    c.tolerance, c.pass ? "pass" : "FAIL");
      if (outcome.exitCode != 0) {
        std::printf("invariant failure:");
        for (const auto& c : outcome.checks)
          if (!c.pass) std::printf(" %s", c.name.c_str());
        std::printf("\n");
      } else {
        std::printf("all checks passed; manifest: %s\n", outcome.manifestPath.c_str());
      }
      return outcome.exitCode;
    }
    if (cmdCompare->parsed()) {
      rigscat::CompareReport rep = rigscat::compare_runs(manifestA, manifestB);
      for (const auto& d : rep.diffs)
        std::printf("%-16s max_deviation=%.17g%s\n", d.artifact.c_str(),
                    d.maxDeviation, d.comparable ? "" : " (shape mismatch)");
      std::printf("overall max_deviation=%.17g\n", rep.maxDeviation);
      return rep.comparable ? 0 : 1;
    }
    if (cmdPlot->parsed()) {
      std::string path = rigscat::emit_plot_data(manifestA, quantity, outDir);
      std::printf("wrote %s\n", path.c_str());
      return 0;
    }
  } catch (const rigscat::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "invariant failure: %s\n", e.what());
    return 1;
  }
  return 0;
}
