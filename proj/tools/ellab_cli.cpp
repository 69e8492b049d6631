// Command-line front end: ellab_cli <subcommand> <config.json> [--out DIR]
#include <iostream>
#include <string>

#include "CLI11.hpp"

#include "ellab/commands.hpp"
#include "ellab/config.hpp"

using namespace ellab;

namespace {

// Loads the config and applies --out; a load failure is reported like any
// other command failure so the exit-code contract holds.
int with_config(const std::string& name, const std::string& path, const std::string& out_override,
                CommandOutcome (*fn)(const RunConfig&)) {
  RunConfig cfg;
  try {
    cfg = load_config(path);
  } catch (const Error& e) {
    std::cerr << name << " FAIL: " << e.what() << '\n';
    return e.kind() == ErrorKind::Io ? kExitConfig : exit_code_for(e.kind());
  }
  if (!out_override.empty()) cfg.outputs.dir = out_override;
  // validate-params only reads; it never creates the output directory.
  const std::string manifest_dir = name == "validate-params" ? std::string() : cfg.outputs.dir;
  return run_command(name, &cfg, manifest_dir, [&] { return fn(cfg); }, std::cout, std::cerr);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Non-isothermal Ericksen-Leslie solver and symbol checks"};
  app.require_subcommand(1);
  int threads = 0;
  app.add_option("--threads", threads, "worker threads (overrides EL_THREADS)");

  std::string config, out;
  struct Cmd {
    const char* name;
    const char* help;
    CommandOutcome (*fn)(const RunConfig&);
  };
  const Cmd cmds[] = {
      {"simulate", "time-integrate and write diagnostics.csv", cmd_simulate},
      {"symbols", "accretivity, Stokes, Schur and determinant sweeps", cmd_symbols},
      {"ls-check", "Lopatinskii-Shapiro determinant sweep", cmd_ls_check},
      {"spectrum", "dense spectrum of the linearization at equilibrium", cmd_spectrum},
      {"validate-params", "check the configuration and condition (P)", cmd_validate},
  };
  for (const auto& c : cmds) {
    auto* sub = app.add_subcommand(c.name, c.help);
    sub->add_option("config", config, "JSON configuration")->required();
    sub->add_option("--out", out, "output directory (overrides outputs.dir)");
  }
  std::string report_dir;
  auto* rep = app.add_subcommand("report", "summarize the artifacts of a run directory");
  rep->add_option("dir", report_dir, "run output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitConfig;
  }
  if (threads > 0) set_worker_count(threads);

  if (rep->parsed())
    return run_command("report", nullptr, "", [&] { return cmd_report(report_dir); }, std::cout, std::cerr);
  for (const auto& c : cmds)
    if (app.got_subcommand(c.name)) return with_config(c.name, config, out, c.fn);
  return kExitInternal;
}
