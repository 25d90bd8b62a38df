#include "cli.hpp"

#include <algorithm>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "stages.hpp"

namespace nlscli {

namespace fs = std::filesystem;

namespace {

struct Flags {
  std::string config, out = "out", stage;
  std::uint64_t seed = 0;
  int refine = 0;
};

ExperimentConfig resolve(const Flags& fl, CLI::App& app) {
  ExperimentConfig c = fl.config.empty() ? ExperimentConfig{} : load_config(fl.config);
  if (app.count("--seed")) c.seed = fl.seed;
  if (app.count("--refine")) c.refine = fl.refine;
  c.validate();
  return c;
}

int numerical_failure(const fs::path& out, const std::string& stage, const std::string& kind, const std::string& msg) {
  fs::create_directories(out);
  const fs::path diag = out / "diagnostics.json";
  json j;
  j["stage"] = stage;
  j["kind"] = kind;
  j["message"] = msg;
  std::ofstream(diag) << j.dump(2) << "\n";
  std::cerr << "numerical failure in " << (stage.empty() ? "setup" : stage) << ": " << msg << "\n"
            << "diagnostics: " << diag.string() << "\n";
  return 1;
}

}  // namespace

int run_command(int argc, const char* const* argv) {
  CLI::App app{"Soliton asymptotic-stability toolkit for 2D NLS"};
  app.require_subcommand(0, 1);
  Flags fl;
  app.add_option("--config", fl.config, "sectioned key/value config file");
  app.add_option("--out", fl.out, "output directory");
  app.add_option("--stage", fl.stage, "pipeline: stop after this stage");
  app.add_option("--seed", fl.seed, "seed for the random test families");
  app.add_option("--refine", fl.refine, "grid refinement factor")->check(CLI::IsMember({1, 2}));

  const std::vector<std::pair<std::string, std::string>> cmds{
      {"groundstate", "ground state, soliton family, H4/H5 checks"},
      {"spectrum", "discrete spectrum of the linearization"},
      {"fgr", "normal-form coefficients and the Fermi golden rule constant"},
      {"reduced-ode", "reduced ODE for the internal-mode amplitude"},
      {"simulate", "2D relaxation experiment"},
      {"waveop", "wave operators: stationary formula, time limit, L^p probe"},
      {"bench-estimates", "space-time estimate benches and weighted resolvent decay"},
      {"pipeline", "all stages in order, then the report"},
      {"report", "scoreboard, norm tables and plot script from an output directory"}};
  for (const auto& [name, help] : cmds) app.add_subcommand(name, help)->fallthrough();

  if (argc <= 1) {
    std::cerr << app.help();
    return 2;
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }
  if (app.get_subcommands().empty()) {
    std::cerr << app.help();
    return 2;
  }
  const std::string cmd = app.get_subcommands().front()->get_name();
  const fs::path out = fl.out;

  if (cmd == "report") {
    try {
      const ReportOutcome r = emit_report(out);
      for (const auto& w : r.warnings) std::cerr << "warning: " << w << "\n";
      if (!r.empty) std::cout << fs::path(out / "scoreboard.txt").string() << "\n";
      return 0;
    } catch (const nls::Error& e) {
      return numerical_failure(out, "report", nls::to_string(e.kind()), e.what());
    }
  }

  ExperimentConfig cfg;
  try {
    cfg = resolve(fl, app);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 3;
  }

  std::vector<std::string> stages;
  if (cmd == "pipeline") {
    for (const auto& s : pipeline_stages())
      if (std::find(cfg.stages.begin(), cfg.stages.end(), s) != cfg.stages.end()) stages.push_back(s);
    if (!fl.stage.empty()) {
      auto it = std::find(pipeline_stages().begin(), pipeline_stages().end(), fl.stage);
      if (it == pipeline_stages().end()) {
        std::cerr << "unknown stage '" << fl.stage << "'\n";
        return 2;
      }
      const auto limit = it - pipeline_stages().begin();
      std::erase_if(stages, [&](const std::string& s) {
        return std::find(pipeline_stages().begin(), pipeline_stages().end(), s) - pipeline_stages().begin() > limit;
      });
    }
  } else {
    stages.push_back(cmd);
  }

  std::string current;
  try {
    Context ctx(cfg, out);
    for (const auto& s : stages) {
      current = s;
      std::cerr << "[" << s << "]\n";
      run_stage(ctx, s);
    }
    current.clear();
    write_manifest(ctx, stages);
    if (cmd == "pipeline") {
      const ReportOutcome r = emit_report(out);
      for (const auto& w : r.warnings) std::cerr << "warning: " << w << "\n";
      std::ifstream sb(out / "scoreboard.txt");
      std::cout << sb.rdbuf();
    }
  } catch (const nls::Error& e) {
    return numerical_failure(out, current, nls::to_string(e.kind()), e.what());
  } catch (const std::exception& e) {
    return numerical_failure(out, current, "exception", e.what());
  }
  return 0;
}

}  // namespace nlscli
