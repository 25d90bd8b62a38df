#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "config.hpp"
#include "json.hpp"
#include "nls/normalform.hpp"

namespace nlscli {

using json = nlohmann::ordered_json;

// Shared state threaded between stages in one invocation.
struct Context {
  ExperimentConfig cfg;  // after refinement
  std::string hash;
  std::filesystem::path out;

  std::optional<nls::RadialProfile> profile;
  std::optional<nls::LinearizedOperator> op;
  std::optional<nls::DiscreteSpectrum> spectrum;
  std::optional<json> fgr;  // stage summary
  std::vector<std::string> written;

  Context(const ExperimentConfig& c, std::filesystem::path dir);

  void write_json(const std::string& name, json j);
  // header is the comma-separated column list; rows are written at round-trip precision
  void write_csv(const std::string& name, const std::string& header, const std::vector<std::vector<double>>& rows);
  void write_text(const std::string& name, const std::string& body);

  const nls::RadialProfile& ground_state();
  const nls::LinearizedOperator& linearization();
  const nls::DiscreteSpectrum& discrete();
};

json run_groundstate(Context& ctx);
json run_spectrum(Context& ctx);
json run_fgr(Context& ctx);
json run_reduced_ode(Context& ctx);
json run_simulate(Context& ctx);
json run_waveop(Context& ctx);
json run_bench(Context& ctx);

json run_stage(Context& ctx, const std::string& name);
void write_manifest(Context& ctx, const std::vector<std::string>& stages);

struct ReportOutcome {
  bool empty = false;
  bool partial = false;
  std::vector<std::string> warnings;
  json scoreboard;
};

// Reads the stage files in dir and writes the scoreboard, norm tables and a
// plot script. Throws nls::Error(bookkeeping) on mixed config hashes.
ReportOutcome emit_report(const std::filesystem::path& dir);

// Stable order of the pipeline stages.
const std::vector<std::string>& pipeline_stages();

}  // namespace nlscli
