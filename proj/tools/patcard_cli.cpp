/// Command-line driver for the cardinality estimation engine.
///
/// Talks to the engine exclusively through the C API in patcard.h, the same
/// surface an embedding application would use. Verbs:
///
///   analyze       build histogram statistics for a dataset directory
///   gen-data      materialize a synthetic dataset from a generator spec
///   gen-workload  instantiate a query workload from templates
///   simulate      replay a workload with online learning, emit reports
///   report        rebuild summary.json from an existing run directory
///
/// Exit codes: 0 success, 2 configuration/usage error, 3 runtime abort.

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"
#include "patcard.h"

namespace {

//--------------------------------------------------------------------
// status handling
//--------------------------------------------------------------------

/// Collapses the fine-grained API status onto the documented exit codes.
int exit_code(int status) {
  switch (status) {
    case PATCARD_OK:
      return 0;
    case PATCARD_ERR_CONFIG:
    case PATCARD_ERR_PARSE:
    case PATCARD_ERR_ARG:
      return 2;
    default:
      return 3;
  }
}

int finish(int status) {
  if (status != PATCARD_OK) std::fprintf(stderr, "patcard: %s\n", patcard_last_error());
  return exit_code(status);
}

int usage_error(const std::string& msg) {
  std::fprintf(stderr, "patcard: %s\n", msg.c_str());
  return 2;
}

/// Reads a whole file; empty optional-style sentinel is reported by the caller.
bool slurp(const std::string& path, std::string& out) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return false;
  std::ostringstream ss;
  ss << in.rdbuf();
  out = ss.str();
  return true;
}

//--------------------------------------------------------------------
// verbs
//--------------------------------------------------------------------

int run_analyze(const std::string& schema, const std::string& tables,
                const std::string& out) {
  return finish(patcard_analyze(schema.c_str(), tables.c_str(), out.c_str()));
}

int run_gen_data(const std::string& spec_path, const std::string& out_dir) {
  std::string spec;
  if (!slurp(spec_path, spec)) return usage_error("cannot read spec " + spec_path);
  return finish(patcard_generate_dataset(spec.c_str(), out_dir.c_str()));
}

int run_gen_workload(const std::string& spec_path, const std::string& out_path) {
  std::string spec;
  if (!slurp(spec_path, spec)) return usage_error("cannot read spec " + spec_path);
  return finish(patcard_generate_workload(spec.c_str(), out_path.c_str()));
}

struct SimulateArgs {
  std::string schema;
  std::string tables;
  std::string workload;
  std::string config_path;
  std::string out_dir;
  long long seed = -1;
  bool record_timings = false;
  bool print_config = false;
};

/// Folds the command-line flags over the optional config file. Flags win so a
/// single config can drive several runs that differ only in seed or paths.
int run_simulate(const SimulateArgs& a) {
  nlohmann::json cfg = nlohmann::json::object();
  if (!a.config_path.empty()) {
    std::string text;
    if (!slurp(a.config_path, text))
      return usage_error("cannot read config " + a.config_path);
    cfg = nlohmann::json::parse(text, nullptr, false);
    if (cfg.is_discarded())
      return usage_error("config " + a.config_path + " is not valid JSON");
    if (!cfg.is_object())
      return usage_error("config " + a.config_path + " must hold a JSON object");
  }
  if (!a.schema.empty()) cfg["schema"] = a.schema;
  if (!a.tables.empty()) cfg["tables"] = a.tables;
  if (!a.workload.empty()) cfg["workload"] = a.workload;
  if (!a.out_dir.empty()) cfg["out"] = a.out_dir;
  if (a.record_timings) cfg["record_timings"] = true;
  if (a.seed >= 0) {
    if (!cfg.contains("store") || !cfg["store"].is_object())
      cfg["store"] = nlohmann::json::object();
    cfg["store"]["seed"] = static_cast<uint64_t>(a.seed);
  }
  for (const char* key : {"schema", "tables", "workload", "out"}) {
    if (!cfg.contains(key) || cfg[key].get<std::string>().empty())
      return usage_error(std::string("missing required setting: ") + key);
  }
  std::string text = cfg.dump();
  if (a.print_config) {
    char* merged = nullptr;
    int st = patcard_print_config(text.c_str(), &merged);
    if (st == PATCARD_OK && merged) std::printf("%s\n", merged);
    patcard_free(merged);
    return finish(st);
  }
  return finish(patcard_simulate(text.c_str()));
}

int run_report(const std::string& dir) { return finish(patcard_report(dir.c_str())); }

}  // namespace

//--------------------------------------------------------------------
// argument wiring
//--------------------------------------------------------------------

int main(int argc, char** argv) {
  CLI::App app{"online cardinality estimation over query patterns"};
  app.require_subcommand(1);

  std::string schema, tables, out;
  auto* analyze = app.add_subcommand("analyze", "build statistics for a dataset");
  analyze->add_option("--schema", schema, "schema JSON file")->required();
  analyze->add_option("--tables", tables, "directory of table CSVs")->required();
  analyze->add_option("--out", out, "output statistics JSON file")->required();

  std::string spec_path, data_out;
  auto* gen_data = app.add_subcommand("gen-data", "generate a synthetic dataset");
  gen_data->add_option("--spec", spec_path, "dataset spec JSON file")->required();
  gen_data->add_option("--out", data_out, "output directory")->required();

  std::string wl_spec, wl_out;
  auto* gen_wl = app.add_subcommand("gen-workload", "instantiate a query workload");
  gen_wl->add_option("--spec", wl_spec, "workload spec JSON file")->required();
  gen_wl->add_option("--out", wl_out, "output SQL file")->required();

  SimulateArgs sim;
  auto* simulate = app.add_subcommand("simulate", "replay a workload with learning");
  simulate->add_option("--schema", sim.schema, "schema JSON file");
  simulate->add_option("--tables", sim.tables, "directory of table CSVs");
  simulate->add_option("--workload", sim.workload, "semicolon-separated SQL file");
  simulate->add_option("--config", sim.config_path, "run config JSON file");
  simulate->add_option("--out", sim.out_dir, "output directory for reports");
  simulate->add_option("--seed", sim.seed, "override the estimator RNG seed");
  simulate->add_flag("--record-timings", sim.record_timings,
                     "include wall-clock timings in reports");
  simulate->add_flag("--print-config", sim.print_config,
                     "print the merged config and exit without running");

  std::string report_dir;
  auto* report = app.add_subcommand("report", "rebuild summary.json from run output");
  report->add_option("--dir", report_dir, "run directory with replay CSVs")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  if (analyze->parsed()) return run_analyze(schema, tables, out);
  if (gen_data->parsed()) return run_gen_data(spec_path, data_out);
  if (gen_wl->parsed()) return run_gen_workload(wl_spec, wl_out);
  if (simulate->parsed()) return run_simulate(sim);
  if (report->parsed()) return run_report(report_dir);
  return usage_error("no verb given");
}
