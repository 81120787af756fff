#include "patcard.h"

#include <cstdlib>
#include <cstring>
#include <functional>
#include <memory>
#include <string>

#include "patcard/exec.hpp"
#include "patcard/generate.hpp"
#include "patcard/sim.hpp"
#include "patcard/sql.hpp"
#include "patcard/store.hpp"

using namespace patcard;

namespace {

thread_local std::string g_last_error;

int set_error(int code, const std::string& msg) {
  g_last_error = msg;
  return code;
}

/// Maps the exception hierarchy onto boundary status codes.
int guard(const std::function<void()>& body) {
  try {
    body();
    g_last_error.clear();
    return PATCARD_OK;
  } catch (const ParseError& e) {
    return set_error(PATCARD_ERR_PARSE, e.what());
  } catch (const ConfigError& e) {
    return set_error(PATCARD_ERR_CONFIG, e.what());
  } catch (const SchemaError& e) {
    return set_error(PATCARD_ERR_CONFIG, e.what());
  } catch (const IoError& e) {
    return set_error(PATCARD_ERR_IO, e.what());
  } catch (const nlohmann::json::exception& e) {
    return set_error(PATCARD_ERR_PARSE, e.what());
  } catch (const Error& e) {
    return set_error(PATCARD_ERR_RUNTIME, e.what());
  } catch (const std::exception& e) {
    return set_error(PATCARD_ERR_RUNTIME, e.what());
  }
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(::malloc(s.size() + 1));
  if (out) std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

}  // namespace

/// The store owns mutexes and cannot move, so the handle keeps it on the heap.
struct patcard_engine {
  std::unique_ptr<EstimatorStore> store;
};

extern "C" {

const char* patcard_last_error(void) { return g_last_error.c_str(); }

void patcard_free(char* s) { ::free(s); }

int patcard_engine_open(const char* config_json, const char* schema_path,
                        const char* stats_path, patcard_engine** out) {
  if (!schema_path || !out) return set_error(PATCARD_ERR_ARG, "null argument");
  *out = nullptr;
  return guard([&] {
    Schema schema = Schema::load(schema_path);
    StatsSet stats = stats_path ? StatsSet::load(stats_path)
                                : StatsSet::from_schema(schema);
    StoreConfig cfg = StoreConfig::from_json(
        config_json && *config_json ? nlohmann::json::parse(config_json)
                                    : nlohmann::json());
    auto store = std::make_unique<EstimatorStore>(std::move(cfg), std::move(schema),
                                                  std::move(stats));
    *out = new patcard_engine{std::move(store)};
  });
}

void patcard_engine_close(patcard_engine* e) { delete e; }

int patcard_engine_estimate(patcard_engine* e, const char* sql, char** result_json) {
  if (!e || !sql || !result_json) return set_error(PATCARD_ERR_ARG, "null argument");
  *result_json = nullptr;
  return guard([&] {
    QueryDag dag = parse_sql(sql, &e->store->schema());
    std::vector<SubqueryRecord> subs = enumerate_subqueries(dag);
    nlohmann::json out = nlohmann::json::array();
    for (size_t i = 0; i < subs.size(); ++i) {
      PreparedSubquery prep = e->store->prepare(subs[i].dag);
      EstimateResult r = e->store->estimate(prep);
      out.push_back({{"subquery_id", i},
                     {"n_join", prep.n_join},
                     {"h3", hex(prep.levels[2].hash)},
                     {"estimate", r.estimate},
                     {"provenance", provenance_name(r.provenance)},
                     {"bucket_size", r.bucket_size}});
    }
    *result_json = dup_string(out.dump());
  });
}

int patcard_engine_observe(patcard_engine* e, const char* sql,
                           const uint64_t* truths, size_t count) {
  if (!e || !sql || (!truths && count > 0))
    return set_error(PATCARD_ERR_ARG, "null argument");
  return guard([&] {
    QueryDag dag = parse_sql(sql, &e->store->schema());
    std::vector<SubqueryRecord> subs = enumerate_subqueries(dag);
    if (subs.size() != count)
      throw ConfigError("query enumerates " + std::to_string(subs.size()) +
                        " subqueries, got " + std::to_string(count) + " truths");
    for (size_t i = 0; i < subs.size(); ++i) e->store->observe(subs[i].dag, truths[i]);
  });
}

int patcard_engine_snapshot_save(patcard_engine* e, const char* path) {
  if (!e || !path) return set_error(PATCARD_ERR_ARG, "null argument");
  return guard([&] { e->store->save_snapshot(path); });
}

int patcard_engine_snapshot_load(patcard_engine** e, const char* snapshot_path,
                                 const char* schema_path, const char* stats_path) {
  if (!e || !snapshot_path || !schema_path)
    return set_error(PATCARD_ERR_ARG, "null argument");
  *e = nullptr;
  return guard([&] {
    Schema schema = Schema::load(schema_path);
    StatsSet stats = stats_path ? StatsSet::load(stats_path)
                                : StatsSet::from_schema(schema);
    auto store = EstimatorStore::load_snapshot(snapshot_path, std::move(schema),
                                               std::move(stats));
    *e = new patcard_engine{std::move(store)};
  });
}

int patcard_engine_bucket_dump(patcard_engine* e, const char* csv_path) {
  if (!e || !csv_path) return set_error(PATCARD_ERR_ARG, "null argument");
  return guard([&] { e->store->dump_buckets_csv(csv_path); });
}

int patcard_analyze(const char* schema_path, const char* tables_dir,
                    const char* out_path) {
  if (!schema_path || !tables_dir || !out_path)
    return set_error(PATCARD_ERR_ARG, "null argument");
  return guard([&] {
    Schema schema = Schema::load(schema_path);
    Dataset data = load_csv_dir(tables_dir, schema);
    analyze(data).save(out_path);
  });
}

int patcard_generate_dataset(const char* spec_json, const char* out_dir) {
  if (!spec_json || !out_dir) return set_error(PATCARD_ERR_ARG, "null argument");
  return guard([&] {
    generate_dataset_dir(nlohmann::json::parse(spec_json), out_dir);
  });
}

int patcard_generate_workload(const char* spec_json, const char* out_path) {
  if (!spec_json || !out_path) return set_error(PATCARD_ERR_ARG, "null argument");
  return guard([&] {
    generate_workload_file(nlohmann::json::parse(spec_json), out_path);
  });
}

int patcard_simulate(const char* run_config_json) {
  if (!run_config_json) return set_error(PATCARD_ERR_ARG, "null argument");
  return guard([&] {
    RunConfig cfg = RunConfig::from_json(nlohmann::json::parse(run_config_json));
    if (cfg.out_dir.empty()) throw ConfigError("run config needs an output directory");
    SimResult sim = run_simulation(cfg);
    write_reports(sim, cfg);
  });
}

int patcard_report(const char* run_dir) {
  if (!run_dir) return set_error(PATCARD_ERR_ARG, "null argument");
  return guard([&] { rebuild_report(run_dir); });
}

int patcard_print_config(const char* run_config_json, char** merged_json) {
  if (!run_config_json || !merged_json)
    return set_error(PATCARD_ERR_ARG, "null argument");
  *merged_json = nullptr;
  return guard([&] {
    RunConfig cfg = RunConfig::from_json(nlohmann::json::parse(run_config_json));
    *merged_json = dup_string(cfg.to_json().dump(2));
  });
}

}  // extern "C"
