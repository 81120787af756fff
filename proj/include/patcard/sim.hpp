#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "patcard/store.hpp"

#include "json.hpp"

namespace patcard {

//---------------------------------------------------------------------------
// Workload replay: parse each query, enumerate its subqueries, estimate
// each (learned chain and raw heuristic side by side), fetch truth from the
// oracle, observe into the store, and report Q-error percentiles.
//---------------------------------------------------------------------------

struct RunConfig {
  std::string schema_path;
  std::string tables_dir;
  std::string workload_path;
  std::string out_dir;
  StoreConfig store = StoreConfig::defaults();
  bool record_timings = false;  ///< off: latency columns are 0 so replays are byte-stable
  uint64_t truth_budget = 1000000000ull;
  uint32_t cumulative_every = 100;

  nlohmann::json to_json() const;
  static RunConfig from_json(const nlohmann::json& j);
};

/// max(y/yhat, yhat/y) with both sides clamped to >= 1 first.
double q_error(uint64_t truth, uint64_t estimate);

/// Nearest-rank percentile: the ceil(p/100 * n)-th order statistic.
/// Throws EmptyHistory on an empty list.
double percentile(std::vector<double> values, double p);

struct QErrorSummary {
  uint64_t count = 0;
  double p50 = 1, p90 = 1, p95 = 1;
};

QErrorSummary summarize(const std::vector<double>& q_errors);

struct ReplayRow {
  uint32_t query_id = 0;
  uint32_t subquery_id = 0;
  uint32_t n_join = 0;
  PatternHash h1{}, h2{}, h3{};
  int provenance = 0;
  uint64_t estimate = 0;
  uint64_t truth = 0;
  double q_err = 1;
  int64_t est_us = 0;
  int64_t obs_us = 0;
  // sidecar detail
  uint64_t bucket_size = 0;
  std::array<uint64_t, 3> level_rows{};
  double heuristic_estimate = 1;  ///< raw, unadjusted baseline
  double heuristic_q_err = 1;
};

struct SimResult {
  std::vector<ReplayRow> rows;
  int64_t estimate_total_us = 0;
  int64_t observe_total_us = 0;
  int64_t truth_total_us = 0;
  uint64_t queries = 0;
};

/// Replays the workload and writes replay.csv, detail.csv, cumulative.csv
/// and summary.json into cfg.out_dir.
SimResult run_simulation(const RunConfig& cfg);

/// Summary JSON assembled from replay rows (the simulate path and the
/// report verb share this).
nlohmann::json build_summary(const SimResult& sim, const RunConfig& cfg);

/// Recompute detail/summary outputs from an existing replay.csv +
/// detail.csv pair in `run_dir`; writes summary.json there.
void rebuild_report(const std::string& run_dir);

void write_reports(const SimResult& sim, const RunConfig& cfg);

}  // namespace patcard
