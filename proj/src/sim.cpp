#include "patcard/sim.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>

#include "patcard/exec.hpp"
#include "patcard/sql.hpp"

namespace patcard {

//---------------------------------------------------------------------------
// Config
//---------------------------------------------------------------------------

nlohmann::json RunConfig::to_json() const {
  nlohmann::json j;
  j["schema"] = schema_path;
  j["tables"] = tables_dir;
  j["workload"] = workload_path;
  j["out"] = out_dir;
  j["store"] = store.to_json();
  j["record_timings"] = record_timings;
  j["truth_budget"] = truth_budget;
  j["cumulative_every"] = cumulative_every;
  return j;
}

RunConfig RunConfig::from_json(const nlohmann::json& j) {
  RunConfig c;
  if (!j.is_object()) throw ConfigError("run config must be a JSON object");
  c.schema_path = j.value("schema", "");
  c.tables_dir = j.value("tables", "");
  c.workload_path = j.value("workload", "");
  c.out_dir = j.value("out", "");
  c.store = StoreConfig::from_json(j.contains("store") ? j["store"] : nlohmann::json());
  c.record_timings = j.value("record_timings", false);
  c.truth_budget = j.value("truth_budget", 1000000000ull);
  c.cumulative_every = j.value("cumulative_every", 100u);
  if (c.cumulative_every == 0) throw ConfigError("cumulative_every must be positive");
  return c;
}

//---------------------------------------------------------------------------
// Metrics
//---------------------------------------------------------------------------

double q_error(uint64_t truth, uint64_t estimate) {
  const double y = truth < 1 ? 1.0 : static_cast<double>(truth);
  const double e = estimate < 1 ? 1.0 : static_cast<double>(estimate);
  return y > e ? y / e : e / y;
}

double percentile(std::vector<double> values, double p) {
  if (values.empty()) throw EmptyHistory("percentile of an empty list");
  if (p < 0 || p > 100) throw ConfigError("percentile p must lie in [0,100]");
  std::sort(values.begin(), values.end());
  size_t rank = static_cast<size_t>(std::ceil(p / 100.0 * static_cast<double>(values.size())));
  if (rank < 1) rank = 1;
  return values[rank - 1];
}

QErrorSummary summarize(const std::vector<double>& q_errors) {
  QErrorSummary s;
  s.count = q_errors.size();
  if (q_errors.empty()) return s;
  s.p50 = percentile(q_errors, 50);
  s.p90 = percentile(q_errors, 90);
  s.p95 = percentile(q_errors, 95);
  return s;
}

//---------------------------------------------------------------------------
// Replay
//---------------------------------------------------------------------------

namespace {

int64_t now_us() {
  return std::chrono::duration_cast<std::chrono::microseconds>(
             std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

double clamped(double v) { return v < 1.0 ? 1.0 : v; }

double q_error_f(uint64_t truth, double estimate) {
  const double y = truth < 1 ? 1.0 : static_cast<double>(truth);
  const double e = clamped(estimate);
  return y > e ? y / e : e / y;
}

}  // namespace

SimResult run_simulation(const RunConfig& cfg) {
  Schema schema = Schema::load(cfg.schema_path);
  Dataset data = load_csv_dir(cfg.tables_dir, schema);
  StatsSet stats = analyze(data);
  EstimatorStore store(cfg.store, schema, stats);

  const std::string workload = read_file(cfg.workload_path);
  std::vector<std::string> queries = split_statements(workload);

  SimResult sim;
  TruthConfig tc;
  tc.step_budget = cfg.truth_budget;

  for (uint32_t qid = 0; qid < queries.size(); ++qid) {
    try {
      QueryDag dag = parse_sql(queries[qid], &schema);
      std::vector<SubqueryRecord> subs = enumerate_subqueries(dag);
      for (uint32_t sid = 0; sid < subs.size(); ++sid) {
        const QueryDag& sq = subs[sid].dag;
        PreparedSubquery prep = store.prepare(sq);

        const int64_t t0 = cfg.record_timings ? now_us() : 0;
        EstimateResult est = store.estimate(prep);
        const int64_t t1 = cfg.record_timings ? now_us() : 0;
        const uint64_t truth = true_cardinality(sq, data, tc);
        const int64_t t2 = cfg.record_timings ? now_us() : 0;
        store.observe(prep, truth);
        const int64_t t3 = cfg.record_timings ? now_us() : 0;

        ReplayRow row;
        row.query_id = qid;
        row.subquery_id = sid;
        row.n_join = prep.n_join;
        row.h1 = prep.levels[0].hash;
        row.h2 = prep.levels[1].hash;
        row.h3 = prep.levels[2].hash;
        row.provenance = est.provenance;
        row.estimate = est.estimate;
        row.truth = truth;
        row.q_err = q_error(truth, est.estimate);
        row.est_us = t1 - t0;
        row.obs_us = t3 - t2;
        row.bucket_size = est.bucket_size;
        row.level_rows = est.level_rows;
        row.heuristic_estimate = est.heuristic_raw;
        row.heuristic_q_err = q_error_f(truth, est.heuristic_raw);
        sim.rows.push_back(std::move(row));

        sim.estimate_total_us += t1 - t0;
        sim.truth_total_us += t2 - t1;
        sim.observe_total_us += t3 - t2;
      }
    } catch (const Error& e) {
      throw Error(std::string(e.what()) + "\n  while replaying query " +
                  std::to_string(qid) + ": " + queries[qid]);
    }
    ++sim.queries;
  }
  return sim;
}

//---------------------------------------------------------------------------
// Reports
//---------------------------------------------------------------------------

namespace {

std::vector<double> collect(const std::vector<ReplayRow>& rows, bool heuristic,
                            uint32_t first_query = 0) {
  std::vector<double> out;
  out.reserve(rows.size());
  for (const ReplayRow& r : rows)
    if (r.query_id >= first_query) out.push_back(heuristic ? r.heuristic_q_err : r.q_err);
  return out;
}

nlohmann::json summary_json(const QErrorSummary& s) {
  nlohmann::json j;
  j["count"] = s.count;
  if (s.count > 0) {
    j["p50"] = fmt_double(s.p50);
    j["p90"] = fmt_double(s.p90);
    j["p95"] = fmt_double(s.p95);
  }
  return j;
}

const char* bucket_class(uint64_t size) {
  if (size == 0) return "0";
  if (size < 10) return "1-9";
  if (size < 100) return "10-99";
  if (size < 1000) return "100-999";
  return "1000+";
}

double median(std::vector<double> v) { return percentile(std::move(v), 50); }

}  // namespace

nlohmann::json build_summary(const SimResult& sim, const RunConfig& cfg) {
  nlohmann::json out;
  out["config"] = cfg.to_json();
  out["queries"] = sim.queries;
  out["subqueries"] = sim.rows.size();

  out["learned"] = summary_json(summarize(collect(sim.rows, false)));
  out["heuristic"] = summary_json(summarize(collect(sim.rows, true)));

  // per join count
  std::map<uint32_t, std::vector<double>> by_join, by_join_h;
  for (const ReplayRow& r : sim.rows) {
    by_join[r.n_join].push_back(r.q_err);
    by_join_h[r.n_join].push_back(r.heuristic_q_err);
  }
  out["by_join"] = nlohmann::json::object();
  for (const auto& [n, v] : by_join) {
    nlohmann::json j;
    j["learned"] = summary_json(summarize(v));
    j["heuristic"] = summary_json(summarize(by_join_h[n]));
    out["by_join"][std::to_string(n)] = std::move(j);
  }

  // per provenance
  std::map<int, std::vector<double>> by_prov;
  for (const ReplayRow& r : sim.rows) by_prov[r.provenance].push_back(r.q_err);
  out["by_provenance"] = nlohmann::json::object();
  for (const auto& [lvl, v] : by_prov)
    out["by_provenance"][provenance_name(lvl)] = summary_json(summarize(v));

  // online improvement: median q-error by bucket-size class at estimate time
  std::map<std::string, std::vector<double>> by_class;
  for (const ReplayRow& r : sim.rows) by_class[bucket_class(r.bucket_size)].push_back(r.q_err);
  out["by_bucket_class"] = nlohmann::json::object();
  for (const auto& [cls, v] : by_class) {
    out["by_bucket_class"][cls] = {{"count", v.size()},
                                   {"median", fmt_double(median(v))}};
  }

  // reliance shift: learned-provenance fraction per replay decile
  out["reliance_deciles"] = nlohmann::json::array();
  const size_t n = sim.rows.size();
  for (size_t d = 0; d < 10 && n > 0; ++d) {
    const size_t lo = d * n / 10, hi = (d + 1) * n / 10;
    if (hi == lo) {
      out["reliance_deciles"].push_back("0");
      continue;
    }
    size_t learned = 0;
    for (size_t i = lo; i < hi; ++i)
      if (sim.rows[i].provenance > 0) ++learned;
    out["reliance_deciles"].push_back(
        fmt_double(static_cast<double>(learned) / static_cast<double>(hi - lo)));
  }

  out["timing"] = {{"estimate_total_us", sim.estimate_total_us},
                   {"observe_total_us", sim.observe_total_us},
                   {"truth_total_us", sim.truth_total_us}};
  return out;
}

void write_reports(const SimResult& sim, const RunConfig& cfg) {
  std::error_code ec;
  std::filesystem::create_directories(cfg.out_dir, ec);
  if (ec) throw IoError("cannot create directory: " + cfg.out_dir);
  {
    CsvWriter w(cfg.out_dir + "/replay.csv");
    w.row({"query_id", "subquery_id", "n_join", "h1", "h2", "h3", "provenance",
           "estimate", "truth", "q_error", "est_us", "obs_us"});
    for (const ReplayRow& r : sim.rows) {
      w.row({std::to_string(r.query_id), std::to_string(r.subquery_id),
             std::to_string(r.n_join), hex(r.h1), hex(r.h2), hex(r.h3),
             provenance_name(r.provenance), std::to_string(r.estimate),
             std::to_string(r.truth), fmt_double(r.q_err), std::to_string(r.est_us),
             std::to_string(r.obs_us)});
    }
    w.flush_close();
  }
  {
    CsvWriter w(cfg.out_dir + "/detail.csv");
    w.row({"query_id", "subquery_id", "n_join", "provenance", "bucket_size",
           "l1_rows", "l2_rows", "l3_rows", "estimate", "heuristic_estimate",
           "truth", "q_error", "heuristic_q_error"});
    for (const ReplayRow& r : sim.rows) {
      w.row({std::to_string(r.query_id), std::to_string(r.subquery_id),
             std::to_string(r.n_join), provenance_name(r.provenance),
             std::to_string(r.bucket_size), std::to_string(r.level_rows[0]),
             std::to_string(r.level_rows[1]), std::to_string(r.level_rows[2]),
             std::to_string(r.estimate), fmt_double(r.heuristic_estimate),
             std::to_string(r.truth), fmt_double(r.q_err),
             fmt_double(r.heuristic_q_err)});
    }
    w.flush_close();
  }
  {
    // cumulative percentiles, one row per cfg.cumulative_every queries
    CsvWriter w(cfg.out_dir + "/cumulative.csv");
    w.row({"queries", "subqueries", "learned_p50", "learned_p90", "learned_p95",
           "heuristic_p50", "heuristic_p90", "heuristic_p95"});
    std::vector<double> le, he;
    size_t at = 0;
    for (uint64_t q = 1; q <= sim.queries; ++q) {
      while (at < sim.rows.size() && sim.rows[at].query_id < q) {
        le.push_back(sim.rows[at].q_err);
        he.push_back(sim.rows[at].heuristic_q_err);
        ++at;
      }
      if (q % cfg.cumulative_every == 0 || q == sim.queries) {
        if (le.empty()) {
          w.row({std::to_string(q), "0", "", "", "", "", "", ""});
        } else {
          QErrorSummary ls = summarize(le), hs = summarize(he);
          w.row({std::to_string(q), std::to_string(le.size()), fmt_double(ls.p50),
                 fmt_double(ls.p90), fmt_double(ls.p95), fmt_double(hs.p50),
                 fmt_double(hs.p90), fmt_double(hs.p95)});
        }
      }
    }
    w.flush_close();
  }
  write_file(cfg.out_dir + "/summary.json", build_summary(sim, cfg).dump(2) + "\n");
}

//---------------------------------------------------------------------------
// report verb: rebuild summary.json from the CSVs
//---------------------------------------------------------------------------

namespace {

uint64_t cell_u64(const std::string& s, const char* what) {
  int64_t v;
  if (!parse_i64(s, v) || v < 0) throw IoError(std::string("bad ") + what + ": " + s);
  return static_cast<uint64_t>(v);
}

double cell_f64(const std::string& s, const char* what) {
  double v;
  if (!parse_f64(s, v)) throw IoError(std::string("bad ") + what + ": " + s);
  return v;
}

int provenance_from_name(const std::string& s) {
  for (int lvl = 0; lvl <= 3; ++lvl)
    if (s == provenance_name(lvl)) return lvl;
  throw IoError("bad provenance: " + s);
}

}  // namespace

void rebuild_report(const std::string& run_dir) {
  std::vector<std::vector<std::string>> replay = read_csv(run_dir + "/replay.csv");
  std::vector<std::vector<std::string>> detail = read_csv(run_dir + "/detail.csv");
  if (replay.size() < 1 || detail.size() < 1 || replay.size() != detail.size())
    throw IoError("replay.csv and detail.csv do not align");

  nlohmann::json saved;
  try {
    saved = nlohmann::json::parse(read_file(run_dir + "/summary.json"));
  } catch (const Error&) {
    saved = nlohmann::json::object();
  }

  SimResult sim;
  uint64_t max_qid = 0;
  for (size_t i = 1; i < replay.size(); ++i) {
    const auto& rr = replay[i];
    const auto& dr = detail[i];
    if (rr.size() != 12 || dr.size() != 13) throw IoError("short row in replay logs");
    ReplayRow row;
    row.query_id = static_cast<uint32_t>(cell_u64(rr[0], "query_id"));
    row.subquery_id = static_cast<uint32_t>(cell_u64(rr[1], "subquery_id"));
    row.n_join = static_cast<uint32_t>(cell_u64(rr[2], "n_join"));
    row.provenance = provenance_from_name(rr[6]);
    row.estimate = cell_u64(rr[7], "estimate");
    row.truth = cell_u64(rr[8], "truth");
    row.q_err = cell_f64(rr[9], "q_error");
    row.est_us = static_cast<int64_t>(cell_u64(rr[10], "est_us"));
    row.obs_us = static_cast<int64_t>(cell_u64(rr[11], "obs_us"));
    row.bucket_size = cell_u64(dr[4], "bucket_size");
    row.level_rows = {cell_u64(dr[5], "l1_rows"), cell_u64(dr[6], "l2_rows"),
                      cell_u64(dr[7], "l3_rows")};
    row.heuristic_estimate = cell_f64(dr[9], "heuristic_estimate");
    row.heuristic_q_err = cell_f64(dr[12], "heuristic_q_error");
    sim.estimate_total_us += row.est_us;
    sim.observe_total_us += row.obs_us;
    if (row.query_id > max_qid) max_qid = row.query_id;
    sim.rows.push_back(std::move(row));
  }
  sim.queries = sim.rows.empty() ? 0 : max_qid + 1;

  RunConfig cfg;
  if (saved.contains("config")) cfg = RunConfig::from_json(saved["config"]);
  nlohmann::json out = build_summary(sim, cfg);
  if (saved.contains("timing"))
    out["timing"] = saved["timing"];  // totals include truth time the CSVs lack
  write_file(run_dir + "/summary.json", out.dump(2) + "\n");
}

}  // namespace patcard
