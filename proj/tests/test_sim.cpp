#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "patcard/exec.hpp"
#include "patcard/generate.hpp"
#include "patcard/sim.hpp"
#include "patcard/sql.hpp"
#include "patcard/util.hpp"

using namespace patcard;
using nlohmann::json;

namespace {

/// One spec exercising every column kind.
json kitchen_sink_spec() {
  return json::parse(R"({
    "seed": 7,
    "tables": {
      "p": {
        "rows": 500,
        "columns": {
          "id":  {"kind": "serial"},
          "u":   {"kind": "uniform_int", "min": 0, "max": 9},
          "f":   {"kind": "uniform_float", "min": 0.0, "max": 1.0},
          "ln":  {"kind": "lognormal", "mu": 2.0, "sigma": 0.5, "round": true},
          "cat": {"kind": "choice", "values": ["x", "y", "z"], "weights": [8, 1, 1]},
          "z":   {"kind": "zipf", "n": 10, "s": 1.0},
          "d":   {"kind": "date_range", "min": "2024-01-01", "max": "2024-12-31"},
          "s":   {"kind": "string_pool", "pool": 5, "len": 3},
          "v2":  {"kind": "derived", "source": "u", "mode": "copy"},
          "aff": {"kind": "derived", "source": "u", "mode": "affine", "scale": 2, "offset": 1},
          "b":   {"kind": "derived", "source": "u", "mode": "bucket", "width": 5}
        }
      },
      "c": {
        "rows": 800,
        "columns": {
          "pid": {"kind": "fk", "table": "p", "column": "id", "skew": 1.0},
          "w":   {"kind": "uniform_int", "min": 0, "max": 4}
        }
      }
    }
  })");
}

std::map<int64_t, uint64_t> int_counts(const Column& col) {
  std::map<int64_t, uint64_t> m;
  for (int64_t v : col.ints) ++m[v];
  return m;
}

struct TempDir {
  std::string path;
  explicit TempDir(const std::string& name) : path("/tmp/patcard_test_sim_" + name) {
    std::filesystem::remove_all(path);
  }
  ~TempDir() { std::filesystem::remove_all(path); }
};

}  // namespace

//---------------------------------------------------------------------------
// metrics
//---------------------------------------------------------------------------

TEST_CASE("q-error is symmetric and clamps both sides to one") {
  CHECK(q_error(100, 50) == 2.0);
  CHECK(q_error(50, 100) == 2.0);
  CHECK(q_error(3, 3) == 1.0);
  CHECK(q_error(0, 0) == 1.0);
  CHECK(q_error(0, 5) == 5.0);
  CHECK(q_error(7, 0) == 7.0);
}

TEST_CASE("percentile follows the nearest-rank rule") {
  std::vector<double> oneto100;
  for (int i = 1; i <= 100; ++i) oneto100.push_back(i);
  CHECK(percentile(oneto100, 50) == 50.0);
  CHECK(percentile(oneto100, 90) == 90.0);
  CHECK(percentile(oneto100, 100) == 100.0);
  CHECK(percentile(oneto100, 0) == 1.0);  // rank clamps up to the first value

  CHECK(percentile({1, 2, 3, 4}, 90) == 4.0);   // ceil(3.6) = 4
  CHECK(percentile({1, 2, 3, 4}, 50) == 2.0);   // ceil(2.0) = 2
  CHECK(percentile({1, 2, 3, 4}, 51) == 3.0);   // ceil(2.04) = 3
  CHECK(percentile({7}, 1) == 7.0);
  CHECK(percentile({7}, 99) == 7.0);
  CHECK(percentile({3, 1, 2}, 50) == 2.0);  // input order is irrelevant

  CHECK_THROWS_AS(percentile({}, 50), EmptyHistory);
  CHECK_THROWS_AS(percentile({1.0}, 101), ConfigError);
  CHECK_THROWS_AS(percentile({1.0}, -1), ConfigError);
}

TEST_CASE("summaries carry the three standard percentiles") {
  QErrorSummary empty = summarize({});
  CHECK(empty.count == 0);
  CHECK(empty.p50 == 1.0);

  std::vector<double> v;
  for (int i = 1; i <= 10; ++i) v.push_back(i);
  QErrorSummary s = summarize(v);
  CHECK(s.count == 10);
  CHECK(s.p50 == 5.0);
  CHECK(s.p90 == 9.0);
  CHECK(s.p95 == 10.0);
}

//---------------------------------------------------------------------------
// dataset generation
//---------------------------------------------------------------------------

TEST_CASE("every column kind produces the right values and stats") {
  GeneratedData g = generate_dataset(kitchen_sink_spec());
  const Table& p = *g.data.find("p");
  const Table& c = *g.data.find("c");
  REQUIRE(p.rows == 500);
  REQUIRE(c.rows == 800);
  for (const Column& col : p.cols)
    CHECK(std::max({col.ints.size(), col.floats.size(), col.strs.size()}) == 500);

  const Column& id = *p.find("id");
  CHECK(id.type == ColumnType::Int);
  for (size_t i = 0; i < 500; ++i) CHECK(id.ints[i] == static_cast<int64_t>(i) + 1);

  const Column& u = *p.find("u");
  std::map<int64_t, uint64_t> uc = int_counts(u);
  CHECK(uc.size() == 10);
  for (const auto& [v, n] : uc) {
    CHECK(v >= 0);
    CHECK(v <= 9);
    CHECK(n >= 25);  // 500 draws over 10 values: expect about 50 each
    CHECK(n <= 85);
  }

  const Column& f = *p.find("f");
  CHECK(f.type == ColumnType::Float);
  for (double v : f.floats) {
    CHECK(v >= 0.0);
    CHECK(v < 1.0);
  }

  const Column& ln = *p.find("ln");
  CHECK(ln.type == ColumnType::Int);  // round collapses to integers
  for (int64_t v : ln.ints) CHECK(v >= 0);

  const Column& cat = *p.find("cat");
  CHECK(cat.type == ColumnType::String);
  uint64_t xs = 0;
  for (const std::string& v : cat.strs) {
    CHECK((v == "x" || v == "y" || v == "z"));
    if (v == "x") ++xs;
  }
  CHECK(xs > 330);  // weight 8 of 10

  const Column& z = *p.find("z");
  std::map<int64_t, uint64_t> zc = int_counts(z);
  for (const auto& [v, n] : zc) {
    CHECK(v >= 1);
    CHECK(v <= 10);
  }
  // rank 1 holds 1/H_10 = 34% of the mass
  CHECK(zc[1] > 125);
  CHECK(zc[1] < 216);
  CHECK(zc[1] > zc[10]);

  const Column& d = *p.find("d");
  CHECK(d.type == ColumnType::Date);
  for (int64_t v : d.ints) {
    CHECK(v >= parse_date("2024-01-01"));
    CHECK(v <= parse_date("2024-12-31"));
  }

  const Column& s = *p.find("s");
  std::set<std::string> pool(s.strs.begin(), s.strs.end());
  CHECK(pool.size() <= 5);
  for (const std::string& w : pool) {
    CHECK(w.size() == 3);
    for (char ch : w) {
      CHECK(ch >= 'a');
      CHECK(ch <= 'z');
    }
  }

  // derived columns track their source row by row
  const Column& v2 = *p.find("v2");
  CHECK(v2.ints == u.ints);
  const Column& aff = *p.find("aff");
  CHECK(aff.type == ColumnType::Int);
  for (size_t i = 0; i < 500; ++i) CHECK(aff.ints[i] == 2 * u.ints[i] + 1);
  const Column& b = *p.find("b");
  for (size_t i = 0; i < 500; ++i)
    CHECK(b.ints[i] == static_cast<int64_t>(std::floor(u.ints[i] / 5.0)));

  // skewed foreign keys favor the first parent rows
  const Column& pid = *c.find("pid");
  std::map<int64_t, uint64_t> pc = int_counts(pid);
  for (const auto& [v, n] : pc) {
    CHECK(v >= 1);
    CHECK(v <= 500);
  }
  int64_t top = 0;
  uint64_t top_n = 0;
  for (const auto& [v, n] : pc)
    if (n > top_n) top = v, top_n = n;
  CHECK(top == 1);  // zipf rank 1 maps to the first key
  CHECK(top_n > 60);
  CHECK(top_n < 200);

  // the emitted schema reports exact values
  const ColumnInfo& su = g.schema.tables.at("p").columns.at("u");
  CHECK(su.num_uniques == 10);
  CHECK(su.min_num == 0.0);
  CHECK(su.max_num == 9.0);
  CHECK(g.schema.tables.at("p").table_size == 500);
  const ColumnInfo& sd = g.schema.tables.at("p").columns.at("d");
  CHECK(sd.min_str == format_date(*std::min_element(d.ints.begin(), d.ints.end())));
  const ColumnInfo& scat = g.schema.tables.at("p").columns.at("cat");
  CHECK(scat.min_str == "x");
  CHECK(scat.max_str == "z");
}

TEST_CASE("generation is deterministic and columns have private streams") {
  json spec = kitchen_sink_spec();
  GeneratedData a = generate_dataset(spec);
  GeneratedData b = generate_dataset(spec);
  CHECK(a.data.find("p")->find("u")->ints == b.data.find("p")->find("u")->ints);
  CHECK(a.data.find("p")->find("f")->floats == b.data.find("p")->find("f")->floats);
  CHECK(a.data.find("c")->find("pid")->ints == b.data.find("c")->find("pid")->ints);

  // adding a column leaves every other stream untouched
  spec["tables"]["p"]["columns"]["extra"] = {{"kind", "uniform_int"}, {"min", 0}, {"max", 99}};
  GeneratedData wider = generate_dataset(spec);
  CHECK(wider.data.find("p")->find("u")->ints == a.data.find("p")->find("u")->ints);
  CHECK(wider.data.find("p")->find("f")->floats == a.data.find("p")->find("f")->floats);

  // a different seed moves every stream
  spec = kitchen_sink_spec();
  spec["seed"] = 8;
  GeneratedData other = generate_dataset(spec);
  CHECK(other.data.find("p")->find("u")->ints != a.data.find("p")->find("u")->ints);
}

TEST_CASE("dataset specs are validated") {
  auto tables = [](const json& cols) {
    json s;
    s["tables"]["t"]["rows"] = 10;
    s["tables"]["t"]["columns"] = cols;
    return s;
  };
  CHECK_THROWS_AS(generate_dataset(json::parse(R"({"seed": 1})")), ConfigError);
  CHECK_THROWS_AS(generate_dataset(tables(json::parse(
                      R"({"a": {"kind": "warp"}})"))),
                  ConfigError);
  CHECK_THROWS_AS(generate_dataset(tables(json::parse(
                      R"({"a": {"kind": "uniform_int", "min": 5, "max": 1}})"))),
                  ConfigError);
  CHECK_THROWS_AS(generate_dataset(tables(json::parse(
                      R"({"a": {"kind": "choice", "values": []}})"))),
                  ConfigError);
  CHECK_THROWS_AS(generate_dataset(tables(json::parse(
                      R"({"a": {"kind": "choice", "values": [1, 2], "weights": [1]}})"))),
                  ConfigError);
  CHECK_THROWS_AS(generate_dataset(tables(json::parse(
                      R"({"a": {"kind": "zipf", "n": 0}})"))),
                  ConfigError);
  CHECK_THROWS_AS(generate_dataset(tables(json::parse(
                      R"({"a": {"kind": "string_pool", "pool": 0}})"))),
                  ConfigError);
  // derived cycles and dangling sources
  CHECK_THROWS_AS(generate_dataset(tables(json::parse(
                      R"({"a": {"kind": "derived", "source": "b"},
                          "b": {"kind": "derived", "source": "a"}})"))),
                  ConfigError);
  CHECK_THROWS_AS(generate_dataset(tables(json::parse(
                      R"({"a": {"kind": "derived", "source": "nope"}})"))),
                  ConfigError);
  // foreign keys must reference generated integer keys
  CHECK_THROWS_AS(generate_dataset(json::parse(R"({
      "tables": {
        "t1": {"rows": 5, "columns": {"k": {"kind": "fk", "table": "t2", "column": "k"}}},
        "t2": {"rows": 5, "columns": {"k": {"kind": "fk", "table": "t1", "column": "k"}}}
      }})")),
                  ConfigError);
}

//---------------------------------------------------------------------------
// workload generation
//---------------------------------------------------------------------------

TEST_CASE("workloads draw parameters and interleave templates") {
  json spec = json::parse(R"({
    "seed": 3,
    "queries_per_template": 10,
    "templates": [
      {"name": "lt", "sql": "SELECT * FROM p WHERE p.u < {lo}",
       "params": {"lo": {"kind": "uniform_int", "min": 1, "max": 9}}},
      {"name": "mix", "sql": "SELECT * FROM p WHERE p.cat = {c} AND p.f < {f}",
       "count": 8,
       "params": {"c": {"kind": "choice_string", "values": ["o'brien"]},
                  "f": {"kind": "uniform_float", "min": 0.0, "max": 1.0}}},
      {"name": "dt", "sql": "SELECT * FROM p WHERE p.d < {dd}",
       "count": 4,
       "params": {"dd": {"kind": "uniform_date", "min": "2024-02-01", "max": "2024-11-30"}}}
    ]
  })");
  std::vector<std::string> wl = generate_workload(spec);
  REQUIRE(wl.size() == 22);
  CHECK(wl == generate_workload(spec));  // deterministic

  size_t mix_seen = 0, date_seen = 0;
  for (const std::string& q : wl) {
    CHECK_NOTHROW(parse_sql(q));
    if (q.find("p.cat") != std::string::npos) {
      ++mix_seen;
      // embedded quote doubled on the way out
      CHECK(q.find("'o''brien'") != std::string::npos);
    }
    if (q.find("p.d <") != std::string::npos) {
      ++date_seen;
      CHECK(q.find("'2024-") != std::string::npos);
    }
  }
  CHECK(mix_seen == 8);
  CHECK(date_seen == 4);

  // the shuffle interleaves: not all same-template queries stay adjacent
  size_t first_mix = wl.size(), last_lt = 0;
  for (size_t i = 0; i < wl.size(); ++i) {
    if (wl[i].find("p.cat") != std::string::npos) first_mix = std::min(first_mix, i);
    if (wl[i].find("p.u <") != std::string::npos) last_lt = i;
  }
  CHECK(first_mix < last_lt);

  // file output round-trips through the statement splitter
  const std::string path = "/tmp/patcard_test_sim_wl.sql";
  generate_workload_file(spec, path);
  const std::string text = read_file(path);
  CHECK(text.substr(text.size() - 2) == ";\n");
  std::vector<std::string> stmts = split_statements(text);
  REQUIRE(stmts.size() == wl.size());
  for (size_t i = 0; i < wl.size(); ++i) CHECK(stmts[i] == wl[i] + ";");
  std::remove(path.c_str());
}

TEST_CASE("workload specs are validated") {
  CHECK_THROWS_AS(generate_workload(json::parse(R"({"seed": 1})")), ConfigError);
  auto one = [](const std::string& sql, const json& params) {
    json s;
    s["templates"] = json::array();
    s["templates"].push_back({{"name", "t"}, {"sql", sql}, {"params", params}});
    return s;
  };
  CHECK_THROWS_AS(generate_workload(one("SELECT * FROM t WHERE t.a < {x}", json::object())),
                  ConfigError);
  CHECK_THROWS_AS(generate_workload(one("SELECT * FROM t WHERE t.a < {x",
                                        json::parse(R"({"x": {"kind": "uniform_int",
                                                             "min": 0, "max": 1}})"))),
                  ConfigError);
  CHECK_THROWS_AS(generate_workload(one("SELECT * FROM t WHERE t.a < {x}",
                                        json::parse(R"({"x": {"kind": "gaussian"}})"))),
                  ConfigError);
  CHECK_THROWS_AS(generate_workload(one("SELECT * FROM t",
                                        json::parse(R"({"x": {"kind": "choice_int",
                                                             "values": []}})"))),
                  ConfigError);
}

//---------------------------------------------------------------------------
// end-to-end replay
//---------------------------------------------------------------------------

namespace {

/// Small two-table world with joins, written to disk for the replay tests.
json replay_dataset_spec() {
  return json::parse(R"({
    "seed": 11,
    "tables": {
      "p": {
        "rows": 120,
        "columns": {
          "id":  {"kind": "serial"},
          "u":   {"kind": "uniform_int", "min": 0, "max": 9},
          "cat": {"kind": "choice", "values": ["x", "y", "z"], "weights": [6, 3, 1]}
        }
      },
      "c": {
        "rows": 200,
        "columns": {
          "pid": {"kind": "fk", "table": "p", "column": "id", "skew": 0.8},
          "w":   {"kind": "uniform_int", "min": 0, "max": 4}
        }
      }
    }
  })");
}

json replay_workload_spec() {
  return json::parse(R"({
    "seed": 5,
    "templates": [
      {"name": "scan", "sql": "SELECT * FROM p WHERE p.u < {lo}", "count": 6,
       "params": {"lo": {"kind": "uniform_int", "min": 1, "max": 9}}},
      {"name": "join", "count": 6,
       "sql": "SELECT * FROM p, c WHERE p.id = c.pid AND c.w = {w}",
       "params": {"w": {"kind": "choice_int", "values": [0, 1, 2, 3, 4]}}},
      {"name": "two", "count": 4,
       "sql": "SELECT * FROM p WHERE p.cat = {c} AND p.u < {lo}",
       "params": {"c": {"kind": "choice_string", "values": ["x", "y", "z"]},
                  "lo": {"kind": "uniform_int", "min": 2, "max": 8}}}
    ]
  })");
}

}  // namespace

TEST_CASE("a replay logs every subquery faithfully and repeats byte for byte") {
  TempDir dir("replay");
  const std::string data_dir = dir.path + "/data";
  const std::string out_dir = dir.path + "/run";
  generate_dataset_dir(replay_dataset_spec(), data_dir);
  generate_workload_file(replay_workload_spec(), dir.path + "/wl.sql");

  RunConfig cfg;
  cfg.schema_path = data_dir + "/schema.json";
  cfg.tables_dir = data_dir;
  cfg.workload_path = dir.path + "/wl.sql";
  cfg.out_dir = out_dir;
  cfg.cumulative_every = 5;

  SimResult sim = run_simulation(cfg);
  write_reports(sim, cfg);
  CHECK(sim.queries == 16);

  // independent accounting: every query contributes its subquery count
  Schema schema = Schema::load(cfg.schema_path);
  Dataset data = load_csv_dir(cfg.tables_dir, schema);
  std::vector<std::string> queries = split_statements(read_file(cfg.workload_path));
  REQUIRE(queries.size() == 16);
  size_t expected_rows = 0;
  for (const std::string& q : queries)
    expected_rows += enumerate_subqueries(parse_sql(q, &schema)).size();
  CHECK(sim.rows.size() == expected_rows);

  // spot-check the first replayed subquery against a fresh derivation
  {
    EstimatorStore fresh(cfg.store, schema, analyze(data));
    std::vector<SubqueryRecord> subs = enumerate_subqueries(parse_sql(queries[0], &schema));
    PreparedSubquery prep = fresh.prepare(subs[0].dag);
    const ReplayRow& r0 = sim.rows[0];
    CHECK(r0.query_id == 0);
    CHECK(r0.subquery_id == 0);
    CHECK(r0.h3 == prep.levels[2].hash);
    CHECK(r0.h1 == prep.levels[0].hash);
    CHECK(r0.n_join == prep.n_join);
    CHECK(r0.truth == true_cardinality(subs[0].dag, data));
    CHECK(r0.q_err == q_error(r0.truth, r0.estimate));
    CHECK(r0.est_us == 0);  // timings off by default
  }

  // csv shape
  std::vector<std::vector<std::string>> replay = read_csv(out_dir + "/replay.csv");
  std::vector<std::vector<std::string>> detail = read_csv(out_dir + "/detail.csv");
  REQUIRE(replay.size() == sim.rows.size() + 1);
  REQUIRE(detail.size() == sim.rows.size() + 1);
  CHECK(replay[0].size() == 12);
  CHECK(detail[0].size() == 13);
  for (size_t i = 1; i < replay.size(); ++i) {
    CHECK(replay[i][0] == detail[i][0]);  // query_id
    CHECK(replay[i][1] == detail[i][1]);  // subquery_id
    CHECK(replay[i][6] == detail[i][3]);  // provenance name
    CHECK(replay[i][8] == detail[i][10]);  // truth
  }

  // cumulative rows at 5, 10, 15 and the final 16
  std::vector<std::vector<std::string>> cum = read_csv(out_dir + "/cumulative.csv");
  REQUIRE(cum.size() == 5);
  CHECK(cum[1][0] == "5");
  CHECK(cum[4][0] == "16");
  double p50;
  REQUIRE(parse_f64(cum[4][2], p50));
  CHECK(p50 >= 1.0);

  // summary internally consistent
  json summary = json::parse(read_file(out_dir + "/summary.json"));
  CHECK(summary["subqueries"].get<uint64_t>() == sim.rows.size());
  CHECK(summary["queries"].get<uint64_t>() == 16);
  CHECK(summary["learned"]["count"].get<uint64_t>() == sim.rows.size());
  CHECK(summary["by_join"].contains("0"));
  CHECK(summary["by_join"].contains("1"));
  CHECK(summary["reliance_deciles"].size() == 10);
  double first_decile, last_decile;
  REQUIRE(parse_f64(summary["reliance_deciles"][0].get<std::string>(), first_decile));
  REQUIRE(parse_f64(summary["reliance_deciles"][9].get<std::string>(), last_decile));
  CHECK(first_decile >= 0.0);
  CHECK(last_decile >= first_decile);  // reliance on learned buckets grows

  // the same config replays byte-identically
  const std::string replay_bytes = read_file(out_dir + "/replay.csv");
  const std::string detail_bytes = read_file(out_dir + "/detail.csv");
  const std::string cum_bytes = read_file(out_dir + "/cumulative.csv");
  const std::string summary_bytes = read_file(out_dir + "/summary.json");
  SimResult again = run_simulation(cfg);
  write_reports(again, cfg);
  CHECK(read_file(out_dir + "/replay.csv") == replay_bytes);
  CHECK(read_file(out_dir + "/detail.csv") == detail_bytes);
  CHECK(read_file(out_dir + "/cumulative.csv") == cum_bytes);
  CHECK(read_file(out_dir + "/summary.json") == summary_bytes);

  // rebuilding the report from the CSVs reproduces the same summary
  rebuild_report(out_dir);
  CHECK(read_file(out_dir + "/summary.json") == summary_bytes);
}

TEST_CASE("an empty workload produces empty but valid reports") {
  TempDir dir("empty");
  const std::string data_dir = dir.path + "/data";
  generate_dataset_dir(replay_dataset_spec(), data_dir);
  write_file(dir.path + "/wl.sql", "");

  RunConfig cfg;
  cfg.schema_path = data_dir + "/schema.json";
  cfg.tables_dir = data_dir;
  cfg.workload_path = dir.path + "/wl.sql";
  cfg.out_dir = dir.path + "/run";

  SimResult sim = run_simulation(cfg);
  CHECK(sim.queries == 0);
  CHECK(sim.rows.empty());
  write_reports(sim, cfg);
  CHECK(read_csv(cfg.out_dir + "/replay.csv").size() == 1);
  json summary = json::parse(read_file(cfg.out_dir + "/summary.json"));
  CHECK(summary["learned"]["count"].get<uint64_t>() == 0);
  CHECK(summary["reliance_deciles"].empty());
  CHECK_NOTHROW(rebuild_report(cfg.out_dir));
}

TEST_CASE("a bad query surfaces with its replay position") {
  TempDir dir("bad");
  const std::string data_dir = dir.path + "/data";
  generate_dataset_dir(replay_dataset_spec(), data_dir);
  write_file(dir.path + "/wl.sql", "SELECT * FROM p WHERE p.u < 3;\nSELECT * FROM ghosts;\n");

  RunConfig cfg;
  cfg.schema_path = data_dir + "/schema.json";
  cfg.tables_dir = data_dir;
  cfg.workload_path = dir.path + "/wl.sql";
  cfg.out_dir = dir.path + "/run";
  try {
    run_simulation(cfg);
    FAIL("expected the unknown table to throw");
  } catch (const Error& e) {
    const std::string msg = e.what();
    CHECK(msg.find("while replaying query 1") != std::string::npos);
    CHECK(msg.find("ghosts") != std::string::npos);
  }
}

TEST_CASE("run configuration round-trips and validates") {
  RunConfig cfg;
  cfg.schema_path = "a/schema.json";
  cfg.tables_dir = "a";
  cfg.workload_path = "w.sql";
  cfg.out_dir = "out";
  cfg.record_timings = true;
  cfg.truth_budget = 123456;
  cfg.cumulative_every = 7;
  cfg.store.seed = 99;

  const std::string dump = cfg.to_json().dump(2);
  RunConfig back = RunConfig::from_json(json::parse(dump));
  CHECK(back.to_json().dump(2) == dump);
  CHECK(back.schema_path == "a/schema.json");
  CHECK(back.record_timings);
  CHECK(back.truth_budget == 123456);
  CHECK(back.cumulative_every == 7);
  CHECK(back.store.seed == 99);

  // partial configs take defaults
  RunConfig sparse = RunConfig::from_json(json::parse(R"({"out": "x"})"));
  CHECK(sparse.out_dir == "x");
  CHECK(sparse.cumulative_every == 100);
  CHECK(sparse.store.seed == 42);
  CHECK_FALSE(sparse.record_timings);

  CHECK_THROWS_AS(RunConfig::from_json(json::parse("[]")), ConfigError);
  CHECK_THROWS_AS(RunConfig::from_json(json::parse(R"({"cumulative_every": 0})")),
                  ConfigError);
}

TEST_CASE("recorded timings fill the latency columns") {
  TempDir dir("timed");
  const std::string data_dir = dir.path + "/data";
  generate_dataset_dir(replay_dataset_spec(), data_dir);
  write_file(dir.path + "/wl.sql", "SELECT * FROM p, c WHERE p.id = c.pid AND c.w = 2;\n");

  RunConfig cfg;
  cfg.schema_path = data_dir + "/schema.json";
  cfg.tables_dir = data_dir;
  cfg.workload_path = dir.path + "/wl.sql";
  cfg.out_dir = dir.path + "/run";
  cfg.record_timings = true;

  SimResult sim = run_simulation(cfg);
  REQUIRE(!sim.rows.empty());
  CHECK(sim.truth_total_us > 0);  // scanning 200 rows costs real time
  for (const ReplayRow& r : sim.rows) {
    CHECK(r.est_us >= 0);
    CHECK(r.obs_us >= 0);
  }
}
