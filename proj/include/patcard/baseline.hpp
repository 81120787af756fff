#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "patcard/dag.hpp"
#include "patcard/schema.hpp"
#include "patcard/table.hpp"
#include "patcard/util.hpp"

#include "json.hpp"

namespace patcard {

//---------------------------------------------------------------------------
// Textbook statistics-based estimator: equi-depth histograms with a
// most-common-values list per column, independence across predicates, and
// 1/max(nd) join selectivity. This is the fallback the learned store leans
// on before its buckets warm up, and the fixed baseline the simulator
// scores against.
//---------------------------------------------------------------------------

struct McvEntry {
  std::string value;  ///< canonical text (ints/floats via shortest form, dates ISO)
  uint64_t count = 0;
};

struct ColumnHistogram {
  ColumnType type = ColumnType::Int;
  uint64_t num_distinct = 0;
  uint64_t hist_rows = 0;             ///< rows covered by the buckets (non-MCV)
  std::vector<McvEntry> mcvs;
  std::vector<double> bounds;         ///< numeric bucket edges, size buckets+1
  std::vector<std::string> sbounds;   ///< string bucket edges
  std::vector<uint64_t> counts;       ///< per-bucket row counts

  size_t buckets() const { return counts.size(); }
};

struct TableStats {
  uint64_t rows = 0;
  std::map<std::string, ColumnHistogram> columns;
};

struct StatsSet {
  std::map<std::string, TableStats> tables;

  const TableStats* find_table(const std::string& t) const;
  const ColumnHistogram* find_column(const std::string& t, const std::string& c) const;

  nlohmann::json to_json() const;
  static StatsSet from_json(const nlohmann::json& j);
  void save(const std::string& path) const;
  static StatsSet load(const std::string& path);

  /// Degenerate statistics straight from schema ranges: one bucket per
  /// column spanning [min, max] with the declared distinct count. Keeps the
  /// estimator total when no scan of the data has happened yet.
  static StatsSet from_schema(const Schema& schema);
};

/// Scan a dataset into per-column histograms: `buckets` equi-depth buckets
/// after peeling off the top `mcv_limit` values (kept only when they repeat).
StatsSet analyze(const Dataset& data, uint32_t buckets = 100, uint32_t mcv_limit = 10);

/// Selectivity-based cardinality estimate for a subquery graph, clamped to
/// [1, product of referenced table sizes].
double heuristic_estimate(const QueryDag& dag, const StatsSet& stats);

}  // namespace patcard
