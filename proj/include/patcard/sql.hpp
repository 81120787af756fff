#pragma once

#include <string>
#include <vector>

#include "patcard/dag.hpp"
#include "patcard/schema.hpp"

namespace patcard {

/// Parses one SELECT statement into its query DAG.
///
/// Supported grammar: SELECT <ignored> FROM table [alias] {, table [alias]}
/// [INNER JOIN table [alias] ON pred]... [WHERE pred]; predicates combine
/// comparisons (=, <, <=, >, >=, <>), IN lists and function calls with AND /
/// OR.  Identical column and table references are merged; each referenced
/// column hangs off its alias, each alias off its table, and predicate
/// operands point into their operator nodes, which point into the root
/// junction.
///
/// With a schema bound, column references are resolved and literal types are
/// checked against column types (SemanticError on mismatch); without one the
/// DAG is built from the text alone.
QueryDag parse_sql(const std::string& text, const Schema* schema = nullptr);

/// Splits a .sql file into statements: one per line, `--` comments and blank
/// lines skipped.
std::vector<std::string> split_statements(const std::string& text);

//---------------------------------------------------------------------------
// dag introspection
//---------------------------------------------------------------------------

/// One top-level conjunct of a query DAG.
struct ConjunctInfo {
  uint32_t root = 0;
  /// Reverse-reachable node set (the conjunct's whole subtree plus the
  /// alias/table chains of every referenced column), ascending ids.
  std::vector<uint32_t> nodes;
  /// Alias node ids referenced, ascending.  Empty for constant predicates.
  std::vector<uint32_t> aliases;
  /// True when the conjunct is `column = column` across two aliases.
  bool equi_join = false;
};

/// Structural view shared by subquery enumeration, execution and the
/// heuristic estimator.
struct DagView {
  std::vector<uint32_t> aliases;      // alias node ids, ascending
  std::vector<uint32_t> alias_table;  // table node id per alias
  std::vector<ConjunctInfo> conjuncts;
  /// Root AND junction, or UINT32_MAX when the root is a single predicate or
  /// a bare alias.
  uint32_t junction = UINT32_MAX;
};

DagView inspect_dag(const QueryDag& dag);

/// The alias node feeding a column node.
uint32_t column_alias(const QueryDag& dag, uint32_t column_node);

/// Enumerates the subquery DAGs of a parsed query: per alias one DAG per
/// single-table conjunct plus their conjunction (or the bare scan when the
/// alias has no predicate), then one DAG per connected subset of the join
/// graph carrying the subset's join predicates and all member filters.
/// Output order is deterministic.
std::vector<SubqueryRecord> enumerate_subqueries(const QueryDag& dag);

}  // namespace patcard
