#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "patcard/canonhash.hpp"
#include "patcard/dag.hpp"
#include "patcard/featurize.hpp"
#include "patcard/sql.hpp"

using namespace patcard;

namespace {

size_t count_type(const QueryDag& d, NodeType t) {
  size_t n = 0;
  for (const DagNode& node : d.nodes)
    if (node.type == t) ++n;
  return n;
}

/// Structural equality including every attribute: equal canonical hashes
/// under the full attribute universe.
bool isomorphic(const QueryDag& a, const QueryDag& b) {
  return canonicalize(a, attr_universe()).hash == canonicalize(b, attr_universe()).hash;
}

/// Table names referenced by a sub-DAG, for checking enumeration coverage.
std::set<std::string> tables_of(const QueryDag& d) {
  std::set<std::string> out;
  for (const DagNode& n : d.nodes)
    if (n.type == NodeType::Table) out.insert(n.attr(kAttrName));
  return out;
}

Schema two_table_schema() {
  return Schema::from_json(R"({
    "movies": {
      "stars": {"type": "int", "min": 0, "max": 5, "num_uniques": 6, "table_size": 100},
      "year":  {"type": "int", "min": 1990, "max": 2025, "num_uniques": 36, "table_size": 100}
    },
    "actors": {
      "movie_id": {"type": "int", "min": 1, "max": 100, "num_uniques": 100, "table_size": 300},
      "age":      {"type": "int", "min": 1, "max": 99, "num_uniques": 80, "table_size": 300}
    }
  })");
}

}  // namespace

//---------------------------------------------------------------------------
// parsing
//---------------------------------------------------------------------------

TEST_CASE("single-table two-predicate query builds the documented graph") {
  QueryDag d = parse_sql("SELECT * FROM movies WHERE stars>3 AND year IN (2024,2025)");
  CHECK(d.nodes.size() == 10);
  CHECK(d.edges.size() == 10);
  CHECK(count_type(d, NodeType::Table) == 1);
  CHECK(count_type(d, NodeType::Alias) == 1);
  CHECK(count_type(d, NodeType::Column) == 2);
  CHECK(count_type(d, NodeType::Literal) == 3);
  CHECK(count_type(d, NodeType::Op) == 3);
  CHECK(d.nodes[d.root_id].type == NodeType::Op);
  CHECK(d.nodes[d.root_id].attr(kAttrCode) == "and");

  // hand-built expected graph
  QueryDag e;
  uint32_t t = e.add_node(NodeType::Table);
  e.nodes[t].set(kAttrName, "movies");
  uint32_t a = e.add_node(NodeType::Alias);
  e.nodes[a].set(kAttrName, "movies");
  uint32_t stars = e.add_node(NodeType::Column);
  e.nodes[stars].set(kAttrName, "stars");
  uint32_t year = e.add_node(NodeType::Column);
  e.nodes[year].set(kAttrName, "year");
  uint32_t l3 = e.add_node(NodeType::Literal);
  e.nodes[l3].set(kAttrValue, "3");
  e.nodes[l3].set(kAttrType, "int");
  uint32_t l24 = e.add_node(NodeType::Literal);
  e.nodes[l24].set(kAttrValue, "2024");
  e.nodes[l24].set(kAttrType, "int");
  uint32_t l25 = e.add_node(NodeType::Literal);
  e.nodes[l25].set(kAttrValue, "2025");
  e.nodes[l25].set(kAttrType, "int");
  uint32_t gt = e.add_node(NodeType::Op);
  e.nodes[gt].set(kAttrCode, ">");
  uint32_t in = e.add_node(NodeType::Op);
  e.nodes[in].set(kAttrCode, "in");
  uint32_t andn = e.add_node(NodeType::Op);
  e.nodes[andn].set(kAttrCode, "and");
  e.add_edge(t, a);
  e.add_edge(a, stars);
  e.add_edge(a, year);
  e.add_edge(stars, gt);
  e.add_edge(l3, gt);
  e.add_edge(year, in);
  e.add_edge(l24, in);
  e.add_edge(l25, in);
  e.add_edge(gt, andn);
  e.add_edge(in, andn);
  e.root_id = andn;

  CHECK(isomorphic(d, e));
}

TEST_CASE("bare scan parses to the table-alias chain") {
  QueryDag d = parse_sql("SELECT * FROM t");
  CHECK(d.nodes.size() == 2);
  CHECK(d.edges.size() == 1);
  CHECK(count_type(d, NodeType::Op) == 0);
  CHECK(count_type(d, NodeType::Literal) == 0);
  CHECK(d.nodes[d.root_id].type == NodeType::Alias);
}

TEST_CASE("join query merges shared column references") {
  QueryDag d = parse_sql("SELECT * FROM a, b WHERE a.k=b.k AND a.v<5");
  CHECK(d.nodes.size() == 11);
  CHECK(d.edges.size() == 11);

  QueryDag e;
  uint32_t ta = e.add_node(NodeType::Table);
  e.nodes[ta].set(kAttrName, "a");
  uint32_t aa = e.add_node(NodeType::Alias);
  e.nodes[aa].set(kAttrName, "a");
  uint32_t tb = e.add_node(NodeType::Table);
  e.nodes[tb].set(kAttrName, "b");
  uint32_t ab = e.add_node(NodeType::Alias);
  e.nodes[ab].set(kAttrName, "b");
  uint32_t ka = e.add_node(NodeType::Column);
  e.nodes[ka].set(kAttrName, "k");
  uint32_t kb = e.add_node(NodeType::Column);
  e.nodes[kb].set(kAttrName, "k");
  uint32_t va = e.add_node(NodeType::Column);
  e.nodes[va].set(kAttrName, "v");
  uint32_t l5 = e.add_node(NodeType::Literal);
  e.nodes[l5].set(kAttrValue, "5");
  e.nodes[l5].set(kAttrType, "int");
  uint32_t eq = e.add_node(NodeType::Op);
  e.nodes[eq].set(kAttrCode, "=");
  uint32_t lt = e.add_node(NodeType::Op);
  e.nodes[lt].set(kAttrCode, "<");
  uint32_t andn = e.add_node(NodeType::Op);
  e.nodes[andn].set(kAttrCode, "and");
  e.add_edge(ta, aa);
  e.add_edge(tb, ab);
  e.add_edge(aa, ka);
  e.add_edge(ab, kb);
  e.add_edge(aa, va);
  e.add_edge(ka, eq);
  e.add_edge(kb, eq);
  e.add_edge(va, lt);
  e.add_edge(l5, lt);
  e.add_edge(eq, andn);
  e.add_edge(lt, andn);
  e.root_id = andn;

  CHECK(isomorphic(d, e));
}

TEST_CASE("inner join syntax is equivalent to comma join") {
  QueryDag a = parse_sql("SELECT * FROM a, b WHERE a.k=b.k AND a.v<5");
  QueryDag b = parse_sql("SELECT * FROM a INNER JOIN b ON a.k=b.k WHERE a.v<5");
  CHECK(isomorphic(a, b));
}

TEST_CASE("literal types are inferred from their shape") {
  QueryDag d = parse_sql(
      "SELECT * FROM t WHERE t.a = 5 AND t.b = 5.5 AND t.c = 'x' AND t.d = '2024-01-05'");
  std::map<std::string, std::string> types;
  for (const DagNode& n : d.nodes)
    if (n.type == NodeType::Literal) types[n.attr(kAttrValue)] = n.attr(kAttrType);
  CHECK(types.at("5") == "int");
  CHECK(types.at("5.5") == "float");
  CHECK(types.at("x") == "string");
  CHECK(types.at("2024-01-05") == "date");
}

TEST_CASE("schema binding annotates columns and validates names") {
  Schema s = two_table_schema();
  QueryDag d = parse_sql("SELECT * FROM movies WHERE stars > 3", &s);
  bool found = false;
  for (const DagNode& n : d.nodes) {
    if (n.type == NodeType::Column) {
      found = true;
      CHECK(n.attr(kAttrType) == "int");
      CHECK(n.attr(kAttrNumUniques) == "6");
    }
  }
  CHECK(found);
  CHECK_THROWS_AS(parse_sql("SELECT * FROM nosuch WHERE x > 1", &s), SemanticError);
  CHECK_THROWS_AS(parse_sql("SELECT * FROM movies WHERE nosuch > 1", &s), SemanticError);
}

TEST_CASE("parse errors carry a byte offset") {
  try {
    parse_sql("SELECT * FRO movies");
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(std::string(e.what()).find("offset") != std::string::npos);
  }
  CHECK_THROWS_AS(parse_sql(""), ParseError);
  CHECK_THROWS_AS(parse_sql("SELECT * FROM t WHERE"), ParseError);
  CHECK_THROWS_AS(parse_sql("SELECT * FROM t WHERE x >"), ParseError);
  CHECK_THROWS_AS(parse_sql("SELECT * FROM t WHERE x > 1 GARBAGE"), ParseError);
}

TEST_CASE("statement splitting skips comments and blank lines") {
  auto stmts = split_statements(
      "SELECT * FROM a;\n"
      "-- whole-line comment\n"
      "\n"
      "  SELECT * FROM b; -- trailing comment\n"
      "SELECT * FROM c");
  REQUIRE(stmts.size() == 3);
  CHECK(stmts[0] == "SELECT * FROM a;");
  CHECK(stmts[1] == "SELECT * FROM b;");
  CHECK(stmts[2] == "SELECT * FROM c");
  for (const std::string& s : stmts) CHECK_NOTHROW(parse_sql(s));
}

//---------------------------------------------------------------------------
// dag mechanics
//---------------------------------------------------------------------------

TEST_CASE("topological order succeeds on parse results and rejects cycles") {
  for (const char* sql :
       {"SELECT * FROM t", "SELECT * FROM t WHERE t.a > 1 OR t.b < 2",
        "SELECT * FROM a, b, c WHERE a.k=b.k AND b.j=c.j AND a.x IN (1,2,3)"}) {
    QueryDag d = parse_sql(sql);
    auto order = d.topo_order();
    CHECK(order.size() == d.nodes.size());
    // every edge goes forward in the order
    std::vector<uint32_t> rank(d.nodes.size());
    for (uint32_t i = 0; i < order.size(); ++i) rank[order[i]] = i;
    for (auto [s, t] : d.edges) CHECK(rank[s] < rank[t]);
  }

  QueryDag cyc;
  cyc.add_node(NodeType::Op);
  cyc.add_node(NodeType::Op);
  cyc.add_edge(0, 1);
  cyc.add_edge(1, 0);
  CHECK_THROWS_AS(cyc.topo_order(), CycleError);
  CHECK_THROWS_AS(cyc.validate(), CycleError);
}

TEST_CASE("relabeling preserves structure") {
  QueryDag d = parse_sql("SELECT * FROM movies WHERE stars>3 AND year IN (2024,2025)");
  std::vector<uint32_t> perm(d.nodes.size());
  for (uint32_t i = 0; i < perm.size(); ++i) perm[i] = (i * 7 + 3) % perm.size();
  QueryDag r = d.relabeled(perm);
  CHECK(r.nodes.size() == d.nodes.size());
  CHECK(r.edges.size() == d.edges.size());
  CHECK(isomorphic(d, r));
}

//---------------------------------------------------------------------------
// invariants from the module contract
//---------------------------------------------------------------------------

TEST_CASE("parsing is idempotent") {
  const char* sql = "SELECT * FROM a, b WHERE a.k=b.k AND a.v<5 AND b.w>2";
  CHECK(isomorphic(parse_sql(sql), parse_sql(sql)));
}

TEST_CASE("alias rename leaves alias-free hashes unchanged") {
  QueryDag m = parse_sql("SELECT * FROM movies m WHERE m.stars > 3");
  QueryDag q = parse_sql("SELECT * FROM movies q WHERE q.stars > 3");
  // default level sets never include the alias name
  for (int lvl = 1; lvl <= 3; ++lvl)
    CHECK(canonicalize(m, default_pattern_feats(lvl)).hash ==
          canonicalize(q, default_pattern_feats(lvl)).hash);
  // but the full universe sees the difference
  CHECK_FALSE(isomorphic(m, q));
}

TEST_CASE("conjunction order does not matter") {
  QueryDag pq = parse_sql("SELECT * FROM t WHERE t.a > 1 AND t.b < 9");
  QueryDag qp = parse_sql("SELECT * FROM t WHERE t.b < 9 AND t.a > 1");
  CHECK(isomorphic(pq, qp));
}

TEST_CASE("in-lists of different lengths are different patterns") {
  QueryDag two = parse_sql("SELECT * FROM t WHERE t.a IN (1,2)");
  QueryDag three = parse_sql("SELECT * FROM t WHERE t.a IN (1,2,3)");
  CHECK(canonicalize(two, default_pattern_feats(3)).hash !=
        canonicalize(three, default_pattern_feats(3)).hash);
}

//---------------------------------------------------------------------------
// subquery enumeration
//---------------------------------------------------------------------------

TEST_CASE("two-predicate single-table query yields three subqueries") {
  QueryDag d = parse_sql("SELECT * FROM movies WHERE stars>3 AND year IN (2024,2025)");
  auto subs = enumerate_subqueries(d);
  REQUIRE(subs.size() == 3);
  for (const auto& s : subs) {
    CHECK(s.n_join == 0);
    CHECK_NOTHROW(s.dag.validate());
  }
  // two single-predicate graphs and one conjunction
  size_t with_and = 0;
  for (const auto& s : subs) {
    size_t ops = count_type(s.dag, NodeType::Op);
    bool has_and = false;
    for (const DagNode& n : s.dag.nodes)
      has_and = has_and || (n.type == NodeType::Op && n.attr(kAttrCode) == "and");
    if (has_and) {
      ++with_and;
      CHECK(ops == 3);
    } else {
      CHECK(ops == 1);
    }
  }
  CHECK(with_and == 1);
}

TEST_CASE("bare scan yields itself") {
  auto subs = enumerate_subqueries(parse_sql("SELECT * FROM t"));
  REQUIRE(subs.size() == 1);
  CHECK(subs[0].n_join == 0);
  CHECK(subs[0].dag.nodes.size() == 2);
}

TEST_CASE("chain join enumerates connected subsets only") {
  QueryDag d = parse_sql(
      "SELECT * FROM a, b, c "
      "WHERE a.k = b.k AND b.j = c.j AND a.x > 1 AND b.y > 2 AND c.z > 3");
  auto subs = enumerate_subqueries(d);
  REQUIRE(subs.size() == 6);

  std::vector<std::set<std::string>> expect = {{"a"},      {"b"},      {"c"},
                                               {"a", "b"}, {"b", "c"}, {"a", "b", "c"}};
  for (size_t i = 0; i < subs.size(); ++i) {
    CHECK(tables_of(subs[i].dag) == expect[i]);
    CHECK(subs[i].n_join == static_cast<int>(expect[i].size()) - 1);
    CHECK_NOTHROW(subs[i].dag.validate());
  }
}

TEST_CASE("join subqueries carry member filters and join predicates") {
  QueryDag d = parse_sql("SELECT * FROM a, b WHERE a.k = b.k AND a.v < 5");
  auto subs = enumerate_subqueries(d);
  REQUIRE(subs.size() == 3);
  // last one is the join; it must contain the filter, the join op and both tables
  const QueryDag& join = subs[2].dag;
  CHECK(subs[2].n_join == 1);
  CHECK(tables_of(join) == std::set<std::string>{"a", "b"});
  size_t eq_ops = 0, lt_ops = 0;
  for (const DagNode& n : join.nodes) {
    if (n.type != NodeType::Op) continue;
    if (n.attr(kAttrCode) == "=") ++eq_ops;
    if (n.attr(kAttrCode) == "<") ++lt_ops;
  }
  CHECK(eq_ops == 1);
  CHECK(lt_ops == 1);
}

TEST_CASE("disconnected aliases produce no cross join subquery") {
  // no join predicate between a and b at all
  QueryDag d = parse_sql("SELECT * FROM a, b WHERE a.v < 5 AND b.w > 2");
  auto subs = enumerate_subqueries(d);
  REQUIRE(subs.size() == 2);
  CHECK(tables_of(subs[0].dag) == std::set<std::string>{"a"});
  CHECK(tables_of(subs[1].dag) == std::set<std::string>{"b"});
}

TEST_CASE("enumeration output is deterministic") {
  const char* sql =
      "SELECT * FROM a, b, c WHERE a.k = b.k AND b.j = c.j AND a.x IN (1,2)";
  auto s1 = enumerate_subqueries(parse_sql(sql));
  auto s2 = enumerate_subqueries(parse_sql(sql));
  REQUIRE(s1.size() == s2.size());
  for (size_t i = 0; i < s1.size(); ++i) CHECK(isomorphic(s1[i].dag, s2[i].dag));
}

TEST_CASE("or trees stay one conjunct") {
  QueryDag d = parse_sql("SELECT * FROM t WHERE t.a > 1 OR t.b < 2");
  auto subs = enumerate_subqueries(d);
  REQUIRE(subs.size() == 1);
  bool has_or = false;
  for (const DagNode& n : subs[0].dag.nodes)
    has_or = has_or || (n.type == NodeType::Op && n.attr(kAttrCode) == "or");
  CHECK(has_or);
}
