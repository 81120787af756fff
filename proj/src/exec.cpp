#include "patcard/exec.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <unordered_map>

#include "patcard/sql.hpp"

namespace patcard {
namespace {

struct Budget {
  uint64_t left;
  void spend(uint64_t n) {
    if (n > left) throw BudgetExceeded("truth evaluation step budget exhausted");
    left -= n;
  }
};

//---------------------------------------------------------------------------
// Generic per-row evaluation
//---------------------------------------------------------------------------

struct Value {
  ColumnType type = ColumnType::Int;
  int64_t i = 0;
  double f = 0;
  std::string s;

  double as_double() const { return type == ColumnType::Float ? f : static_cast<double>(i); }
  bool numeric() const { return type != ColumnType::String; }
};

/// Evaluation context: which concrete row each alias node is bound to.
struct Binding {
  // indexed by alias position in DagView::aliases
  std::vector<const Table*> tables;
  std::vector<uint32_t> rows;
};

struct Evaluator {
  const QueryDag& dag;
  const DagView& view;
  std::vector<std::vector<uint32_t>> pred;
  Budget& budget;

  Evaluator(const QueryDag& d, const DagView& v, Budget& b)
      : dag(d), view(v), pred(d.predecessors()), budget(b) {}

  uint32_t alias_index(uint32_t alias_node) const {
    for (uint32_t i = 0; i < view.aliases.size(); ++i)
      if (view.aliases[i] == alias_node) return i;
    throw InternalError("unbound alias node");
  }

  Value column_value(uint32_t col_node, const Binding& b) {
    const uint32_t ai = alias_index(column_alias(dag, col_node));
    const Table* t = b.tables[ai];
    const Column* c = t->find(dag.nodes[col_node].attr(kAttrName));
    if (!c) throw SemanticError("column not in table: " + dag.nodes[col_node].attr(kAttrName));
    const uint32_t r = b.rows[ai];
    Value v;
    v.type = c->type;
    switch (c->type) {
      case ColumnType::Float: v.f = c->floats[r]; break;
      case ColumnType::String: v.s = c->strs[r]; break;
      default: v.i = c->ints[r]; break;
    }
    return v;
  }

  static Value literal_value(const DagNode& n) {
    Value v;
    const std::string& t = n.attr(kAttrType);
    const std::string& raw = n.attr(kAttrValue);
    if (t == "int") {
      v.type = ColumnType::Int;
      parse_i64(raw, v.i);
    } else if (t == "float") {
      v.type = ColumnType::Float;
      parse_f64(raw, v.f);
    } else if (t == "date") {
      v.type = ColumnType::Date;
      v.i = parse_date(raw);
    } else {
      v.type = ColumnType::String;
      v.s = raw;
    }
    return v;
  }

  Value function_value(uint32_t node, const Binding& b) {
    const std::string& fn = dag.nodes[node].attr(kAttrName);
    if (pred[node].empty()) throw SemanticError("function without argument: " + fn);
    Value a = operand_value(pred[node][0], b);
    Value v;
    if (fn == "abs") {
      v = a;
      if (a.type == ColumnType::Float) v.f = std::fabs(a.f);
      else v.i = a.i < 0 ? -a.i : a.i;
    } else if (fn == "lower" || fn == "upper") {
      v.type = ColumnType::String;
      v.s = a.s;
      for (char& ch : v.s) {
        if (fn == "lower" && ch >= 'A' && ch <= 'Z') ch = static_cast<char>(ch - 'A' + 'a');
        if (fn == "upper" && ch >= 'a' && ch <= 'z') ch = static_cast<char>(ch - 'a' + 'A');
      }
    } else if (fn == "length") {
      v.type = ColumnType::Int;
      v.i = static_cast<int64_t>(a.s.size());
    } else if (fn == "year" || fn == "month" || fn == "day") {
      int y, m, d;
      civil_from_days(a.i, y, m, d);
      v.type = ColumnType::Int;
      v.i = fn == "year" ? y : (fn == "month" ? m : d);
    } else {
      throw SemanticError("unknown function: " + fn);
    }
    return v;
  }

  Value operand_value(uint32_t node, const Binding& b) {
    switch (dag.nodes[node].type) {
      case NodeType::Column: return column_value(node, b);
      case NodeType::Literal: return literal_value(dag.nodes[node]);
      case NodeType::Function: return function_value(node, b);
      default: throw SemanticError("operand is not a column, literal or function");
    }
  }

  static int compare(const Value& a, const Value& b) {
    if (a.type == ColumnType::String || b.type == ColumnType::String) {
      if (a.type != ColumnType::String || b.type != ColumnType::String)
        throw TypeError("comparing string with non-string", 0, "*");
      return a.s < b.s ? -1 : (a.s == b.s ? 0 : 1);
    }
    if (a.type == ColumnType::Float || b.type == ColumnType::Float) {
      const double x = a.as_double(), y = b.as_double();
      return x < y ? -1 : (x == y ? 0 : 1);
    }
    return a.i < b.i ? -1 : (a.i == b.i ? 0 : 1);
  }

  static bool apply_cmp(const std::string& code, int c) {
    if (code == "=") return c == 0;
    if (code == "<>") return c != 0;
    if (code == "<") return c < 0;
    if (code == "<=") return c <= 0;
    if (code == ">") return c > 0;
    if (code == ">=") return c >= 0;
    throw SemanticError("unknown comparison: " + code);
  }

  bool eval_pred(uint32_t node, const Binding& b) {
    budget.spend(1);
    const DagNode& n = dag.nodes[node];
    if (n.type != NodeType::Op) throw SemanticError("predicate root is not an operator");
    const std::string& code = n.attr(kAttrCode);
    const std::vector<uint32_t>& in = pred[node];
    if (code == "and") {
      for (uint32_t c : in)
        if (!eval_pred(c, b)) return false;
      return true;
    }
    if (code == "or") {
      for (uint32_t c : in)
        if (eval_pred(c, b)) return true;
      return false;
    }
    if (code == "in") {
      if (in.empty()) throw SemanticError("IN without operands");
      Value lhs = operand_value(in[0], b);
      for (size_t k = 1; k < in.size(); ++k)
        if (compare(lhs, operand_value(in[k], b)) == 0) return true;
      return false;
    }
    if (in.size() != 2) throw SemanticError("comparison does not have two operands");
    return apply_cmp(code, compare(operand_value(in[0], b), operand_value(in[1], b)));
  }
};

//---------------------------------------------------------------------------
// Vectorized single-table filtering
//---------------------------------------------------------------------------

template <typename T>
bool cmp_tv(const std::string& code, const T& a, const T& b) {
  if (code == "=") return a == b;
  if (code == "<>") return a != b;
  if (code == "<") return a < b;
  if (code == "<=") return a <= b;
  if (code == ">") return a > b;
  return a >= b;
}

/// Column-vs-literal scan specialised on the column storage type.
void scan_leaf(const Column& col, const std::string& code, const Value& lit,
               std::vector<uint8_t>& out, Budget& budget) {
  const size_t n = col.size();
  budget.spend(n);
  out.assign(n, 0);
  switch (col.type) {
    case ColumnType::Float: {
      const double v = lit.as_double();
      for (size_t i = 0; i < n; ++i) out[i] = cmp_tv(code, col.floats[i], v);
      break;
    }
    case ColumnType::String: {
      for (size_t i = 0; i < n; ++i) out[i] = cmp_tv(code, col.strs[i], lit.s);
      break;
    }
    default: {
      if (lit.type == ColumnType::Float) {
        const double v = lit.f;
        for (size_t i = 0; i < n; ++i)
          out[i] = cmp_tv(code, static_cast<double>(col.ints[i]), v);
      } else {
        const int64_t v = lit.i;
        for (size_t i = 0; i < n; ++i) out[i] = cmp_tv(code, col.ints[i], v);
      }
      break;
    }
  }
}

struct TruthEval {
  const QueryDag& dag;
  const Dataset& data;
  DagView view;
  Budget budget;
  Evaluator ev;

  TruthEval(const QueryDag& d, const Dataset& ds, uint64_t steps)
      : dag(d), data(ds), view(inspect_dag(d)), budget{steps}, ev(d, view, budget) {}

  const Table* alias_table(uint32_t ai) {
    const std::string& name = dag.nodes[view.alias_table[ai]].attr(kAttrName);
    const Table* t = data.find(name);
    if (!t) throw SemanticError("table not in dataset: " + name);
    return t;
  }

  /// True when the predicate under `node` is a plain column(op)literal leaf
  /// on a single table; fills the bitmap directly in that case.
  bool try_leaf_scan(uint32_t node, const Table* t, std::vector<uint8_t>& out) {
    const DagNode& n = dag.nodes[node];
    const std::string& code = n.attr(kAttrCode);
    if (code == "and" || code == "or" || code == "in") return false;
    const std::vector<uint32_t>& in = ev.pred[node];
    if (in.size() != 2) return false;
    if (dag.nodes[in[0]].type != NodeType::Column ||
        dag.nodes[in[1]].type != NodeType::Literal)
      return false;
    const Column* col = t->find(dag.nodes[in[0]].attr(kAttrName));
    if (!col) throw SemanticError("column not in table: " + dag.nodes[in[0]].attr(kAttrName));
    scan_leaf(*col, code, Evaluator::literal_value(dag.nodes[in[1]]), out, budget);
    return true;
  }

  /// Bitmap for any single-alias predicate: leaves vectorized, junctions
  /// combined bitwise, everything else row-evaluated.
  void filter_bitmap(uint32_t node, uint32_t ai, const Table* t,
                     std::vector<uint8_t>& out) {
    const std::string& code = dag.nodes[node].attr(kAttrCode);
    if (dag.nodes[node].type == NodeType::Op && (code == "and" || code == "or")) {
      const std::vector<uint32_t>& in = ev.pred[node];
      filter_bitmap(in[0], ai, t, out);
      std::vector<uint8_t> rhs;
      for (size_t k = 1; k < in.size(); ++k) {
        filter_bitmap(in[k], ai, t, rhs);
        if (code == "and")
          for (size_t i = 0; i < out.size(); ++i) out[i] &= rhs[i];
        else
          for (size_t i = 0; i < out.size(); ++i) out[i] |= rhs[i];
      }
      return;
    }
    if (try_leaf_scan(node, t, out)) return;
    // IN lists, column-vs-column and function operands: per-row evaluation
    const size_t n = t->rows;
    out.assign(n, 0);
    Binding b;
    b.tables.assign(view.aliases.size(), nullptr);
    b.rows.assign(view.aliases.size(), 0);
    b.tables[ai] = t;
    for (size_t r = 0; r < n; ++r) {
      b.rows[ai] = static_cast<uint32_t>(r);
      out[r] = ev.eval_pred(node, b);
    }
  }

  //-------------------------------------------------------------------------
  // Join machinery over filtered row ids
  //-------------------------------------------------------------------------

  struct JoinSide {
    uint32_t ai;          // alias index
    const Column* col;
  };

  struct JoinEdge {
    JoinSide a, b;
    bool applied = false;
  };

  /// 64-bit join key: integers as-is, floats by value-preserving cast so
  /// int 3 meets float 3.0, strings via a per-edge dictionary.
  static int64_t num_key(const Column& c, uint32_t r) {
    if (c.type == ColumnType::Float) {
      const double v = c.floats[r];
      int64_t bits;
      static_assert(sizeof(bits) == sizeof(v));
      std::memcpy(&bits, &v, sizeof(bits));
      return bits;
    }
    // promote to double bits so mixed int/float edges agree on the key
    const double v = static_cast<double>(c.ints[r]);
    int64_t bits;
    std::memcpy(&bits, &v, sizeof(bits));
    return bits;
  }

  uint64_t run() {
    const size_t na = view.aliases.size();
    if (na == 0) throw SemanticError("query references no table");

    std::vector<const Table*> tables(na);
    for (uint32_t i = 0; i < na; ++i) tables[i] = alias_table(i);

    // constant conjuncts short-circuit everything
    std::vector<const ConjunctInfo*> cross, joins;
    std::vector<std::vector<const ConjunctInfo*>> singles(na);
    for (const ConjunctInfo& c : view.conjuncts) {
      if (c.aliases.empty()) {
        Binding b;
        b.tables.assign(na, nullptr);
        b.rows.assign(na, 0);
        if (!ev.eval_pred(c.root, b)) return 0;
      } else if (c.aliases.size() == 1) {
        singles[ev.alias_index(c.aliases[0])].push_back(&c);
      } else if (c.equi_join) {
        joins.push_back(&c);
      } else {
        cross.push_back(&c);
      }
    }

    // per-alias surviving row ids
    std::vector<std::vector<uint32_t>> alive(na);
    for (uint32_t i = 0; i < na; ++i) {
      std::vector<uint8_t> bits(tables[i]->rows, 1);
      std::vector<uint8_t> tmp;
      for (const ConjunctInfo* c : singles[i]) {
        filter_bitmap(c->root, i, tables[i], tmp);
        for (size_t r = 0; r < bits.size(); ++r) bits[r] &= tmp[r];
      }
      alive[i].reserve(tables[i]->rows / 4 + 1);
      for (uint32_t r = 0; r < bits.size(); ++r)
        if (bits[r]) alive[i].push_back(r);
    }

    if (na == 1 && cross.empty()) return alive[0].size();

    std::vector<JoinEdge> edges;
    for (const ConjunctInfo* c : joins) {
      const std::vector<uint32_t>& in = ev.pred[c->root];
      JoinEdge e;
      e.a.ai = ev.alias_index(column_alias(dag, in[0]));
      e.b.ai = ev.alias_index(column_alias(dag, in[1]));
      e.a.col = tables[e.a.ai]->find(dag.nodes[in[0]].attr(kAttrName));
      e.b.col = tables[e.b.ai]->find(dag.nodes[in[1]].attr(kAttrName));
      if (!e.a.col || !e.b.col) throw SemanticError("join column not in table");
      edges.push_back(e);
    }

    // progressive join: tuple store is one row-id vector per active alias
    std::vector<bool> active(na, false);
    std::vector<uint32_t> slot(na, UINT32_MAX);
    std::vector<std::vector<uint32_t>> tuples;

    uint32_t start = 0;
    for (uint32_t i = 1; i < na; ++i)
      if (alive[i].size() < alive[start].size()) start = i;
    active[start] = true;
    slot[start] = 0;
    tuples.push_back(alive[start]);

    auto tuple_count = [&] { return tuples.empty() ? 0 : tuples[0].size(); };

    size_t joined = 1;
    while (joined < na) {
      // prefer a hash-join edge with exactly one active endpoint
      JoinEdge* pick = nullptr;
      for (JoinEdge& e : edges)
        if (!e.applied && active[e.a.ai] != active[e.b.ai]) {
          pick = &e;
          break;
        }
      if (pick) {
        JoinSide from = active[pick->a.ai] ? pick->a : pick->b;
        JoinSide to = active[pick->a.ai] ? pick->b : pick->a;
        hash_extend(from, to, alive[to.ai], slot, tuples);
        pick->applied = true;
        active[to.ai] = true;
        ++joined;
      } else {
        // disconnected: cartesian-extend with the smallest inactive side
        uint32_t next = UINT32_MAX;
        for (uint32_t i = 0; i < na; ++i)
          if (!active[i] && (next == UINT32_MAX || alive[i].size() < alive[next].size()))
            next = i;
        cartesian_extend(next, alive[next], slot, tuples);
        active[next] = true;
        ++joined;
      }
      if (tuple_count() == 0) return 0;
    }

    // residual join edges (cycles / parallel predicates): filter in place
    for (JoinEdge& e : edges) {
      if (e.applied) continue;
      filter_edge(e, slot, tuples);
      if (tuple_count() == 0) return 0;
    }

    // cross filters over full bindings
    if (!cross.empty()) {
      Binding b;
      b.tables = tables;
      b.rows.assign(na, 0);
      std::vector<std::vector<uint32_t>> kept(tuples.size());
      const size_t tc = tuple_count();
      for (size_t t = 0; t < tc; ++t) {
        for (uint32_t i = 0; i < na; ++i) b.rows[i] = tuples[slot[i]][t];
        bool ok = true;
        for (const ConjunctInfo* c : cross)
          if (!ev.eval_pred(c->root, b)) {
            ok = false;
            break;
          }
        if (ok)
          for (size_t s = 0; s < tuples.size(); ++s) kept[s].push_back(tuples[s][t]);
      }
      tuples = std::move(kept);
    }
    return tuple_count();
  }

  void hash_extend(const JoinSide& from, const JoinSide& to,
                   const std::vector<uint32_t>& to_alive, std::vector<uint32_t>& slot,
                   std::vector<std::vector<uint32_t>>& tuples) {
    const bool strings = to.col->type == ColumnType::String;
    std::unordered_map<int64_t, std::vector<uint32_t>> num_ht;
    std::unordered_map<std::string, std::vector<uint32_t>> str_ht;
    budget.spend(to_alive.size());
    for (uint32_t r : to_alive) {
      if (strings) str_ht[to.col->strs[r]].push_back(r);
      else num_ht[num_key(*to.col, r)].push_back(r);
    }

    const size_t nslots = tuples.size();
    std::vector<std::vector<uint32_t>> out(nslots + 1);
    const std::vector<uint32_t>& probe_rows = tuples[slot[from.ai]];
    budget.spend(probe_rows.size());
    for (size_t t = 0; t < probe_rows.size(); ++t) {
      const uint32_t pr = probe_rows[t];
      const std::vector<uint32_t>* matches = nullptr;
      if (strings) {
        auto it = str_ht.find(from.col->strs[pr]);
        if (it != str_ht.end()) matches = &it->second;
      } else {
        auto it = num_ht.find(num_key(*from.col, pr));
        if (it != num_ht.end()) matches = &it->second;
      }
      if (!matches) continue;
      budget.spend(matches->size());
      for (uint32_t mr : *matches) {
        for (size_t s = 0; s < nslots; ++s) out[s].push_back(tuples[s][t]);
        out[nslots].push_back(mr);
      }
    }
    slot[to.ai] = static_cast<uint32_t>(nslots);
    tuples = std::move(out);
  }

  void cartesian_extend(uint32_t ai, const std::vector<uint32_t>& rows,
                        std::vector<uint32_t>& slot,
                        std::vector<std::vector<uint32_t>>& tuples) {
    const size_t nslots = tuples.size();
    const size_t tc = tuples[0].size();
    budget.spend(tc * std::max<size_t>(rows.size(), 1));
    std::vector<std::vector<uint32_t>> out(nslots + 1);
    for (size_t t = 0; t < tc; ++t)
      for (uint32_t r : rows) {
        for (size_t s = 0; s < nslots; ++s) out[s].push_back(tuples[s][t]);
        out[nslots].push_back(r);
      }
    slot[ai] = static_cast<uint32_t>(nslots);
    tuples = std::move(out);
  }

  void filter_edge(const JoinEdge& e, const std::vector<uint32_t>& slot,
                   std::vector<std::vector<uint32_t>>& tuples) {
    const size_t tc = tuples[0].size();
    budget.spend(tc);
    std::vector<std::vector<uint32_t>> kept(tuples.size());
    const bool strings = e.a.col->type == ColumnType::String;
    for (size_t t = 0; t < tc; ++t) {
      const uint32_t ra = tuples[slot[e.a.ai]][t];
      const uint32_t rb = tuples[slot[e.b.ai]][t];
      const bool eq = strings ? e.a.col->strs[ra] == e.b.col->strs[rb]
                              : num_key(*e.a.col, ra) == num_key(*e.b.col, rb);
      if (eq)
        for (size_t s = 0; s < tuples.size(); ++s) kept[s].push_back(tuples[s][t]);
    }
    tuples = std::move(kept);
  }

  //-------------------------------------------------------------------------

  uint64_t run_nested_loop() {
    const size_t na = view.aliases.size();
    std::vector<const Table*> tables(na);
    for (uint32_t i = 0; i < na; ++i) tables[i] = alias_table(i);
    Binding b;
    b.tables = tables;
    b.rows.assign(na, 0);

    uint64_t count = 0;
    std::vector<uint32_t> at(na, 0);
    // odometer over all row combinations
    while (true) {
      budget.spend(1);
      bool ok = true;
      for (const ConjunctInfo& c : view.conjuncts)
        if (!ev.eval_pred(c.root, b)) {
          ok = false;
          break;
        }
      if (ok) ++count;
      size_t d = 0;
      for (; d < na; ++d) {
        if (++b.rows[d] < tables[d]->rows) break;
        b.rows[d] = 0;
      }
      if (d == na) break;
    }
    return count;
  }
};

}  // namespace

uint64_t true_cardinality(const QueryDag& dag, const Dataset& data,
                          const TruthConfig& cfg) {
  TruthEval eval(dag, data, cfg.step_budget);
  if (cfg.reference_nested_loop) {
    for (uint32_t ai = 0; ai < eval.view.aliases.size(); ++ai)
      if (eval.alias_table(ai)->rows == 0) return 0;
    return eval.run_nested_loop();
  }
  return eval.run();
}

}  // namespace patcard
