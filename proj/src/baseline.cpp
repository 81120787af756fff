#include "patcard/baseline.hpp"

#include <algorithm>
#include <cmath>

#include "patcard/sql.hpp"

namespace patcard {

const TableStats* StatsSet::find_table(const std::string& t) const {
  auto it = tables.find(t);
  return it == tables.end() ? nullptr : &it->second;
}

const ColumnHistogram* StatsSet::find_column(const std::string& t,
                                             const std::string& c) const {
  const TableStats* ts = find_table(t);
  if (!ts) return nullptr;
  auto it = ts->columns.find(c);
  return it == ts->columns.end() ? nullptr : &it->second;
}

//---------------------------------------------------------------------------
// Serialization
//---------------------------------------------------------------------------

nlohmann::json StatsSet::to_json() const {
  nlohmann::json out;
  out["tables"] = nlohmann::json::object();
  for (const auto& [tname, ts] : tables) {
    nlohmann::json jt;
    jt["rows"] = ts.rows;
    jt["columns"] = nlohmann::json::object();
    for (const auto& [cname, h] : ts.columns) {
      nlohmann::json jc;
      jc["type"] = column_type_name(h.type);
      jc["num_distinct"] = h.num_distinct;
      jc["hist_rows"] = h.hist_rows;
      jc["mcvs"] = nlohmann::json::array();
      for (const McvEntry& m : h.mcvs)
        jc["mcvs"].push_back({{"value", m.value}, {"count", m.count}});
      if (h.type == ColumnType::String) {
        jc["bounds"] = h.sbounds;
      } else {
        nlohmann::json jb = nlohmann::json::array();
        for (double b : h.bounds) jb.push_back(fmt_double(b));
        jc["bounds"] = jb;
      }
      jc["counts"] = h.counts;
      jt["columns"][cname] = std::move(jc);
    }
    out["tables"][tname] = std::move(jt);
  }
  return out;
}

StatsSet StatsSet::from_json(const nlohmann::json& j) {
  StatsSet s;
  if (!j.contains("tables") || !j["tables"].is_object())
    throw ConfigError("statistics json lacks a tables object");
  for (const auto& [tname, jt] : j["tables"].items()) {
    TableStats ts;
    ts.rows = jt.at("rows").get<uint64_t>();
    for (const auto& [cname, jc] : jt.at("columns").items()) {
      ColumnHistogram h;
      h.type = column_type_from_name(jc.at("type").get<std::string>());
      h.num_distinct = jc.at("num_distinct").get<uint64_t>();
      h.hist_rows = jc.at("hist_rows").get<uint64_t>();
      for (const auto& jm : jc.at("mcvs"))
        h.mcvs.push_back({jm.at("value").get<std::string>(), jm.at("count").get<uint64_t>()});
      if (h.type == ColumnType::String) {
        h.sbounds = jc.at("bounds").get<std::vector<std::string>>();
      } else {
        for (const auto& jb : jc.at("bounds")) {
          double v;
          if (!parse_f64(jb.get<std::string>(), v))
            throw ConfigError("bad histogram bound");
          h.bounds.push_back(v);
        }
      }
      h.counts = jc.at("counts").get<std::vector<uint64_t>>();
      ts.columns.emplace(cname, std::move(h));
    }
    s.tables.emplace(tname, std::move(ts));
  }
  return s;
}

void StatsSet::save(const std::string& path) const {
  write_file(path, to_json().dump(2) + "\n");
}

StatsSet StatsSet::load(const std::string& path) {
  return from_json(nlohmann::json::parse(read_file(path)));
}

StatsSet StatsSet::from_schema(const Schema& schema) {
  StatsSet s;
  for (const auto& [tname, ti] : schema.tables) {
    TableStats ts;
    ts.rows = ti.table_size;
    for (const auto& [cname, ci] : ti.columns) {
      ColumnHistogram h;
      h.type = ci.type;
      h.num_distinct = std::max<uint64_t>(1, ci.num_uniques);
      h.hist_rows = ti.table_size;
      if (ci.type == ColumnType::String) {
        h.sbounds = {ci.min_str, ci.max_str};
      } else {
        h.bounds = {ci.min_num, ci.max_num};
      }
      h.counts = {ti.table_size};
      ts.columns.emplace(cname, std::move(h));
    }
    s.tables.emplace(tname, std::move(ts));
  }
  return s;
}

//---------------------------------------------------------------------------
// Building histograms from data
//---------------------------------------------------------------------------

namespace {

/// Canonical text for MCV storage and serialization.
std::string value_text(ColumnType type, int64_t i, double f, const std::string& s) {
  switch (type) {
    case ColumnType::Float: return fmt_double(f);
    case ColumnType::String: return s;
    case ColumnType::Date: return format_date(i);
    default: return std::to_string(i);
  }
}

template <typename V>
ColumnHistogram build_histogram(ColumnType type, std::map<V, uint64_t>& freq,
                                uint32_t buckets, uint32_t mcv_limit) {
  ColumnHistogram h;
  h.type = type;
  h.num_distinct = freq.size();

  // MCVs: top by count desc then value asc, counts below 2 don't qualify
  std::vector<std::pair<V, uint64_t>> order(freq.begin(), freq.end());
  std::stable_sort(order.begin(), order.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  for (const auto& [v, c] : order) {
    if (h.mcvs.size() >= mcv_limit || c < 2) break;
    if constexpr (std::is_same_v<V, std::string>)
      h.mcvs.push_back({v, c});
    else if constexpr (std::is_same_v<V, int64_t>)
      h.mcvs.push_back({value_text(type, v, 0, {}), c});
    else
      h.mcvs.push_back({value_text(type, 0, v, {}), c});
    freq.erase(v);
  }

  uint64_t rest = 0;
  for (const auto& [v, c] : freq) rest += c;
  h.hist_rows = rest;
  if (freq.empty()) return h;  // everything was most-common

  // equi-depth edges over the remaining sorted values
  const uint64_t nb = std::min<uint64_t>(buckets, freq.size());
  std::vector<V> edges;
  std::vector<uint64_t> edge_cum;  // rows strictly before each edge value
  uint64_t cum = 0, next_target = 0, bi = 0;
  for (const auto& [v, c] : freq) {
    if (bi < nb && cum >= next_target) {
      edges.push_back(v);
      edge_cum.push_back(cum);
      ++bi;
      next_target = (bi * rest + nb - 1) / nb;  // ceil(bi*rest/nb)
    }
    cum += c;
  }
  // closing edge: the maximum value (buckets are [lo, hi) except the last,
  // which includes its upper edge, so the closing cumulative covers all rows)
  edges.push_back(freq.rbegin()->first);
  edge_cum.push_back(rest);

  for (size_t i = 0; i + 1 < edges.size(); ++i)
    h.counts.push_back(edge_cum[i + 1] - edge_cum[i]);

  for (const V& e : edges) {
    if constexpr (std::is_same_v<V, std::string>)
      h.sbounds.push_back(e);
    else
      h.bounds.push_back(static_cast<double>(e));
  }
  return h;
}

}  // namespace

StatsSet analyze(const Dataset& data, uint32_t buckets, uint32_t mcv_limit) {
  if (buckets == 0) throw ConfigError("histogram needs at least one bucket");
  StatsSet s;
  for (const auto& [tname, table] : data.tables) {
    TableStats ts;
    ts.rows = table.rows;
    for (size_t c = 0; c < table.cols.size(); ++c) {
      const Column& col = table.cols[c];
      ColumnHistogram h;
      if (col.type == ColumnType::Float) {
        std::map<double, uint64_t> freq;
        for (double v : col.floats) ++freq[v];
        h = build_histogram(col.type, freq, buckets, mcv_limit);
      } else if (col.type == ColumnType::String) {
        std::map<std::string, uint64_t> freq;
        for (const std::string& v : col.strs) ++freq[v];
        h = build_histogram(col.type, freq, buckets, mcv_limit);
      } else {
        std::map<int64_t, uint64_t> freq;
        for (int64_t v : col.ints) ++freq[v];
        h = build_histogram(col.type, freq, buckets, mcv_limit);
      }
      ts.columns.emplace(table.col_names[c], std::move(h));
    }
    s.tables.emplace(tname, std::move(ts));
  }
  return s;
}

//---------------------------------------------------------------------------
// Selectivity arithmetic
//---------------------------------------------------------------------------

namespace {

constexpr double kDefaultEq = 0.005;
constexpr double kDefaultRange = 1.0 / 3.0;

double clamp01(double s) { return s < 0 ? 0 : (s > 1 ? 1 : s); }

bool numeric_lit(const DagNode& n, double& out) {
  const std::string& t = n.attr(kAttrType);
  const std::string& raw = n.attr(kAttrValue);
  if (t == "int") {
    int64_t i;
    if (!parse_i64(raw, i)) return false;
    out = static_cast<double>(i);
    return true;
  }
  if (t == "float") return parse_f64(raw, out);
  if (t == "date") {
    if (!looks_like_date(raw)) return false;
    out = static_cast<double>(parse_date(raw));
    return true;
  }
  return false;
}

struct SelEstimator {
  const QueryDag& dag;
  const StatsSet& stats;
  const DagView& view;
  std::vector<std::vector<uint32_t>> pred;

  SelEstimator(const QueryDag& d, const StatsSet& s, const DagView& v)
      : dag(d), stats(s), view(v), pred(d.predecessors()) {}

  const ColumnHistogram* column_stats(uint32_t col_node) const {
    const uint32_t alias = column_alias(dag, col_node);
    for (uint32_t i = 0; i < view.aliases.size(); ++i)
      if (view.aliases[i] == alias)
        return stats.find_column(dag.nodes[view.alias_table[i]].attr(kAttrName),
                                 dag.nodes[col_node].attr(kAttrName));
    return nullptr;
  }

  /// Fraction of a column equal to the literal: exact MCV frequency when
  /// listed, otherwise an even share of the non-MCV mass.
  double eq_fraction(const ColumnHistogram& h, const std::string& lit_text) const {
    const uint64_t total = h.hist_rows + mcv_rows(h);
    if (total == 0) return 0;
    for (const McvEntry& m : h.mcvs)
      if (m.value == lit_text) return static_cast<double>(m.count) / total;
    const uint64_t rest_distinct =
        h.num_distinct > h.mcvs.size() ? h.num_distinct - h.mcvs.size() : 0;
    if (rest_distinct == 0 || h.hist_rows == 0) return 0;
    return static_cast<double>(h.hist_rows) / rest_distinct / total;
  }

  static uint64_t mcv_rows(const ColumnHistogram& h) {
    uint64_t n = 0;
    for (const McvEntry& m : h.mcvs) n += m.count;
    return n;
  }

  /// Fraction of a column strictly below `v` (numeric histograms), with
  /// linear interpolation inside the straddled bucket.
  double below_fraction_hist(const ColumnHistogram& h, double v) const {
    if (h.hist_rows == 0 || h.bounds.size() < 2) return 0;
    double rows = 0;
    for (size_t b = 0; b + 1 < h.bounds.size(); ++b) {
      const double lo = h.bounds[b], hi = h.bounds[b + 1];
      if (v <= lo) break;
      if (v >= hi) {
        rows += static_cast<double>(h.counts[b]);
      } else {
        const double frac = hi > lo ? (v - lo) / (hi - lo) : 0.0;
        rows += frac * static_cast<double>(h.counts[b]);
        break;
      }
    }
    return rows / static_cast<double>(h.hist_rows);
  }

  double below_fraction_str(const ColumnHistogram& h, const std::string& v) const {
    if (h.hist_rows == 0 || h.sbounds.size() < 2) return 0;
    double rows = 0;
    for (size_t b = 0; b + 1 < h.sbounds.size(); ++b) {
      if (v <= h.sbounds[b]) break;
      if (v > h.sbounds[b + 1]) {
        rows += static_cast<double>(h.counts[b]);
      } else {
        rows += 0.5 * static_cast<double>(h.counts[b]);  // no order metric inside
        break;
      }
    }
    return rows / static_cast<double>(h.hist_rows);
  }

  /// Selectivity of column-vs-literal with the given comparison code.
  double cmp_selectivity(uint32_t col_node, const std::string& code,
                         const DagNode& lit) const {
    const ColumnHistogram* h = column_stats(col_node);
    if (!h) return code == "=" ? kDefaultEq : kDefaultRange;
    const uint64_t total = h->hist_rows + mcv_rows(*h);
    if (total == 0) return 0;

    const std::string& lit_text = lit.attr(kAttrValue);
    if (code == "=") return clamp01(eq_fraction(*h, lit_text));
    if (code == "<>") return clamp01(1.0 - eq_fraction(*h, lit_text));

    // range codes: MCVs counted exactly, histogram interpolated
    double mcv_sel = 0;
    double v_num = 0;
    const bool is_num = h->type != ColumnType::String && numeric_lit(lit, v_num);
    for (const McvEntry& m : h->mcvs) {
      bool hit = false;
      if (h->type == ColumnType::String) {
        hit = cmp_text(code, m.value, lit_text);
      } else {
        double mv;
        if (!is_num || !parse_mcv_num(*h, m.value, mv)) continue;
        hit = cmp_num(code, mv, v_num);
      }
      if (hit) mcv_sel += static_cast<double>(m.count) / total;
    }

    double hist_frac;
    if (h->type == ColumnType::String) {
      const double below = below_fraction_str(*h, lit_text);
      const double beloweq = below + eq_hist_share(*h);
      hist_frac = range_from_below(code, below, beloweq);
    } else if (is_num) {
      const double below = below_fraction_hist(*h, v_num);
      const double beloweq = below + eq_hist_share(*h);
      hist_frac = range_from_below(code, below, beloweq);
    } else {
      hist_frac = kDefaultRange;
    }
    const double hist_sel =
        hist_frac * static_cast<double>(h->hist_rows) / static_cast<double>(total);
    return clamp01(mcv_sel + hist_sel);
  }

  /// One distinct value's share of the histogram mass, used to nudge `<=`
  /// above `<` and `>=` above `>`.
  static double eq_hist_share(const ColumnHistogram& h) {
    const uint64_t rest_distinct =
        h.num_distinct > h.mcvs.size() ? h.num_distinct - h.mcvs.size() : 0;
    return rest_distinct == 0 ? 0 : 1.0 / static_cast<double>(rest_distinct);
  }

  static double range_from_below(const std::string& code, double below, double beloweq) {
    if (code == "<") return clamp01(below);
    if (code == "<=") return clamp01(beloweq);
    if (code == ">") return clamp01(1.0 - beloweq);
    if (code == ">=") return clamp01(1.0 - below);
    return kDefaultRange;
  }

  static bool cmp_num(const std::string& code, double a, double b) {
    if (code == "<") return a < b;
    if (code == "<=") return a <= b;
    if (code == ">") return a > b;
    return a >= b;
  }

  static bool cmp_text(const std::string& code, const std::string& a,
                       const std::string& b) {
    if (code == "<") return a < b;
    if (code == "<=") return a <= b;
    if (code == ">") return a > b;
    return a >= b;
  }

  static bool parse_mcv_num(const ColumnHistogram& h, const std::string& text,
                            double& out) {
    if (h.type == ColumnType::Date) {
      if (!looks_like_date(text)) return false;
      out = static_cast<double>(parse_date(text));
      return true;
    }
    return parse_f64(text, out);
  }

  uint64_t distinct_of(uint32_t col_node) const {
    const ColumnHistogram* h = column_stats(col_node);
    return h ? std::max<uint64_t>(1, h->num_distinct) : 1;
  }

  /// Recursive selectivity of one predicate tree.
  double selectivity(uint32_t node) const {
    const DagNode& n = dag.nodes[node];
    if (n.type != NodeType::Op) return 1.0;
    const std::string& code = n.attr(kAttrCode);
    const std::vector<uint32_t>& in = pred[node];

    if (code == "and") {
      double s = 1.0;
      for (uint32_t c : in) s *= selectivity(c);
      return s;
    }
    if (code == "or") {
      double s = 0.0;
      for (uint32_t c : in) {
        const double cs = selectivity(c);
        s = s + cs - s * cs;
      }
      return s;
    }
    if (code == "in") {
      if (in.empty()) return 0;
      double s = 0;
      if (dag.nodes[in[0]].type == NodeType::Column) {
        const ColumnHistogram* h = column_stats(in[0]);
        for (size_t k = 1; k < in.size(); ++k) {
          if (h)
            s += eq_fraction(*h, dag.nodes[in[k]].attr(kAttrValue));
          else
            s += kDefaultEq;
        }
      } else {
        s = kDefaultEq * static_cast<double>(in.size() - 1);
      }
      return clamp01(s);
    }

    // binary comparison
    if (in.size() != 2) return 1.0;
    const NodeType lt = dag.nodes[in[0]].type;
    const NodeType rt = dag.nodes[in[1]].type;
    if (lt == NodeType::Column && rt == NodeType::Literal)
      return cmp_selectivity(in[0], code, dag.nodes[in[1]]);
    if (lt == NodeType::Column && rt == NodeType::Column) {
      const uint64_t nd = std::max(distinct_of(in[0]), distinct_of(in[1]));
      if (code == "=") return 1.0 / static_cast<double>(nd);
      if (code == "<>") return 1.0 - 1.0 / static_cast<double>(nd);
      return kDefaultRange;
    }
    if (lt == NodeType::Literal && rt == NodeType::Literal) {
      // constant predicate: decide it outright
      Sel01 s = const_pred(code, dag.nodes[in[0]], dag.nodes[in[1]]);
      return s == Sel01::True ? 1.0 : (s == Sel01::False ? 0.0 : 1.0);
    }
    // a function operand somewhere: flat defaults
    if (code == "=") return kDefaultEq;
    if (code == "<>") return 1.0 - kDefaultEq;
    return kDefaultRange;
  }

  enum class Sel01 { True, False, Unknown };

  static Sel01 const_pred(const std::string& code, const DagNode& a, const DagNode& b) {
    double x, y;
    if (numeric_lit(a, x) && numeric_lit(b, y)) {
      if (code == "=") return x == y ? Sel01::True : Sel01::False;
      if (code == "<>") return x != y ? Sel01::True : Sel01::False;
      if (code == "<") return x < y ? Sel01::True : Sel01::False;
      if (code == "<=") return x <= y ? Sel01::True : Sel01::False;
      if (code == ">") return x > y ? Sel01::True : Sel01::False;
      if (code == ">=") return x >= y ? Sel01::True : Sel01::False;
    }
    const std::string& sa = a.attr(kAttrValue);
    const std::string& sb = b.attr(kAttrValue);
    if (code == "=") return sa == sb ? Sel01::True : Sel01::False;
    if (code == "<>") return sa != sb ? Sel01::True : Sel01::False;
    return Sel01::Unknown;
  }
};

}  // namespace

double heuristic_estimate(const QueryDag& dag, const StatsSet& stats) {
  DagView view = inspect_dag(dag);
  if (view.aliases.empty()) throw SemanticError("query references no table");
  SelEstimator est(dag, stats, view);

  double total = 1.0;
  for (uint32_t i = 0; i < view.aliases.size(); ++i) {
    const std::string& tname = dag.nodes[view.alias_table[i]].attr(kAttrName);
    const TableStats* ts = stats.find_table(tname);
    if (!ts) throw MissingStats("no statistics for table " + tname);
    total *= static_cast<double>(ts->rows);
  }

  double sel = 1.0;
  for (const ConjunctInfo& c : view.conjuncts) {
    if (c.equi_join) {
      const std::vector<uint32_t>& in = est.pred[c.root];
      const uint64_t nd = std::max(est.distinct_of(in[0]), est.distinct_of(in[1]));
      sel *= 1.0 / static_cast<double>(nd);
    } else {
      sel *= est.selectivity(c.root);
    }
  }

  double out = total * sel;
  if (out > total) out = total;
  if (out < 1.0) out = 1.0;
  return out;
}

}  // namespace patcard
