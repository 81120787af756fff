#include "patcard/generate.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <set>

namespace patcard {
namespace {

uint64_t column_seed(uint64_t base, const std::string& table, const std::string& col) {
  return base ^ fnv1a64(table + "." + col);
}

double get_num(const nlohmann::json& j, const char* key) {
  if (!j.contains(key)) throw ConfigError(std::string("column spec needs ") + key);
  return j[key].get<double>();
}

int64_t get_int(const nlohmann::json& j, const char* key) {
  if (!j.contains(key)) throw ConfigError(std::string("column spec needs ") + key);
  return j[key].get<int64_t>();
}

std::string get_str(const nlohmann::json& j, const char* key) {
  if (!j.contains(key)) throw ConfigError(std::string("column spec needs ") + key);
  return j[key].get<std::string>();
}

/// Cumulative 1/rank^s mass for ranks 1..n.
std::vector<double> zipf_cumulative(uint64_t n, double s) {
  if (n == 0) throw ConfigError("zipf needs n >= 1");
  std::vector<double> w(n);
  for (uint64_t k = 0; k < n; ++k) w[k] = 1.0 / std::pow(static_cast<double>(k + 1), s);
  return cumulative_weights(w);
}

struct ColumnPlan {
  std::string name;
  nlohmann::json spec;
};

/// Topological order of one table's columns so `derived` sources exist
/// before their dependents.
std::vector<ColumnPlan> plan_columns(const std::string& tname, const nlohmann::json& jt) {
  std::vector<ColumnPlan> plan;
  std::set<std::string> done;
  std::vector<std::pair<std::string, nlohmann::json>> todo;
  for (const auto& [cname, jc] : jt.at("columns").items()) todo.emplace_back(cname, jc);

  while (!todo.empty()) {
    bool progress = false;
    for (auto it = todo.begin(); it != todo.end();) {
      const std::string kind = it->second.value("kind", "");
      const bool ready = kind != "derived" || done.count(get_str(it->second, "source"));
      if (ready) {
        done.insert(it->first);
        plan.push_back({it->first, it->second});
        it = todo.erase(it);
        progress = true;
      } else {
        ++it;
      }
    }
    if (!progress)
      throw ConfigError(tname + ": derived columns form a cycle or name a missing source");
  }
  return plan;
}

/// Table generation order so `fk` parents come first.
std::vector<std::string> plan_tables(const nlohmann::json& spec) {
  std::vector<std::string> order;
  std::set<std::string> done;
  std::vector<std::string> todo;
  for (const auto& [tname, jt] : spec.at("tables").items()) todo.push_back(tname);

  while (!todo.empty()) {
    bool progress = false;
    for (auto it = todo.begin(); it != todo.end();) {
      bool ready = true;
      for (const auto& [cname, jc] : spec["tables"][*it].at("columns").items()) {
        if (jc.value("kind", "") == "fk" && !done.count(get_str(jc, "table")) &&
            get_str(jc, "table") != *it)
          ready = false;
      }
      if (ready) {
        done.insert(*it);
        order.push_back(*it);
        it = todo.erase(it);
        progress = true;
      } else {
        ++it;
      }
    }
    if (!progress) throw ConfigError("fk references form a cycle across tables");
  }
  return order;
}

ColumnType column_result_type(const nlohmann::json& jc, const Table& partial) {
  const std::string kind = jc.value("kind", "");
  if (jc.contains("type")) return column_type_from_name(jc["type"].get<std::string>());
  if (kind == "serial" || kind == "uniform_int" || kind == "zipf" || kind == "fk")
    return ColumnType::Int;
  if (kind == "uniform_float") return ColumnType::Float;
  if (kind == "lognormal") return jc.value("round", false) ? ColumnType::Int : ColumnType::Float;
  if (kind == "date_range") return ColumnType::Date;
  if (kind == "string_pool") return ColumnType::String;
  if (kind == "choice") {
    const auto& vals = jc.at("values");
    if (vals.empty()) throw ConfigError("choice needs values");
    return vals[0].is_number_integer() ? ColumnType::Int : ColumnType::String;
  }
  if (kind == "derived") {
    const Column* src = partial.find(get_str(jc, "source"));
    if (!src) throw ConfigError("derived source not generated yet");
    const std::string mode = jc.value("mode", "copy");
    if (mode == "bucket") return ColumnType::Int;
    if (mode == "affine") {
      const double scale = jc.value("scale", 1.0);
      const double offset = jc.value("offset", 0.0);
      const bool integral =
          scale == std::floor(scale) && offset == std::floor(offset);
      if (src->type == ColumnType::Float || !integral) return ColumnType::Float;
      return src->type;
    }
    return src->type;
  }
  throw ConfigError("unknown column kind: " + kind);
}

void generate_column(const std::string& tname, const std::string& cname,
                     const nlohmann::json& jc, uint64_t rows, uint64_t base_seed,
                     const Dataset& data, Table& table, Column& out) {
  Rng rng(column_seed(base_seed, tname, cname));
  const std::string kind = jc.value("kind", "");

  if (kind == "serial") {
    const int64_t start = jc.contains("start") ? get_int(jc, "start") : 1;
    for (uint64_t r = 0; r < rows; ++r) out.ints.push_back(start + static_cast<int64_t>(r));
  } else if (kind == "uniform_int") {
    const int64_t lo = get_int(jc, "min"), hi = get_int(jc, "max");
    if (hi < lo) throw ConfigError(cname + ": min exceeds max");
    for (uint64_t r = 0; r < rows; ++r) out.ints.push_back(rng.range(lo, hi));
  } else if (kind == "uniform_float") {
    const double lo = get_num(jc, "min"), hi = get_num(jc, "max");
    if (hi < lo) throw ConfigError(cname + ": min exceeds max");
    for (uint64_t r = 0; r < rows; ++r) out.floats.push_back(lo + rng.unit() * (hi - lo));
  } else if (kind == "lognormal") {
    const double mu = get_num(jc, "mu"), sigma = get_num(jc, "sigma");
    const bool round = jc.value("round", false);
    for (uint64_t r = 0; r < rows; ++r) {
      const double v = std::exp(mu + sigma * rng.gauss());
      if (round)
        out.ints.push_back(static_cast<int64_t>(std::llround(v)));
      else
        out.floats.push_back(v);
    }
  } else if (kind == "choice") {
    const auto& vals = jc.at("values");
    if (vals.empty()) throw ConfigError("choice needs values");
    std::vector<double> w(vals.size(), 1.0);
    if (jc.contains("weights")) {
      w = jc["weights"].get<std::vector<double>>();
      if (w.size() != vals.size()) throw ConfigError("weights do not match values");
    }
    const std::vector<double> cum = cumulative_weights(w);
    for (uint64_t r = 0; r < rows; ++r) {
      const size_t pick = rng.weighted(cum);
      if (out.type == ColumnType::Int)
        out.ints.push_back(vals[pick].get<int64_t>());
      else
        out.strs.push_back(vals[pick].get<std::string>());
    }
  } else if (kind == "zipf") {
    const uint64_t n = static_cast<uint64_t>(get_int(jc, "n"));
    const double s = jc.value("s", 1.0);
    const std::vector<double> cum = zipf_cumulative(n, s);
    for (uint64_t r = 0; r < rows; ++r)
      out.ints.push_back(static_cast<int64_t>(rng.weighted(cum)) + 1);
  } else if (kind == "fk") {
    const std::string ptable = get_str(jc, "table");
    const std::string pcol = get_str(jc, "column");
    const Table* parent = ptable == tname ? &table : data.find(ptable);
    if (!parent) throw ConfigError("fk parent table not generated: " + ptable);
    const Column* keys = parent->find(pcol);
    if (!keys || keys->type != ColumnType::Int)
      throw ConfigError("fk parent column must be an integer column: " + pcol);
    if (keys->ints.empty()) throw ConfigError("fk parent table is empty: " + ptable);
    const double skew = jc.value("skew", 0.0);
    if (skew > 0) {
      const std::vector<double> cum = zipf_cumulative(keys->ints.size(), skew);
      for (uint64_t r = 0; r < rows; ++r)
        out.ints.push_back(keys->ints[rng.weighted(cum)]);
    } else {
      for (uint64_t r = 0; r < rows; ++r)
        out.ints.push_back(keys->ints[rng.below(keys->ints.size())]);
    }
  } else if (kind == "derived") {
    const Column* src = table.find(get_str(jc, "source"));
    if (!src) throw ConfigError("derived source not generated yet");
    const std::string mode = jc.value("mode", "copy");
    const double noise = jc.value("noise", 0.0);
    auto src_val = [&](uint64_t r) {
      return src->type == ColumnType::Float ? src->floats[r]
                                            : static_cast<double>(src->ints[r]);
    };
    for (uint64_t r = 0; r < rows; ++r) {
      double v = src_val(r);
      if (mode == "affine")
        v = v * jc.value("scale", 1.0) + jc.value("offset", 0.0);
      else if (mode == "bucket")
        v = std::floor(v / get_num(jc, "width"));
      else if (mode != "copy")
        throw ConfigError("unknown derived mode: " + mode);
      if (noise > 0) v += (rng.unit() * 2.0 - 1.0) * noise;
      if (out.type == ColumnType::Float)
        out.floats.push_back(v);
      else
        out.ints.push_back(static_cast<int64_t>(std::llround(v)));
    }
  } else if (kind == "date_range") {
    const int64_t lo = parse_date(get_str(jc, "min"));
    const int64_t hi = parse_date(get_str(jc, "max"));
    if (hi < lo) throw ConfigError(cname + ": min exceeds max");
    for (uint64_t r = 0; r < rows; ++r) out.ints.push_back(rng.range(lo, hi));
  } else if (kind == "string_pool") {
    const uint64_t pool = static_cast<uint64_t>(get_int(jc, "pool"));
    const uint64_t len = static_cast<uint64_t>(jc.value("len", 8));
    if (pool == 0) throw ConfigError("string_pool needs pool >= 1");
    std::vector<std::string> words(pool);
    for (std::string& w : words) {
      w.resize(len);
      for (char& ch : w) ch = static_cast<char>('a' + rng.below(26));
    }
    for (uint64_t r = 0; r < rows; ++r) out.strs.push_back(words[rng.below(pool)]);
  } else {
    throw ConfigError("unknown column kind: " + kind);
  }
}

ColumnInfo exact_stats(const Column& col) {
  ColumnInfo ci;
  ci.type = col.type;
  switch (col.type) {
    case ColumnType::Float: {
      std::set<double> uniq(col.floats.begin(), col.floats.end());
      ci.num_uniques = uniq.size();
      if (!uniq.empty()) {
        ci.min_num = *uniq.begin();
        ci.max_num = *uniq.rbegin();
      }
      break;
    }
    case ColumnType::String: {
      std::set<std::string> uniq(col.strs.begin(), col.strs.end());
      ci.num_uniques = uniq.size();
      if (!uniq.empty()) {
        ci.min_str = *uniq.begin();
        ci.max_str = *uniq.rbegin();
      }
      break;
    }
    default: {
      std::set<int64_t> uniq(col.ints.begin(), col.ints.end());
      ci.num_uniques = uniq.size();
      if (!uniq.empty()) {
        ci.min_num = static_cast<double>(*uniq.begin());
        ci.max_num = static_cast<double>(*uniq.rbegin());
        if (col.type == ColumnType::Date) {
          ci.min_str = format_date(*uniq.begin());
          ci.max_str = format_date(*uniq.rbegin());
        }
      }
      break;
    }
  }
  return ci;
}

}  // namespace

GeneratedData generate_dataset(const nlohmann::json& spec) {
  if (!spec.contains("tables") || !spec["tables"].is_object())
    throw ConfigError("dataset spec lacks a tables object");
  const uint64_t base_seed = spec.value("seed", 1ull);

  GeneratedData out;
  for (const std::string& tname : plan_tables(spec)) {
    const nlohmann::json& jt = spec["tables"][tname];
    Table table;
    table.name = tname;
    table.rows = jt.at("rows").get<uint64_t>();

    for (const ColumnPlan& cp : plan_columns(tname, jt)) {
      Column col;
      col.type = column_result_type(cp.spec, table);
      generate_column(tname, cp.name, cp.spec, table.rows, base_seed, out.data,
                      table, col);
      table.col_names.push_back(cp.name);
      table.cols.push_back(std::move(col));
    }
    out.data.tables.emplace(tname, std::move(table));
  }

  for (const auto& [tname, table] : out.data.tables) {
    TableInfo ti;
    ti.table_size = table.rows;
    for (size_t c = 0; c < table.cols.size(); ++c)
      ti.columns.emplace(table.col_names[c], exact_stats(table.cols[c]));
    out.schema.tables.emplace(tname, std::move(ti));
  }
  return out;
}

void generate_dataset_dir(const nlohmann::json& spec, const std::string& dir) {
  GeneratedData g = generate_dataset(spec);
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory: " + dir);
  write_csv_dir(g.data, dir);
  g.schema.save(dir + "/schema.json");
}

//---------------------------------------------------------------------------
// Workload
//---------------------------------------------------------------------------

namespace {

std::string quote_sql(const std::string& s) {
  std::string out = "'";
  for (char ch : s) {
    out += ch;
    if (ch == '\'') out += ch;
  }
  out += "'";
  return out;
}

std::string draw_param(const nlohmann::json& jp, Rng& rng) {
  const std::string kind = jp.value("kind", "");
  if (kind == "uniform_int")
    return std::to_string(rng.range(get_int(jp, "min"), get_int(jp, "max")));
  if (kind == "uniform_float") {
    const double lo = get_num(jp, "min"), hi = get_num(jp, "max");
    return fmt_double(lo + rng.unit() * (hi - lo));
  }
  if (kind == "uniform_date") {
    const int64_t lo = parse_date(get_str(jp, "min"));
    const int64_t hi = parse_date(get_str(jp, "max"));
    return quote_sql(format_date(rng.range(lo, hi)));
  }
  if (kind == "choice_int") {
    const auto& vals = jp.at("values");
    if (vals.empty()) throw ConfigError("choice_int needs values");
    return std::to_string(vals[rng.below(vals.size())].get<int64_t>());
  }
  if (kind == "choice_string") {
    const auto& vals = jp.at("values");
    if (vals.empty()) throw ConfigError("choice_string needs values");
    return quote_sql(vals[rng.below(vals.size())].get<std::string>());
  }
  throw ConfigError("unknown param kind: " + kind);
}

std::string instantiate(const std::string& tmpl, const nlohmann::json& params, Rng& rng) {
  // one draw per parameter per query, in name order, then splice
  std::map<std::string, std::string> drawn;
  for (const auto& [pname, jp] : params.items()) drawn[pname] = draw_param(jp, rng);

  std::string out;
  size_t i = 0;
  while (i < tmpl.size()) {
    if (tmpl[i] == '{') {
      const size_t close = tmpl.find('}', i);
      if (close == std::string::npos) throw ConfigError("unclosed { in template");
      const std::string pname = tmpl.substr(i + 1, close - i - 1);
      auto it = drawn.find(pname);
      if (it == drawn.end()) throw ConfigError("template names unknown param: " + pname);
      out += it->second;
      i = close + 1;
    } else {
      out += tmpl[i++];
    }
  }
  return out;
}

}  // namespace

std::vector<std::string> generate_workload(const nlohmann::json& spec) {
  if (!spec.contains("templates") || !spec["templates"].is_array())
    throw ConfigError("workload spec lacks a templates array");
  const uint64_t base_seed = spec.value("seed", 1ull);
  const uint64_t per = spec.value("queries_per_template", 1ull);

  std::vector<std::string> queries;
  for (const auto& jt : spec["templates"]) {
    const std::string name = jt.at("name").get<std::string>();
    const std::string sql = jt.at("sql").get<std::string>();
    const nlohmann::json params =
        jt.contains("params") ? jt["params"] : nlohmann::json::object();
    const uint64_t count = jt.value("count", per);
    Rng rng(base_seed ^ fnv1a64(name));
    for (uint64_t q = 0; q < count; ++q)
      queries.push_back(instantiate(sql, params, rng));
  }

  // one Fisher-Yates pass so templates interleave
  Rng shuffle_rng(base_seed ^ fnv1a64("shuffle"));
  shuffle_rng.shuffle(queries);
  return queries;
}

void generate_workload_file(const nlohmann::json& spec, const std::string& path) {
  std::string out;
  for (const std::string& q : generate_workload(spec)) {
    out += q;
    out += ";\n";
  }
  write_file(path, out);
}

}  // namespace patcard
