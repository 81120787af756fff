#include "patcard/featurize.hpp"

#include <cmath>

namespace patcard {

const char* extractor_name(ExtractorId id) {
  switch (id) {
    case ExtractorId::Num: return "num";
    case ExtractorId::Scaled: return "scaled";
    case ExtractorId::Comp: return "comp";
    case ExtractorId::Ascii3: return "ascii3";
    case ExtractorId::Date3: return "date3";
    case ExtractorId::TableSize: return "table_size";
    case ExtractorId::ColumnRange: return "column_range";
    case ExtractorId::OrdinalOp: return "ordinal_op";
    case ExtractorId::LiteralAuto: return "literal_auto";
    case ExtractorId::OpCode: return "op_code";
  }
  throw InternalError("bad extractor id");
}

ExtractorId extractor_from_name(const std::string& s) {
  for (int i = 0; i <= static_cast<int>(ExtractorId::OpCode); ++i)
    if (s == extractor_name(static_cast<ExtractorId>(i))) return static_cast<ExtractorId>(i);
  throw ConfigError("unknown extractor: " + s);
}

size_t extractor_dim(ExtractorId id, const DagNode* node) {
  switch (id) {
    case ExtractorId::Num:
    case ExtractorId::Scaled:
    case ExtractorId::TableSize:
      return 1;
    case ExtractorId::Comp:
    case ExtractorId::ColumnRange:
      return 2;
    case ExtractorId::Ascii3:
    case ExtractorId::Date3:
    case ExtractorId::OrdinalOp:
      return 3;
    case ExtractorId::OpCode:
      return 11;
    case ExtractorId::LiteralAuto: {
      const std::string& t = node ? node->attr(kAttrType) : std::string();
      if (t == "date") return 3;
      if (t == "string") return 3;
      return 1;  // numeric and undeclared literals
    }
  }
  throw InternalError("bad extractor id");
}

namespace {

double numeric_value(const std::string& s) {
  int64_t i;
  if (parse_i64(s, i)) return static_cast<double>(i);
  double d;
  if (parse_f64(s, d)) return d;
  if (looks_like_date(s)) return static_cast<double>(parse_date(s));
  throw Error("attribute value is not numeric: " + s);
}

void encode_ordinal(const std::string& code, double* out) {
  out[0] = out[1] = out[2] = 0;
  if (code == "=") out[1] = 1;
  else if (code == ">") out[2] = 1;
  else if (code == ">=") out[1] = out[2] = 1;
  else if (code == "<") out[0] = 1;
  else if (code == "<=") out[0] = out[1] = 1;
}

bool is_ordinal(const std::string& code) {
  return code == "=" || code == "<" || code == "<=" || code == ">" || code == ">=";
}

const char* kNonOrdinalVocab[8] = {"<>", "in", "and", "or", "not", "like", "between", "func"};

void ascii3(const std::string& s, double* out) {
  out[0] = out[1] = out[2] = 0;
  size_t i = 0;
  for (int k = 0; k < 3 && i < s.size(); ++k) {
    unsigned char b = static_cast<unsigned char>(s[i]);
    uint32_t cp = b;
    size_t extra = 0;
    if ((b & 0xe0) == 0xc0) { cp = b & 0x1f; extra = 1; }
    else if ((b & 0xf0) == 0xe0) { cp = b & 0x0f; extra = 2; }
    else if ((b & 0xf8) == 0xf0) { cp = b & 0x07; extra = 3; }
    bool ok = extra > 0;
    for (size_t e = 1; e <= extra && ok; ++e)
      ok = i + e < s.size() && (static_cast<unsigned char>(s[i + e]) & 0xc0) == 0x80;
    if (ok) {
      for (size_t e = 1; e <= extra; ++e)
        cp = (cp << 6) | (static_cast<unsigned char>(s[i + e]) & 0x3f);
      i += extra;
    } else {
      cp = b;  // malformed byte stands alone
    }
    ++i;
    out[k] = static_cast<double>(cp > 127 ? cp % 128 : cp);
  }
}

// Context for literal-side extractors: the comparison the literal feeds and
// the column on its other side.
struct LiteralContext {
  const ColumnInfo* column = nullptr;
  std::string op_code;
};

struct ContextResolver {
  const QueryDag& dag;
  const Schema* schema;
  std::vector<std::vector<uint32_t>> pred, succ;
  bool built = false;

  void build() {
    if (built) return;
    pred = dag.predecessors();
    succ = dag.successors();
    built = true;
  }

  const ColumnInfo* column_stats(uint32_t column_node) {
    if (!schema) return nullptr;
    build();
    uint32_t alias = UINT32_MAX, table = UINT32_MAX;
    for (uint32_t p : pred[column_node])
      if (dag.nodes[p].type == NodeType::Alias) alias = p;
    if (alias == UINT32_MAX) return nullptr;
    for (uint32_t p : pred[alias])
      if (dag.nodes[p].type == NodeType::Table) table = p;
    if (table == UINT32_MAX) return nullptr;
    return schema->find_column(dag.nodes[table].attr(kAttrName),
                               dag.nodes[column_node].attr(kAttrName));
  }

  LiteralContext literal_context(uint32_t lit_node) {
    build();
    LiteralContext ctx;
    for (uint32_t s : succ[lit_node]) {
      if (dag.nodes[s].type != NodeType::Op) continue;
      ctx.op_code = dag.nodes[s].attr(kAttrCode);
      for (uint32_t p : pred[s]) {
        if (dag.nodes[p].type == NodeType::Column) {
          ctx.column = column_stats(p);
          return ctx;
        }
      }
    }
    return ctx;
  }
};

double scaled_fraction(double v, const ColumnInfo* ci, const char* who) {
  if (!ci) throw SchemaError(std::string(who) + ": column statistics unavailable");
  if (ci->type == ColumnType::String)
    throw SchemaError(std::string(who) + ": column range is not numeric");
  if (ci->max_num <= ci->min_num)
    throw SchemaError(std::string(who) + ": column range is empty");
  double s = (v - ci->min_num) / (ci->max_num - ci->min_num);
  return s < 0 ? 0 : (s > 1 ? 1 : s);
}

}  // namespace

FeatureVector extract(const QueryDag& dag, const CanonicalOrder& order,
                      const FeatureSpecSet& feats, const Schema* schema,
                      const PatternHash& pattern, std::vector<FeatureSlot>* slots) {
  for (const FeatureExtractorSpec& f : feats) require_registered(f.key);
  if (order.order.size() != dag.nodes.size())
    throw InternalError("canonical order does not match graph");
  FeatureVector out;
  out.pattern = pattern;
  ContextResolver ctx{dag, schema};

  for (uint32_t node_id : order.order) {
    const DagNode& node = dag.nodes[node_id];
    for (uint32_t spec_idx = 0; spec_idx < feats.size(); ++spec_idx) {
      const FeatureExtractorSpec& spec = feats[spec_idx];
      if (spec.key.type != node.type) continue;
      const size_t width = extractor_dim(spec.id, &node);
      const size_t offset = out.values.size();
      out.values.resize(offset + width, 0.0);
      double* dst = out.values.data() + offset;
      const std::string& value = node.attr(spec.key.name);
      if (!value.empty()) {
        switch (spec.id) {
          case ExtractorId::Num:
            dst[0] = numeric_value(value);
            break;
          case ExtractorId::Scaled: {
            const ColumnInfo* ci = node.type == NodeType::Column
                                       ? ctx.column_stats(node_id)
                                       : ctx.literal_context(node_id).column;
            dst[0] = scaled_fraction(numeric_value(value), ci, "scaled");
            break;
          }
          case ExtractorId::Comp: {
            LiteralContext lc = ctx.literal_context(node_id);
            double s = scaled_fraction(numeric_value(value), lc.column, "comp");
            if (lc.op_code == "<" || lc.op_code == "<=") {
              dst[0] = 0;
              dst[1] = s;
            } else if (lc.op_code == ">" || lc.op_code == ">=") {
              dst[0] = s;
              dst[1] = 1;
            } else {
              dst[0] = dst[1] = s;
            }
            break;
          }
          case ExtractorId::Ascii3:
            ascii3(value, dst);
            break;
          case ExtractorId::Date3: {
            int y, m, d;
            civil_from_days(parse_date(value), y, m, d);
            dst[0] = y;
            dst[1] = m;
            dst[2] = d;
            break;
          }
          case ExtractorId::TableSize: {
            if (!schema) throw SchemaError("table_size: no schema bound");
            const TableInfo* t = schema->find_table(value);
            if (!t) throw SchemaError("table_size: unknown table " + value);
            dst[0] = static_cast<double>(t->table_size);
            break;
          }
          case ExtractorId::ColumnRange: {
            const ColumnInfo* ci = ctx.column_stats(node_id);
            if (!ci) throw SchemaError("column_range: column statistics unavailable");
            if (ci->type == ColumnType::String)
              throw SchemaError("column_range: column range is not numeric");
            dst[0] = ci->min_num;
            dst[1] = ci->max_num;
            break;
          }
          case ExtractorId::OrdinalOp:
            encode_ordinal(value, dst);
            break;
          case ExtractorId::OpCode:
            if (is_ordinal(value)) {
              encode_ordinal(value, dst);
            } else {
              for (int k = 0; k < 8; ++k)
                if (value == kNonOrdinalVocab[k]) dst[3 + k] = 1;
            }
            break;
          case ExtractorId::LiteralAuto: {
            const std::string& t = node.attr(kAttrType);
            if (t == "date") {
              int y, m, d;
              civil_from_days(parse_date(value), y, m, d);
              dst[0] = y;
              dst[1] = m;
              dst[2] = d;
            } else if (t == "string") {
              ascii3(value, dst);
            } else {
              dst[0] = numeric_value(value);
            }
            break;
          }
        }
      }
      if (slots)
        slots->push_back({node_id, spec_idx, static_cast<uint32_t>(offset),
                          static_cast<uint32_t>(width)});
    }
  }
  for (double v : out.values)
    if (!std::isfinite(v)) throw Error("non-finite feature value");
  return out;
}

size_t feature_dim(const QueryDag& dag, const FeatureSpecSet& feats) {
  size_t dim = 0;
  for (const DagNode& node : dag.nodes)
    for (const FeatureExtractorSpec& spec : feats)
      if (spec.key.type == node.type) dim += extractor_dim(spec.id, &node);
  return dim;
}

AttrKeySet default_pattern_feats(int level) {
  if (level < 1 || level > 3) throw ConfigError("level must be 1, 2 or 3");
  AttrKeySet h = {{NodeType::Table, kAttrName}, {NodeType::Column, kAttrType}};
  if (level >= 2) h.push_back({NodeType::Column, kAttrName});
  if (level >= 3) h.push_back({NodeType::Op, kAttrCode});
  return h;
}

FeatureSpecSet default_learn_feats(int level) {
  if (level < 1 || level > 3) throw ConfigError("level must be 1, 2 or 3");
  FeatureSpecSet f = {{{NodeType::Literal, kAttrValue}, ExtractorId::LiteralAuto}};
  if (level <= 2) f.push_back({{NodeType::Op, kAttrCode}, ExtractorId::OpCode});
  if (level <= 1) f.push_back({{NodeType::Column, kAttrNumUniques}, ExtractorId::Num});
  return f;
}

}  // namespace patcard
