#include "patcard/sql.hpp"

#include <algorithm>
#include <map>
#include <memory>
#include <set>

namespace patcard {
namespace {

//---------------------------------------------------------------------------
// lexer
//---------------------------------------------------------------------------

enum class Tok { Ident, Int, Float, Str, Punct, End };

struct Token {
  Tok kind;
  std::string text;  // idents lowercased; strings unquoted
  size_t pos;
};

bool ident_start(char c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_';
}
bool ident_char(char c) { return ident_start(c) || (c >= '0' && c <= '9'); }

std::vector<Token> lex(const std::string& s) {
  std::vector<Token> out;
  size_t i = 0;
  const size_t n = s.size();
  while (i < n) {
    char c = s[i];
    if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
      ++i;
      continue;
    }
    size_t start = i;
    if (ident_start(c)) {
      while (i < n && ident_char(s[i])) ++i;
      out.push_back({Tok::Ident, to_lower(std::string_view(s).substr(start, i - start)), start});
      continue;
    }
    if ((c >= '0' && c <= '9') ||
        ((c == '-' || c == '+') && i + 1 < n && s[i + 1] >= '0' && s[i + 1] <= '9')) {
      ++i;
      bool is_float = false;
      while (i < n && ((s[i] >= '0' && s[i] <= '9') || s[i] == '.' || s[i] == 'e' ||
                       s[i] == 'E' || ((s[i] == '-' || s[i] == '+') &&
                                       (s[i - 1] == 'e' || s[i - 1] == 'E')))) {
        if (s[i] == '.' || s[i] == 'e' || s[i] == 'E') is_float = true;
        ++i;
      }
      out.push_back({is_float ? Tok::Float : Tok::Int, s.substr(start, i - start), start});
      continue;
    }
    if (c == '\'') {
      std::string v;
      ++i;
      for (;;) {
        if (i >= n) throw ParseError("unterminated string literal", start);
        if (s[i] == '\'') {
          if (i + 1 < n && s[i + 1] == '\'') {
            v += '\'';
            i += 2;
            continue;
          }
          ++i;
          break;
        }
        v += s[i++];
      }
      out.push_back({Tok::Str, std::move(v), start});
      continue;
    }
    if (c == '<' && i + 1 < n && (s[i + 1] == '=' || s[i + 1] == '>')) {
      out.push_back({Tok::Punct, s.substr(i, 2), i});
      i += 2;
      continue;
    }
    if (c == '>' && i + 1 < n && s[i + 1] == '=') {
      out.push_back({Tok::Punct, ">=", i});
      i += 2;
      continue;
    }
    if (std::string("(),.=<>;*").find(c) != std::string::npos) {
      out.push_back({Tok::Punct, std::string(1, c), i});
      ++i;
      continue;
    }
    throw ParseError(std::string("unexpected character '") + c + "'", i);
  }
  out.push_back({Tok::End, "", n});
  return out;
}

//---------------------------------------------------------------------------
// ast
//---------------------------------------------------------------------------

struct Ast {
  enum class K { Col, Lit, Func, Cmp, In, Junc };
  K k;
  size_t pos = 0;

  // Col
  std::string alias;   // empty when the reference is unqualified
  std::string column;
  int alias_idx = -1;

  // Lit
  std::string text;
  ColumnType lit_type = ColumnType::Int;

  // Func / Cmp / In / Junc: children. Cmp: [lhs, rhs]; In: [lhs, elems...].
  std::string name;  // function name, comparison code, "in", "and", "or"
  std::vector<std::unique_ptr<Ast>> kids;
};

using AstPtr = std::unique_ptr<Ast>;

struct TableRef {
  std::string table;
  std::string alias;
};

struct ParsedStatement {
  std::vector<TableRef> tables;
  std::vector<AstPtr> conjuncts;  // ON predicates then WHERE conjuncts
};

//---------------------------------------------------------------------------
// parser
//---------------------------------------------------------------------------

struct Parser {
  const std::vector<Token>& t;
  size_t i = 0;

  const Token& cur() const { return t[i]; }
  bool is_kw(const char* kw) const { return cur().kind == Tok::Ident && cur().text == kw; }
  bool is_punct(const char* p) const { return cur().kind == Tok::Punct && cur().text == p; }
  void advance() { ++i; }

  void expect_kw(const char* kw) {
    if (!is_kw(kw)) throw ParseError(std::string("expected ") + kw, cur().pos);
    advance();
  }
  void expect_punct(const char* p) {
    if (!is_punct(p)) throw ParseError(std::string("expected '") + p + "'", cur().pos);
    advance();
  }
  std::string expect_ident(const char* what) {
    if (cur().kind != Tok::Ident) throw ParseError(std::string("expected ") + what, cur().pos);
    std::string s = cur().text;
    advance();
    return s;
  }

  ParsedStatement parse() {
    ParsedStatement st;
    expect_kw("select");
    skip_select_list();
    expect_kw("from");
    std::vector<AstPtr> on_preds;
    st.tables.push_back(table_ref());
    for (;;) {
      if (is_punct(",")) {
        advance();
        st.tables.push_back(table_ref());
      } else if (is_kw("inner") || is_kw("join")) {
        if (is_kw("inner")) advance();
        expect_kw("join");
        st.tables.push_back(table_ref());
        expect_kw("on");
        append_conjuncts(on_preds, expr());
      } else {
        break;
      }
    }
    st.conjuncts = std::move(on_preds);
    if (is_kw("where")) {
      advance();
      append_conjuncts(st.conjuncts, expr());
    }
    if (is_punct(";")) advance();
    if (cur().kind != Tok::End) throw ParseError("trailing input after statement", cur().pos);
    return st;
  }

  // The select list never affects cardinality; accept anything up to FROM.
  void skip_select_list() {
    int depth = 0;
    while (!(depth == 0 && is_kw("from"))) {
      if (cur().kind == Tok::End) throw ParseError("expected FROM", cur().pos);
      if (is_punct("(")) ++depth;
      if (is_punct(")")) --depth;
      advance();
    }
  }

  TableRef table_ref() {
    TableRef r;
    r.table = expect_ident("table name");
    if (is_kw("as")) {
      advance();
      r.alias = expect_ident("alias");
    } else if (cur().kind == Tok::Ident && !reserved(cur().text)) {
      r.alias = cur().text;
      advance();
    } else {
      r.alias = r.table;
    }
    return r;
  }

  static bool reserved(const std::string& s) {
    static const std::set<std::string> kws = {"select", "from",  "where", "and", "or",
                                              "in",     "inner", "join",  "on",  "as"};
    return kws.count(s) > 0;
  }

  static void append_conjuncts(std::vector<AstPtr>& out, AstPtr e) {
    if (e->k == Ast::K::Junc && e->name == "and") {
      for (auto& kid : e->kids) out.push_back(std::move(kid));
    } else {
      out.push_back(std::move(e));
    }
  }

  AstPtr expr() {
    AstPtr lhs = and_chain();
    if (!is_kw("or")) return lhs;
    auto node = std::make_unique<Ast>();
    node->k = Ast::K::Junc;
    node->name = "or";
    node->pos = cur().pos;
    splice(*node, std::move(lhs));
    while (is_kw("or")) {
      advance();
      splice(*node, and_chain());
    }
    return node;
  }

  AstPtr and_chain() {
    AstPtr lhs = primary();
    if (!is_kw("and")) return lhs;
    auto node = std::make_unique<Ast>();
    node->k = Ast::K::Junc;
    node->name = "and";
    node->pos = cur().pos;
    splice(*node, std::move(lhs));
    while (is_kw("and")) {
      advance();
      splice(*node, primary());
    }
    return node;
  }

  // Junctions are n-ary: a nested child of the same code melts into the
  // parent so (p AND q) AND r has one AND node with three children.
  static void splice(Ast& junc, AstPtr child) {
    if (child->k == Ast::K::Junc && child->name == junc.name) {
      for (auto& kid : child->kids) junc.kids.push_back(std::move(kid));
    } else {
      junc.kids.push_back(std::move(child));
    }
  }

  AstPtr primary() {
    if (is_punct("(")) {
      advance();
      AstPtr e = expr();
      expect_punct(")");
      return e;
    }
    AstPtr lhs = operand();
    if (is_kw("in")) {
      size_t pos = cur().pos;
      advance();
      expect_punct("(");
      auto node = std::make_unique<Ast>();
      node->k = Ast::K::In;
      node->name = "in";
      node->pos = pos;
      node->kids.push_back(std::move(lhs));
      node->kids.push_back(literal());
      while (is_punct(",")) {
        advance();
        node->kids.push_back(literal());
      }
      expect_punct(")");
      return node;
    }
    static const char* cmps[] = {"=", "<", "<=", ">", ">=", "<>"};
    for (const char* c : cmps) {
      if (is_punct(c)) {
        size_t pos = cur().pos;
        advance();
        auto node = std::make_unique<Ast>();
        node->k = Ast::K::Cmp;
        node->name = c;
        node->pos = pos;
        node->kids.push_back(std::move(lhs));
        node->kids.push_back(operand());
        normalize_cmp(*node);
        return node;
      }
    }
    throw ParseError("expected comparison operator", cur().pos);
  }

  // Keeps the column on the left of literal comparisons so that `5 < x` and
  // `x > 5` build the same DAG.
  static void normalize_cmp(Ast& cmp) {
    if (cmp.kids[0]->k == Ast::K::Lit && cmp.kids[1]->k != Ast::K::Lit) {
      std::swap(cmp.kids[0], cmp.kids[1]);
      if (cmp.name == "<")
        cmp.name = ">";
      else if (cmp.name == ">")
        cmp.name = "<";
      else if (cmp.name == "<=")
        cmp.name = ">=";
      else if (cmp.name == ">=")
        cmp.name = "<=";
    }
  }

  AstPtr operand() {
    if (cur().kind == Tok::Ident && !reserved(cur().text)) {
      size_t pos = cur().pos;
      std::string first = cur().text;
      advance();
      if (is_punct("(")) {
        advance();
        auto node = std::make_unique<Ast>();
        node->k = Ast::K::Func;
        node->name = first;
        node->pos = pos;
        if (!is_punct(")")) {
          node->kids.push_back(operand());
          while (is_punct(",")) {
            advance();
            node->kids.push_back(operand());
          }
        }
        expect_punct(")");
        return node;
      }
      auto node = std::make_unique<Ast>();
      node->k = Ast::K::Col;
      node->pos = pos;
      if (is_punct(".")) {
        advance();
        node->alias = first;
        node->column = expect_ident("column name");
      } else {
        node->column = first;
      }
      return node;
    }
    return literal();
  }

  AstPtr literal() {
    const Token& tok = cur();
    auto node = std::make_unique<Ast>();
    node->k = Ast::K::Lit;
    node->pos = tok.pos;
    switch (tok.kind) {
      case Tok::Int: {
        int64_t v;
        if (!parse_i64(tok.text, v)) throw ParseError("bad integer literal", tok.pos);
        node->text = std::to_string(v);
        node->lit_type = ColumnType::Int;
        break;
      }
      case Tok::Float: {
        double v;
        if (!parse_f64(tok.text, v)) throw ParseError("bad numeric literal", tok.pos);
        node->text = fmt_double(v);
        node->lit_type = ColumnType::Float;
        break;
      }
      case Tok::Str:
        node->text = tok.text;
        node->lit_type = looks_like_date(tok.text) ? ColumnType::Date : ColumnType::String;
        break;
      default:
        throw ParseError("expected literal", tok.pos);
    }
    advance();
    return node;
  }
};

//---------------------------------------------------------------------------
// binding
//---------------------------------------------------------------------------

struct FuncSig {
  ColumnType arg;
  ColumnType result;
};

const std::map<std::string, FuncSig>& function_registry() {
  static const std::map<std::string, FuncSig> reg = {
      {"abs", {ColumnType::Float, ColumnType::Float}},
      {"lower", {ColumnType::String, ColumnType::String}},
      {"upper", {ColumnType::String, ColumnType::String}},
      {"length", {ColumnType::String, ColumnType::Int}},
      {"year", {ColumnType::Date, ColumnType::Int}},
      {"month", {ColumnType::Date, ColumnType::Int}},
      {"day", {ColumnType::Date, ColumnType::Int}},
  };
  return reg;
}

bool numeric(ColumnType t) { return t == ColumnType::Int || t == ColumnType::Float; }

struct Binder {
  const ParsedStatement& st;
  const Schema* schema;

  int resolve_alias(const std::string& name, size_t pos) const {
    for (size_t a = 0; a < st.tables.size(); ++a)
      if (st.tables[a].alias == name) return static_cast<int>(a);
    throw SemanticError("unknown alias: " + name);
    (void)pos;
  }

  // Returns the operand's value type; unbound columns report their lexical
  // neighbors' demands instead, so type checks only run with a schema.
  ColumnType bind(Ast& a) {
    switch (a.k) {
      case Ast::K::Col: {
        if (!a.alias.empty()) {
          a.alias_idx = resolve_alias(a.alias, a.pos);
        } else {
          a.alias_idx = resolve_bare_column(a);
        }
        if (!schema) return ColumnType::Int;
        const TableRef& tr = st.tables[a.alias_idx];
        const ColumnInfo* ci = schema->find_column(tr.table, a.column);
        if (!ci)
          throw SemanticError("unknown column " + tr.table + "." + a.column);
        return ci->type;
      }
      case Ast::K::Lit:
        return a.lit_type;
      case Ast::K::Func: {
        auto it = function_registry().find(a.name);
        if (it == function_registry().end())
          throw SemanticError("unknown function: " + a.name);
        if (a.kids.size() != 1)
          throw SemanticError("function " + a.name + " takes one argument");
        ColumnType at = bind(*a.kids[0]);
        if (schema) {
          if (it->second.arg == ColumnType::Float ? !numeric(at) : at != it->second.arg)
            throw SemanticError("bad argument type for " + a.name);
          if (a.name == "abs") return at;
        }
        return it->second.result;
      }
      case Ast::K::Cmp: {
        ColumnType lt = bind(*a.kids[0]);
        check_operand_pair(a, lt, *a.kids[1]);
        return ColumnType::Int;
      }
      case Ast::K::In: {
        ColumnType lt = bind(*a.kids[0]);
        for (size_t i = 1; i < a.kids.size(); ++i) check_operand_pair(a, lt, *a.kids[i]);
        return ColumnType::Int;
      }
      case Ast::K::Junc:
        for (auto& kid : a.kids) bind(*kid);
        return ColumnType::Int;
    }
    throw InternalError("unreachable");
  }

  int resolve_bare_column(const Ast& a) const {
    if (st.tables.size() == 1) return 0;
    if (!schema)
      throw SemanticError("unqualified column " + a.column +
                          " is ambiguous without a schema");
    int found = -1;
    for (size_t t = 0; t < st.tables.size(); ++t) {
      if (schema->find_column(st.tables[t].table, a.column)) {
        if (found >= 0) throw SemanticError("ambiguous column: " + a.column);
        found = static_cast<int>(t);
      }
    }
    if (found < 0) throw SemanticError("unknown column: " + a.column);
    return found;
  }

  // Binds rhs and, with a schema, coerces literals to the lhs type (string
  // literals become dates against date columns) or rejects the mismatch.
  void check_operand_pair(Ast& parent, ColumnType lt, Ast& rhs) {
    ColumnType rt = bind(rhs);
    if (!schema) return;
    if (rhs.k == Ast::K::Lit) {
      switch (lt) {
        case ColumnType::Int:
        case ColumnType::Float:
          if (!numeric(rt))
            throw SemanticError("numeric comparison against non-numeric literal");
          return;
        case ColumnType::Date:
          if (rt == ColumnType::Date) return;
          if (rt == ColumnType::String && looks_like_date(rhs.text)) {
            rhs.lit_type = ColumnType::Date;
            return;
          }
          throw SemanticError("date comparison against non-date literal");
        case ColumnType::String:
          if (rt == ColumnType::String || rt == ColumnType::Date) {
            rhs.lit_type = ColumnType::String;
            return;
          }
          throw SemanticError("string comparison against non-string literal");
      }
    }
    bool ok = (numeric(lt) && numeric(rt)) || lt == rt;
    if (!ok) throw SemanticError("type mismatch in comparison");
    (void)parent;
  }

  void run(std::vector<AstPtr>& conjuncts) {
    if (schema) {
      for (const TableRef& tr : st.tables)
        if (!schema->find_table(tr.table))
          throw SemanticError("unknown table: " + tr.table);
    }
    for (auto& c : conjuncts) bind(*c);
  }
};

//---------------------------------------------------------------------------
// dag construction
//---------------------------------------------------------------------------

struct DagBuilder {
  const ParsedStatement& st;
  const Schema* schema;
  QueryDag dag;
  std::map<std::string, uint32_t> table_nodes;        // merged by table name
  std::vector<uint32_t> alias_nodes;                  // per alias index
  std::map<std::pair<int, std::string>, uint32_t> column_nodes;

  void emit_alias(size_t a) {
    const TableRef& tr = st.tables[a];
    auto it = table_nodes.find(tr.table);
    uint32_t tnode;
    if (it == table_nodes.end()) {
      tnode = dag.add_node(NodeType::Table);
      dag.nodes[tnode].set(kAttrName, tr.table);
      table_nodes.emplace(tr.table, tnode);
    } else {
      tnode = it->second;
    }
    uint32_t anode = dag.add_node(NodeType::Alias);
    dag.nodes[anode].set(kAttrName, tr.alias);
    dag.add_edge(tnode, anode);
    alias_nodes.push_back(anode);
  }

  void collect_columns(const Ast& a, std::vector<std::pair<int, std::string>>& order) {
    if (a.k == Ast::K::Col) {
      std::pair<int, std::string> key{a.alias_idx, a.column};
      if (!column_nodes.count(key)) {
        column_nodes.emplace(key, 0);  // placeholder, keeps first-use order
        order.push_back(key);
      }
      return;
    }
    for (const auto& kid : a.kids) collect_columns(*kid, order);
  }

  void emit_columns(const std::vector<AstPtr>& conjuncts) {
    std::vector<std::pair<int, std::string>> order;
    for (const auto& c : conjuncts) collect_columns(*c, order);
    for (const auto& key : order) {
      uint32_t cnode = dag.add_node(NodeType::Column);
      DagNode& node = dag.nodes[cnode];
      node.set(kAttrName, key.second);
      if (schema) {
        const ColumnInfo* ci =
            schema->find_column(st.tables[key.first].table, key.second);
        node.set(kAttrType, column_type_name(ci->type));
        node.set(kAttrNumUniques, std::to_string(ci->num_uniques));
      }
      dag.add_edge(alias_nodes[key.first], cnode);
      column_nodes[key] = cnode;
    }
  }

  uint32_t emit_expr(const Ast& a) {
    switch (a.k) {
      case Ast::K::Col:
        return column_nodes.at({a.alias_idx, a.column});
      case Ast::K::Lit: {
        uint32_t id = dag.add_node(NodeType::Literal);
        dag.nodes[id].set(kAttrValue, a.text);
        dag.nodes[id].set(kAttrType, column_type_name(a.lit_type));
        return id;
      }
      case Ast::K::Func: {
        std::vector<uint32_t> kids;
        for (const auto& kid : a.kids) kids.push_back(emit_expr(*kid));
        uint32_t id = dag.add_node(NodeType::Function);
        dag.nodes[id].set(kAttrName, a.name);
        for (uint32_t k : kids) dag.add_edge(k, id);
        return id;
      }
      case Ast::K::Cmp:
      case Ast::K::In:
      case Ast::K::Junc: {
        std::vector<uint32_t> kids;
        for (const auto& kid : a.kids) kids.push_back(emit_expr(*kid));
        uint32_t id = dag.add_node(NodeType::Op);
        dag.nodes[id].set(kAttrCode, a.name);
        for (uint32_t k : kids) dag.add_edge(k, id);
        return id;
      }
    }
    throw InternalError("unreachable");
  }

  QueryDag build(const std::vector<AstPtr>& conjuncts) {
    for (size_t a = 0; a < st.tables.size(); ++a) emit_alias(a);
    emit_columns(conjuncts);
    std::vector<uint32_t> roots;
    for (const auto& c : conjuncts) roots.push_back(emit_expr(*c));
    if (roots.size() >= 2) {
      uint32_t junction = dag.add_node(NodeType::Op);
      dag.nodes[junction].set(kAttrCode, "and");
      for (uint32_t r : roots) dag.add_edge(r, junction);
      dag.root_id = junction;
    } else if (roots.size() == 1) {
      dag.root_id = roots[0];
    } else {
      dag.root_id = alias_nodes[0];
    }
    return std::move(dag);
  }
};

}  // namespace

QueryDag parse_sql(const std::string& text, const Schema* schema) {
  std::vector<Token> tokens = lex(text);
  Parser parser{tokens};
  ParsedStatement st = parser.parse();
  Binder binder{st, schema};
  binder.run(st.conjuncts);
  DagBuilder builder{st, schema};
  QueryDag dag = builder.build(st.conjuncts);
  dag.validate();
  return dag;
}

std::vector<std::string> split_statements(const std::string& text) {
  std::vector<std::string> out;
  size_t start = 0;
  while (start <= text.size()) {
    size_t end = text.find('\n', start);
    if (end == std::string::npos) end = text.size();
    std::string line = text.substr(start, end - start);
    size_t comment = line.find("--");
    if (comment != std::string::npos) line.resize(comment);
    size_t a = line.find_first_not_of(" \t\r");
    if (a != std::string::npos) {
      size_t b = line.find_last_not_of(" \t\r");
      out.push_back(line.substr(a, b - a + 1));
    }
    if (end == text.size()) break;
    start = end + 1;
  }
  return out;
}

//---------------------------------------------------------------------------
// introspection and subquery enumeration
//---------------------------------------------------------------------------

uint32_t column_alias(const QueryDag& dag, uint32_t column_node) {
  for (auto [s, d] : dag.edges)
    if (d == column_node && dag.nodes[s].type == NodeType::Alias) return s;
  throw Error("column node has no alias");
}

namespace {

std::vector<uint32_t> reverse_reachable(const std::vector<std::vector<uint32_t>>& pred,
                                        uint32_t from) {
  std::vector<uint32_t> stack{from};
  std::set<uint32_t> seen{from};
  while (!stack.empty()) {
    uint32_t v = stack.back();
    stack.pop_back();
    for (uint32_t p : pred[v])
      if (seen.insert(p).second) stack.push_back(p);
  }
  return std::vector<uint32_t>(seen.begin(), seen.end());
}

ConjunctInfo make_conjunct(const QueryDag& dag,
                           const std::vector<std::vector<uint32_t>>& pred, uint32_t root) {
  ConjunctInfo c;
  c.root = root;
  c.nodes = reverse_reachable(pred, root);
  for (uint32_t v : c.nodes)
    if (dag.nodes[v].type == NodeType::Alias) c.aliases.push_back(v);
  const DagNode& node = dag.nodes[root];
  if (node.type == NodeType::Op && node.attr(kAttrCode) == "=" && pred[root].size() == 2 &&
      c.aliases.size() == 2) {
    uint32_t a = pred[root][0], b = pred[root][1];
    c.equi_join = dag.nodes[a].type == NodeType::Column &&
                  dag.nodes[b].type == NodeType::Column &&
                  column_alias(dag, a) != column_alias(dag, b);
  }
  return c;
}

}  // namespace

DagView inspect_dag(const QueryDag& dag) {
  DagView view;
  if (dag.nodes.empty()) return view;
  auto pred = dag.predecessors();
  for (uint32_t i = 0; i < dag.nodes.size(); ++i) {
    if (dag.nodes[i].type == NodeType::Alias) {
      view.aliases.push_back(i);
      uint32_t tnode = UINT32_MAX;
      for (uint32_t p : pred[i])
        if (dag.nodes[p].type == NodeType::Table) tnode = p;
      if (tnode == UINT32_MAX) throw Error("alias node has no table");
      view.alias_table.push_back(tnode);
    }
  }
  const DagNode& root = dag.nodes[dag.root_id];
  if (root.type == NodeType::Op && root.attr(kAttrCode) == "and") {
    view.junction = dag.root_id;
    for (uint32_t c : pred[dag.root_id]) view.conjuncts.push_back(make_conjunct(dag, pred, c));
  } else if (root.type == NodeType::Op || root.type == NodeType::Function) {
    view.conjuncts.push_back(make_conjunct(dag, pred, dag.root_id));
  }
  return view;
}

namespace {

// Induced sub-DAG on a sorted node set; edges keep their original order.
QueryDag induce(const QueryDag& dag, const std::vector<uint32_t>& nodes, uint32_t root) {
  QueryDag out;
  std::map<uint32_t, uint32_t> remap;
  for (uint32_t v : nodes) {
    remap.emplace(v, static_cast<uint32_t>(out.nodes.size()));
    out.nodes.push_back(dag.nodes[v]);
  }
  for (auto [s, d] : dag.edges) {
    auto si = remap.find(s), di = remap.find(d);
    if (si != remap.end() && di != remap.end()) out.add_edge(si->second, di->second);
  }
  out.root_id = remap.at(root);
  return out;
}

void merge_into(std::set<uint32_t>& acc, const std::vector<uint32_t>& nodes) {
  acc.insert(nodes.begin(), nodes.end());
}

struct UnionFind {
  std::vector<uint32_t> parent;
  explicit UnionFind(size_t n) : parent(n) {
    for (size_t i = 0; i < n; ++i) parent[i] = static_cast<uint32_t>(i);
  }
  uint32_t find(uint32_t v) {
    while (parent[v] != v) v = parent[v] = parent[parent[v]];
    return v;
  }
  void unite(uint32_t a, uint32_t b) { parent[find(a)] = find(b); }
};

}  // namespace

std::vector<SubqueryRecord> enumerate_subqueries(const QueryDag& dag) {
  std::vector<SubqueryRecord> out;
  if (dag.nodes.empty()) return out;
  DagView view = inspect_dag(dag);
  const size_t k = view.aliases.size();
  if (k == 0) return out;

  auto alias_pos = [&](uint32_t alias_node) {
    for (size_t i = 0; i < k; ++i)
      if (view.aliases[i] == alias_node) return i;
    throw InternalError("alias not in view");
  };

  // Constant conjuncts (no column reference) are treated as filters on the
  // first alias so that every predicate lands in exactly one group.
  std::vector<std::vector<const ConjunctInfo*>> singles(k);
  std::vector<const ConjunctInfo*> joins;
  std::vector<const ConjunctInfo*> cross;
  for (const ConjunctInfo& c : view.conjuncts) {
    if (c.equi_join)
      joins.push_back(&c);
    else if (c.aliases.size() >= 2)
      cross.push_back(&c);
    else if (c.aliases.size() == 1)
      singles[alias_pos(c.aliases[0])].push_back(&c);
    else
      singles[0].push_back(&c);
  }

  auto chain = [&](size_t a) {
    return std::vector<uint32_t>{view.alias_table[a], view.aliases[a]};
  };

  auto emit = [&](const std::set<uint32_t>& nodes, uint32_t root, int n_join) {
    SubqueryRecord rec;
    rec.dag = induce(dag, std::vector<uint32_t>(nodes.begin(), nodes.end()), root);
    rec.n_join = n_join;
    out.push_back(std::move(rec));
  };

  // Per-alias subqueries: each conjunct alone, then the whole group; a bare
  // scan when the alias carries no predicate.
  for (size_t a = 0; a < k; ++a) {
    if (singles[a].empty()) {
      std::set<uint32_t> nodes;
      merge_into(nodes, chain(a));
      emit(nodes, view.aliases[a], 0);
      continue;
    }
    for (const ConjunctInfo* c : singles[a]) {
      std::set<uint32_t> nodes;
      merge_into(nodes, c->nodes);
      merge_into(nodes, chain(a));
      emit(nodes, c->root, 0);
    }
    if (singles[a].size() >= 2) {
      std::set<uint32_t> nodes;
      for (const ConjunctInfo* c : singles[a]) merge_into(nodes, c->nodes);
      merge_into(nodes, chain(a));
      nodes.insert(view.junction);
      emit(nodes, view.junction, 0);
    }
  }

  // Join subqueries: connected subsets of the join graph, each with its join
  // predicates, member filters and any cross filter it covers.
  if (joins.empty() || k < 2 || k > 20) return out;
  std::vector<std::pair<size_t, size_t>> join_ends;
  for (const ConjunctInfo* j : joins)
    join_ends.emplace_back(alias_pos(j->aliases[0]), alias_pos(j->aliases[1]));

  std::vector<uint32_t> masks;
  for (uint32_t mask = 1; mask < (1u << k); ++mask) {
    if (__builtin_popcount(mask) < 2) continue;
    UnionFind uf(k);
    for (auto [a, b] : join_ends)
      if ((mask >> a & 1) && (mask >> b & 1)) uf.unite(static_cast<uint32_t>(a), static_cast<uint32_t>(b));
    uint32_t rep = UINT32_MAX;
    bool connected = true;
    for (size_t a = 0; a < k; ++a) {
      if (!(mask >> a & 1)) continue;
      uint32_t r = uf.find(static_cast<uint32_t>(a));
      if (rep == UINT32_MAX)
        rep = r;
      else if (r != rep)
        connected = false;
    }
    if (connected) masks.push_back(mask);
  }
  std::sort(masks.begin(), masks.end(), [](uint32_t a, uint32_t b) {
    int pa = __builtin_popcount(a), pb = __builtin_popcount(b);
    if (pa != pb) return pa < pb;
    return a < b;  // within a size class any fixed order works; mask value is stable
  });

  for (uint32_t mask : masks) {
    std::set<uint32_t> nodes;
    std::vector<uint32_t> roots;
    for (size_t a = 0; a < k; ++a) {
      if (!(mask >> a & 1)) continue;
      merge_into(nodes, chain(a));
      for (const ConjunctInfo* c : singles[a]) {
        merge_into(nodes, c->nodes);
        roots.push_back(c->root);
      }
    }
    for (size_t j = 0; j < joins.size(); ++j) {
      auto [a, b] = join_ends[j];
      if ((mask >> a & 1) && (mask >> b & 1)) {
        merge_into(nodes, joins[j]->nodes);
        roots.push_back(joins[j]->root);
      }
    }
    for (const ConjunctInfo* c : cross) {
      bool covered = true;
      for (uint32_t al : c->aliases)
        if (!(mask >> alias_pos(al) & 1)) covered = false;
      if (covered) {
        merge_into(nodes, c->nodes);
        roots.push_back(c->root);
      }
    }
    uint32_t root;
    if (roots.size() >= 2) {
      nodes.insert(view.junction);
      root = view.junction;
    } else {
      root = roots.at(0);
    }
    emit(nodes, root, __builtin_popcount(mask) - 1);
  }
  return out;
}

}  // namespace patcard
