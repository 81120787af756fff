#include "patcard/schema.hpp"

#include <json.hpp>

namespace patcard {

using nlohmann::json;

const char* column_type_name(ColumnType t) {
  switch (t) {
    case ColumnType::Int: return "int";
    case ColumnType::Float: return "float";
    case ColumnType::String: return "string";
    case ColumnType::Date: return "date";
  }
  throw InternalError("bad column type");
}

ColumnType column_type_from_name(const std::string& s) {
  if (s == "int") return ColumnType::Int;
  if (s == "float") return ColumnType::Float;
  if (s == "string") return ColumnType::String;
  if (s == "date") return ColumnType::Date;
  throw SchemaError("unknown column type: " + s);
}

Schema Schema::from_json(const std::string& json_text) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::exception& e) {
    throw SchemaError(std::string("schema is not valid JSON: ") + e.what());
  }
  if (!root.is_object()) throw SchemaError("schema root must be an object");
  Schema schema;
  for (auto& [tname, tcols] : root.items()) {
    if (!tcols.is_object()) throw SchemaError("table entry must be an object: " + tname);
    TableInfo table;
    bool size_set = false;
    for (auto& [cname, cdef] : tcols.items()) {
      if (!cdef.is_object()) throw SchemaError("column entry must be an object: " + cname);
      ColumnInfo col;
      try {
        col.type = column_type_from_name(cdef.at("type").get<std::string>());
        switch (col.type) {
          case ColumnType::Date:
            col.min_str = cdef.at("min").get<std::string>();
            col.max_str = cdef.at("max").get<std::string>();
            col.min_num = static_cast<double>(parse_date(col.min_str));
            col.max_num = static_cast<double>(parse_date(col.max_str));
            break;
          case ColumnType::String:
            col.min_str = cdef.at("min").get<std::string>();
            col.max_str = cdef.at("max").get<std::string>();
            break;
          default:
            col.min_num = cdef.at("min").get<double>();
            col.max_num = cdef.at("max").get<double>();
        }
        col.num_uniques = cdef.at("num_uniques").get<uint64_t>();
        uint64_t tsize = cdef.at("table_size").get<uint64_t>();
        if (size_set && tsize != table.table_size)
          throw SchemaError("inconsistent table_size in table " + tname);
        table.table_size = tsize;
        size_set = true;
      } catch (const json::exception& e) {
        throw SchemaError("bad column " + tname + "." + cname + ": " + e.what());
      }
      table.columns.emplace(cname, std::move(col));
    }
    schema.tables.emplace(tname, std::move(table));
  }
  return schema;
}

Schema Schema::load(const std::string& path) { return from_json(read_file(path)); }

std::string Schema::to_json() const {
  json root = json::object();
  for (const auto& [tname, table] : tables) {
    json cols = json::object();
    for (const auto& [cname, col] : table.columns) {
      json c;
      c["type"] = column_type_name(col.type);
      switch (col.type) {
        case ColumnType::Date:
        case ColumnType::String:
          c["min"] = col.min_str;
          c["max"] = col.max_str;
          break;
        case ColumnType::Int:
          c["min"] = static_cast<int64_t>(col.min_num);
          c["max"] = static_cast<int64_t>(col.max_num);
          break;
        case ColumnType::Float:
          c["min"] = col.min_num;
          c["max"] = col.max_num;
      }
      c["num_uniques"] = col.num_uniques;
      c["table_size"] = table.table_size;
      cols[cname] = std::move(c);
    }
    root[tname] = std::move(cols);
  }
  return root.dump(2) + "\n";
}

void Schema::save(const std::string& path) const { write_file(path, to_json()); }

const TableInfo* Schema::find_table(const std::string& name) const {
  auto it = tables.find(name);
  return it == tables.end() ? nullptr : &it->second;
}

const ColumnInfo* Schema::find_column(const std::string& table, const std::string& column) const {
  const TableInfo* t = find_table(table);
  if (!t) return nullptr;
  auto it = t->columns.find(column);
  return it == t->columns.end() ? nullptr : &it->second;
}

}  // namespace patcard
