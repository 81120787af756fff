#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>

#include "patcard/util.hpp"

namespace patcard {

enum class ColumnType : uint8_t { Int, Float, String, Date };

const char* column_type_name(ColumnType t);
ColumnType column_type_from_name(const std::string& s);

/// Per-column statistics from the schema binding file.  For int/float/date
/// columns `min_num`/`max_num` carry the numeric range (dates as days since
/// epoch); for strings the bounds are lexicographic and live in
/// `min_str`/`max_str`.
struct ColumnInfo {
  ColumnType type = ColumnType::Int;
  double min_num = 0;
  double max_num = 0;
  std::string min_str;
  std::string max_str;
  uint64_t num_uniques = 0;
};

struct TableInfo {
  uint64_t table_size = 0;
  std::map<std::string, ColumnInfo> columns;
};

/// Schema binding: table name -> column name -> {type, min, max,
/// num_uniques, table_size}.
struct Schema {
  std::map<std::string, TableInfo> tables;

  static Schema from_json(const std::string& json_text);
  static Schema load(const std::string& path);
  std::string to_json() const;
  void save(const std::string& path) const;

  const TableInfo* find_table(const std::string& name) const;
  const ColumnInfo* find_column(const std::string& table, const std::string& column) const;
};

}  // namespace patcard
