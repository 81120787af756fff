#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "patcard/schema.hpp"
#include "patcard/util.hpp"

namespace patcard {

//---------------------------------------------------------------------------
// Columnar in-memory tables for ground-truth evaluation. Dates are stored
// as day counts in the integer vector so comparisons stay integral.
//---------------------------------------------------------------------------

struct Column {
  ColumnType type = ColumnType::Int;
  std::vector<int64_t> ints;        ///< Int and Date values
  std::vector<double> floats;       ///< Float values
  std::vector<std::string> strs;    ///< String values

  size_t size() const {
    switch (type) {
      case ColumnType::Float: return floats.size();
      case ColumnType::String: return strs.size();
      default: return ints.size();
    }
  }
};

struct Table {
  std::string name;
  uint64_t rows = 0;
  std::vector<std::string> col_names;
  std::vector<Column> cols;

  const Column* find(const std::string& col) const;
  Column* find(const std::string& col);
};

struct Dataset {
  std::map<std::string, Table> tables;

  const Table* find(const std::string& name) const;
};

/// Parse one CSV file whose header names a subset-equal set of `info`'s
/// columns. Cell parse failures raise TypeError carrying the 1-based data
/// row and the column name.
Table load_csv_table(const std::string& path, const std::string& name,
                     const TableInfo& info);

/// Load `<dir>/<table>.csv` for every table in the schema.
Dataset load_csv_dir(const std::string& dir, const Schema& schema);

/// Write `<dir>/<table>.csv` for every table, header row first. Floats are
/// printed shortest-round-trip so a load sees bit-identical values.
void write_csv_dir(const Dataset& data, const std::string& dir);

}  // namespace patcard
