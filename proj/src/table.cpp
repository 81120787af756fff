#include "patcard/table.hpp"

#include <algorithm>

namespace patcard {

const Column* Table::find(const std::string& col) const {
  for (size_t i = 0; i < col_names.size(); ++i)
    if (col_names[i] == col) return &cols[i];
  return nullptr;
}

Column* Table::find(const std::string& col) {
  for (size_t i = 0; i < col_names.size(); ++i)
    if (col_names[i] == col) return &cols[i];
  return nullptr;
}

const Table* Dataset::find(const std::string& name) const {
  auto it = tables.find(name);
  return it == tables.end() ? nullptr : &it->second;
}

Table load_csv_table(const std::string& path, const std::string& name,
                     const TableInfo& info) {
  std::vector<std::vector<std::string>> rows = read_csv(path);
  if (rows.empty()) throw IoError("empty csv: " + path);

  Table t;
  t.name = name;
  t.col_names = rows[0];
  if (t.col_names.size() != info.columns.size())
    throw SchemaError(name + ": csv has " + std::to_string(t.col_names.size()) +
                      " columns, schema has " + std::to_string(info.columns.size()));
  for (const std::string& cn : t.col_names) {
    auto it = info.columns.find(cn);
    if (it == info.columns.end())
      throw SchemaError(name + ": csv column not in schema: " + cn);
    Column c;
    c.type = it->second.type;
    t.cols.push_back(std::move(c));
  }

  t.rows = rows.size() - 1;
  for (size_t r = 1; r < rows.size(); ++r) {
    if (rows[r].size() != t.col_names.size())
      throw TypeError("wrong field count", r, "*");
    for (size_t c = 0; c < t.cols.size(); ++c) {
      const std::string& cell = rows[r][c];
      Column& col = t.cols[c];
      switch (col.type) {
        case ColumnType::Int: {
          int64_t v;
          if (!parse_i64(cell, v)) throw TypeError("not an integer: " + cell, r, t.col_names[c]);
          col.ints.push_back(v);
          break;
        }
        case ColumnType::Float: {
          double v;
          if (!parse_f64(cell, v)) throw TypeError("not a number: " + cell, r, t.col_names[c]);
          col.floats.push_back(v);
          break;
        }
        case ColumnType::Date: {
          if (!looks_like_date(cell)) throw TypeError("not a date: " + cell, r, t.col_names[c]);
          col.ints.push_back(parse_date(cell));
          break;
        }
        case ColumnType::String:
          col.strs.push_back(cell);
          break;
      }
    }
  }
  return t;
}

Dataset load_csv_dir(const std::string& dir, const Schema& schema) {
  Dataset d;
  for (const auto& [name, info] : schema.tables)
    d.tables.emplace(name, load_csv_table(dir + "/" + name + ".csv", name, info));
  return d;
}

void write_csv_dir(const Dataset& data, const std::string& dir) {
  for (const auto& [name, t] : data.tables) {
    CsvWriter w(dir + "/" + name + ".csv");
    w.row(t.col_names);
    std::vector<std::string> cells(t.cols.size());
    for (uint64_t r = 0; r < t.rows; ++r) {
      for (size_t c = 0; c < t.cols.size(); ++c) {
        const Column& col = t.cols[c];
        switch (col.type) {
          case ColumnType::Int: cells[c] = std::to_string(col.ints[r]); break;
          case ColumnType::Float: cells[c] = fmt_double(col.floats[r]); break;
          case ColumnType::Date: cells[c] = format_date(col.ints[r]); break;
          case ColumnType::String: cells[c] = col.strs[r]; break;
        }
      }
      w.row(cells);
    }
    w.flush_close();
  }
}

}  // namespace patcard
