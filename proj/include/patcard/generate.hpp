#pragma once

#include <string>
#include <vector>

#include "patcard/schema.hpp"
#include "patcard/table.hpp"

#include "json.hpp"

namespace patcard {

//---------------------------------------------------------------------------
// Deterministic synthetic data. Every column draws from its own generator
// stream seeded by `seed ^ fnv1a64("table.column")`, so adding a column
// never shifts another column's values and re-runs are byte-identical.
//
// Column spec kinds:
//   serial        {start}                       consecutive integers
//   uniform_int   {min, max}
//   uniform_float {min, max}
//   lognormal     {mu, sigma, round?}           exp(N(mu, sigma))
//   choice        {values, weights?}            weighted categorical
//   zipf          {n, s}                        ranks 1..n with mass 1/rank^s
//   fk            {table, column, skew?}        references a serial key,
//                                               rows picked zipf(skew)
//   derived       {source, mode, ...}           copy | affine | bucket of a
//                                               sibling column, plus noise
//   date_range    {min, max}                    uniform calendar day
//   string_pool   {pool, len}                   pool of random fixed-length
//                                               lowercase strings
//---------------------------------------------------------------------------

struct GeneratedData {
  Dataset data;
  Schema schema;  ///< exact min/max/distinct computed from the values
};

GeneratedData generate_dataset(const nlohmann::json& spec);

/// Generate, then write `<dir>/<table>.csv` for each table plus
/// `<dir>/schema.json`.
void generate_dataset_dir(const nlohmann::json& spec, const std::string& dir);

//---------------------------------------------------------------------------
// Workload synthesis: each template is a SQL string with {param}
// placeholders. Parameters draw per-template streams; the finished list is
// shuffled once. Param kinds: uniform_int, uniform_float, uniform_date,
// choice_int, choice_string (strings and dates substitute as quoted
// literals).
//---------------------------------------------------------------------------

std::vector<std::string> generate_workload(const nlohmann::json& spec);

/// Joins the generated queries with ";\n" line separators for a .sql file.
void generate_workload_file(const nlohmann::json& spec, const std::string& path);

}  // namespace patcard
