#pragma once

#include <cstdint>

#include "patcard/dag.hpp"
#include "patcard/table.hpp"

namespace patcard {

//---------------------------------------------------------------------------
// Exact cardinality of a subquery graph against an in-memory dataset.
//
// The default path filters each referenced table with per-predicate bitmaps
// and then runs progressive hash joins over the surviving row ids; cross
// filters that touch several tables are applied to the joined tuples. The
// nested-loop path evaluates the whole predicate tree per row combination
// and exists as a slow independent reference for differential tests.
//---------------------------------------------------------------------------

struct TruthConfig {
  uint64_t step_budget = 1000000000ull;  ///< rows touched before BudgetExceeded
  bool reference_nested_loop = false;
};

uint64_t true_cardinality(const QueryDag& dag, const Dataset& data,
                          const TruthConfig& cfg = {});

}  // namespace patcard
