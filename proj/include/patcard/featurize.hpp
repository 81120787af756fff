#pragma once

#include <optional>
#include <vector>

#include "patcard/canonhash.hpp"
#include "patcard/dag.hpp"
#include "patcard/schema.hpp"

namespace patcard {

/// Extractor library.  Widths: Num 1, Scaled 1, Comp 2, Ascii3 3, Date3 3,
/// TableSize 1, ColumnRange 2, OrdinalOp 3.  LiteralAuto dispatches on the
/// literal's declared type (numeric -> Num, date -> Date3, string -> Ascii3)
/// and OpCode widens OrdinalOp with a one-hot index over a fixed vocabulary
/// of eight non-ordinal codes (width 11).
enum class ExtractorId : uint8_t {
  Num,
  Scaled,
  Comp,
  Ascii3,
  Date3,
  TableSize,
  ColumnRange,
  OrdinalOp,
  LiteralAuto,
  OpCode,
};

const char* extractor_name(ExtractorId id);
ExtractorId extractor_from_name(const std::string& s);

struct FeatureExtractorSpec {
  AttrKey key;
  ExtractorId id;
};

using FeatureSpecSet = std::vector<FeatureExtractorSpec>;  // ordered

/// Width of one extractor application; LiteralAuto needs the node to read
/// the declared literal type.
size_t extractor_dim(ExtractorId id, const DagNode* node);

/// Slot bookkeeping: which node and spec produced which vector range.
struct FeatureSlot {
  uint32_t node;
  uint32_t spec;  // index into the FeatureSpecSet
  uint32_t offset;
  uint32_t width;
};

struct FeatureVector {
  std::vector<double> values;
  PatternHash pattern{};
  size_t dim() const { return values.size(); }
};

/// Concatenates, over nodes in canonical order and specs in set order (type
/// matches only), the extracted values.  Missing attributes contribute zero
/// vectors of the extractor's width.  `schema` is required by Scaled, Comp,
/// TableSize and ColumnRange; SchemaError when stats are absent or the
/// column range is empty.
FeatureVector extract(const QueryDag& dag, const CanonicalOrder& order,
                      const FeatureSpecSet& feats, const Schema* schema,
                      const PatternHash& pattern, std::vector<FeatureSlot>* slots = nullptr);

/// Closed-form output width of extract for this dag.
size_t feature_dim(const QueryDag& dag, const FeatureSpecSet& feats);

/// Pattern attribute sets per hierarchy level (1 coarsest, 3 finest).
AttrKeySet default_pattern_feats(int level);

/// Learning feature sets per hierarchy level.
FeatureSpecSet default_learn_feats(int level);

}  // namespace patcard
