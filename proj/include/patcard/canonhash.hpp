#pragma once

#include <vector>

#include "patcard/dag.hpp"
#include "patcard/util.hpp"

namespace patcard {

using PatternHash = Digest256;
using AttrKeySet = std::vector<AttrKey>;  // ordered

/// Per-node 256-bit hash rows, indexed by node id.
struct NodeHashArray {
  std::vector<Digest256> rows;
};

/// Canonical node ordering: order[rank] = node id, ranks ascending by final
/// hash row.
struct CanonicalOrder {
  std::vector<uint32_t> order;
};

/// Row j hashes the node's type tag, in-degree and out-degree (always
/// included) followed by the values of the pattern attributes that match the
/// node's type, in pattern_feats order, each length-prefixed.  Absent
/// attributes hash as empty strings.
NodeHashArray init_node_hashes(const QueryDag& dag, const AttrKeySet& pattern_feats);

/// Forward pass in topological order, then backward pass over the reversed
/// edges: row_j := H(row_j then the sorted rows of the already-updated
/// neighbors).  Duplicate neighbor rows are kept.  In-place.
void propagate(NodeHashArray& hashes, const QueryDag& dag);

/// Argsort of the final rows (ties: the node's own-attribute hash under the
/// full attribute universe, then node id) and the hash of the concatenated
/// sorted rows.
std::pair<PatternHash, CanonicalOrder> pattern_hash_and_order(const NodeHashArray& hashes,
                                                              const QueryDag& dag);

struct CanonResult {
  PatternHash hash;
  CanonicalOrder order;
};

/// init + propagate + pattern_hash_and_order in one call.
CanonResult canonicalize(const QueryDag& dag, const AttrKeySet& pattern_feats);

}  // namespace patcard
