#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "patcard/util.hpp"

namespace patcard {

//---------------------------------------------------------------------------
// node types and attribute keys
//---------------------------------------------------------------------------

/// Closed, totally ordered universe of node types.
enum class NodeType : uint8_t {
  Table = 0,
  Alias = 1,
  Column = 2,
  Literal = 3,
  Op = 4,
  Function = 5,
  Join = 6,
  Scan = 7,
};

constexpr int kNodeTypeCount = 8;

const char* node_type_name(NodeType t);
NodeType node_type_from_name(const std::string& name);

/// A (node type, attribute name) pair.  Only registered keys may be used in
/// pattern or learning feature sets.
struct AttrKey {
  NodeType type;
  std::string name;

  bool operator==(const AttrKey& o) const { return type == o.type && name == o.name; }
  bool operator<(const AttrKey& o) const {
    if (type != o.type) return type < o.type;
    return name < o.name;
  }
};

/// The ordered attribute universe.  Index in this list is the key's rank.
const std::vector<AttrKey>& attr_universe();

/// Throws SchemaError if the key is not registered.
void require_registered(const AttrKey& key);

// Well-known attribute names.
inline const std::string kAttrName = "name";
inline const std::string kAttrType = "type";
inline const std::string kAttrNumUniques = "numUniques";
inline const std::string kAttrValue = "value";
inline const std::string kAttrCode = "code";

//---------------------------------------------------------------------------
// QueryDag
//---------------------------------------------------------------------------

struct DagNode {
  NodeType type;
  /// Attribute values keyed by attribute name (the node's own type is
  /// implicit).  Absent keys read as the empty string.
  std::map<std::string, std::string> attrs;

  const std::string& attr(const std::string& name) const;
  void set(const std::string& name, std::string value);
};

/// Typed, attributed DAG of one (sub)query.  Node ids are 0..n-1; edges are
/// directed (src, dst) pairs.
struct QueryDag {
  std::vector<DagNode> nodes;
  std::vector<std::pair<uint32_t, uint32_t>> edges;
  uint32_t root_id = 0;

  uint32_t add_node(NodeType type);
  void add_edge(uint32_t src, uint32_t dst);

  size_t size() const { return nodes.size(); }

  /// Throws if an edge endpoint is out of range or the edges contain a cycle.
  void validate() const;

  /// Kahn topological order (deterministic: ready nodes dequeue by id).
  /// Throws CycleError when no order exists.
  std::vector<uint32_t> topo_order(bool reversed = false) const;

  std::vector<std::vector<uint32_t>> predecessors() const;
  std::vector<std::vector<uint32_t>> successors() const;

  /// Returns a copy with node ids relabeled as new_id = perm[old_id] (node
  /// list reordered accordingly, edges rewritten).  perm must be a bijection.
  QueryDag relabeled(const std::vector<uint32_t>& perm) const;
};

struct SubqueryRecord {
  QueryDag dag;
  /// Number of table aliases joined minus one; 0 for single-table DAGs.
  int n_join = 0;
  uint64_t true_cardinality = 0;
  bool has_truth = false;
};

}  // namespace patcard
