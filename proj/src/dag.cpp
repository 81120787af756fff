#include "patcard/dag.hpp"

#include <algorithm>

namespace patcard {

const char* node_type_name(NodeType t) {
  switch (t) {
    case NodeType::Table: return "table";
    case NodeType::Alias: return "alias";
    case NodeType::Column: return "column";
    case NodeType::Literal: return "literal";
    case NodeType::Op: return "op";
    case NodeType::Function: return "function";
    case NodeType::Join: return "join";
    case NodeType::Scan: return "scan";
  }
  throw InternalError("bad node type");
}

NodeType node_type_from_name(const std::string& name) {
  for (int i = 0; i < kNodeTypeCount; ++i)
    if (name == node_type_name(static_cast<NodeType>(i))) return static_cast<NodeType>(i);
  throw Error("unknown node type: " + name);
}

const std::vector<AttrKey>& attr_universe() {
  static const std::vector<AttrKey> universe = {
      {NodeType::Table, kAttrName},
      {NodeType::Alias, kAttrName},
      {NodeType::Column, kAttrName},
      {NodeType::Column, kAttrType},
      {NodeType::Column, kAttrNumUniques},
      {NodeType::Literal, kAttrValue},
      {NodeType::Literal, kAttrType},
      {NodeType::Op, kAttrCode},
      {NodeType::Function, kAttrName},
  };
  return universe;
}

void require_registered(const AttrKey& key) {
  const auto& u = attr_universe();
  if (std::find(u.begin(), u.end(), key) == u.end())
    throw SchemaError(std::string("unregistered attribute (") + node_type_name(key.type) +
                      ", " + key.name + ")");
}

const std::string& DagNode::attr(const std::string& name) const {
  static const std::string empty;
  auto it = attrs.find(name);
  return it == attrs.end() ? empty : it->second;
}

void DagNode::set(const std::string& name, std::string value) {
  attrs[name] = std::move(value);
}

uint32_t QueryDag::add_node(NodeType type) {
  nodes.push_back(DagNode{type, {}});
  return static_cast<uint32_t>(nodes.size() - 1);
}

void QueryDag::add_edge(uint32_t src, uint32_t dst) { edges.emplace_back(src, dst); }

std::vector<std::vector<uint32_t>> QueryDag::predecessors() const {
  std::vector<std::vector<uint32_t>> pred(nodes.size());
  for (auto [s, d] : edges) pred[d].push_back(s);
  return pred;
}

std::vector<std::vector<uint32_t>> QueryDag::successors() const {
  std::vector<std::vector<uint32_t>> succ(nodes.size());
  for (auto [s, d] : edges) succ[s].push_back(d);
  return succ;
}

std::vector<uint32_t> QueryDag::topo_order(bool reversed) const {
  const size_t n = nodes.size();
  std::vector<uint32_t> indeg(n, 0);
  std::vector<std::vector<uint32_t>> out(n);
  for (auto [s, d] : edges) {
    uint32_t a = reversed ? d : s;
    uint32_t b = reversed ? s : d;
    if (a >= n || b >= n) throw Error("edge endpoint out of range");
    out[a].push_back(b);
    ++indeg[b];
  }
  // Min-heap on ids keeps the order deterministic; the propagated result is
  // the same for every valid order, this is just tidy.
  std::vector<uint32_t> ready;
  for (uint32_t i = 0; i < n; ++i)
    if (indeg[i] == 0) ready.push_back(i);
  std::make_heap(ready.begin(), ready.end(), std::greater<>{});
  std::vector<uint32_t> order;
  order.reserve(n);
  while (!ready.empty()) {
    std::pop_heap(ready.begin(), ready.end(), std::greater<>{});
    uint32_t v = ready.back();
    ready.pop_back();
    order.push_back(v);
    for (uint32_t w : out[v]) {
      if (--indeg[w] == 0) {
        ready.push_back(w);
        std::push_heap(ready.begin(), ready.end(), std::greater<>{});
      }
    }
  }
  if (order.size() != n) throw CycleError("graph contains a cycle");
  return order;
}

void QueryDag::validate() const {
  for (auto [s, d] : edges)
    if (s >= nodes.size() || d >= nodes.size()) throw Error("edge endpoint out of range");
  if (!nodes.empty() && root_id >= nodes.size()) throw Error("root out of range");
  topo_order();
}

QueryDag QueryDag::relabeled(const std::vector<uint32_t>& perm) const {
  if (perm.size() != nodes.size()) throw Error("permutation size mismatch");
  QueryDag out;
  out.nodes.resize(nodes.size());
  std::vector<bool> seen(nodes.size(), false);
  for (size_t i = 0; i < nodes.size(); ++i) {
    uint32_t p = perm[i];
    if (p >= nodes.size() || seen[p]) throw Error("permutation is not a bijection");
    seen[p] = true;
    out.nodes[p] = nodes[i];
  }
  out.edges.reserve(edges.size());
  for (auto [s, d] : edges) out.edges.emplace_back(perm[s], perm[d]);
  out.root_id = nodes.empty() ? 0 : perm[root_id];
  return out;
}

}  // namespace patcard
