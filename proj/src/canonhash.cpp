#include "patcard/canonhash.hpp"

#include <algorithm>

namespace patcard {
namespace {

Digest256 node_attr_hash(Sha256& h, const QueryDag& dag, uint32_t j,
                         const AttrKeySet& pattern_feats, uint32_t indeg, uint32_t outdeg) {
  const DagNode& node = dag.nodes[j];
  unsigned char tag = static_cast<unsigned char>(node.type);
  h.update(&tag, 1);
  h.update_u32(indeg);
  h.update_u32(outdeg);
  for (const AttrKey& key : pattern_feats) {
    if (key.type != node.type) continue;
    h.update_sized(node.attr(key.name));
  }
  return h.finish();
}

}  // namespace

NodeHashArray init_node_hashes(const QueryDag& dag, const AttrKeySet& pattern_feats) {
  for (const AttrKey& key : pattern_feats) require_registered(key);
  const size_t n = dag.nodes.size();
  std::vector<uint32_t> indeg(n, 0), outdeg(n, 0);
  for (auto [s, d] : dag.edges) {
    ++outdeg[s];
    ++indeg[d];
  }
  NodeHashArray out;
  out.rows.resize(n);
  thread_local Sha256 h;
  for (uint32_t j = 0; j < n; ++j)
    out.rows[j] = node_attr_hash(h, dag, j, pattern_feats, indeg[j], outdeg[j]);
  return out;
}

void propagate(NodeHashArray& hashes, const QueryDag& dag) {
  const size_t n = dag.nodes.size();
  if (hashes.rows.size() != n) throw InternalError("hash array does not match graph");
  thread_local Sha256 h;
  std::vector<Digest256> neigh;

  auto pass = [&](const std::vector<uint32_t>& order,
                  const std::vector<std::vector<uint32_t>>& in_neighbors) {
    for (uint32_t j : order) {
      neigh.clear();
      for (uint32_t k : in_neighbors[j]) neigh.push_back(hashes.rows[k]);
      std::sort(neigh.begin(), neigh.end());
      h.update(hashes.rows[j].data(), 32);
      for (const Digest256& r : neigh) h.update(r.data(), 32);
      hashes.rows[j] = h.finish();
    }
  };

  pass(dag.topo_order(false), dag.predecessors());
  pass(dag.topo_order(true), dag.successors());
}

std::pair<PatternHash, CanonicalOrder> pattern_hash_and_order(const NodeHashArray& hashes,
                                                              const QueryDag& dag) {
  const size_t n = hashes.rows.size();
  CanonicalOrder order;
  order.order.resize(n);
  for (uint32_t i = 0; i < n; ++i) order.order[i] = i;
  std::sort(order.order.begin(), order.order.end(), [&](uint32_t a, uint32_t b) {
    if (hashes.rows[a] != hashes.rows[b]) return hashes.rows[a] < hashes.rows[b];
    return a < b;
  });

  // Ties between distinct nodes are resolved by the node's own-attribute
  // hash under the full attribute universe, so equal-row nodes line up by
  // their learning-relevant values rather than by arbitrary input ids.
  // (Neighborhood-propagated tie keys would leak alias names into literal
  // ordering and break feature alignment under alias renames.)
  std::vector<Digest256> full;
  bool have_full = false;
  auto full_key = [&](uint32_t j) -> const Digest256& {
    if (!have_full) {
      const AttrKeySet& universe = attr_universe();
      std::vector<uint32_t> indeg(n, 0), outdeg(n, 0);
      for (auto [s, d] : dag.edges) {
        ++outdeg[s];
        ++indeg[d];
      }
      full.resize(n);
      thread_local Sha256 h;
      for (uint32_t v = 0; v < n; ++v)
        full[v] = node_attr_hash(h, dag, v, universe, indeg[v], outdeg[v]);
      have_full = true;
    }
    return full[j];
  };
  for (size_t lo = 0; lo < n;) {
    size_t hi = lo + 1;
    while (hi < n && hashes.rows[order.order[hi]] == hashes.rows[order.order[lo]]) ++hi;
    if (hi - lo > 1) {
      std::sort(order.order.begin() + lo, order.order.begin() + hi,
                [&](uint32_t a, uint32_t b) {
                  const Digest256& fa = full_key(a);
                  const Digest256& fb = full_key(b);
                  if (fa != fb) return fa < fb;
                  return a < b;
                });
    }
    lo = hi;
  }

  thread_local Sha256 h;
  for (uint32_t j : order.order) h.update(hashes.rows[j].data(), 32);
  return {h.finish(), std::move(order)};
}

CanonResult canonicalize(const QueryDag& dag, const AttrKeySet& pattern_feats) {
  NodeHashArray rows = init_node_hashes(dag, pattern_feats);
  propagate(rows, dag);
  auto [hash, order] = pattern_hash_and_order(rows, dag);
  return {hash, std::move(order)};
}

}  // namespace patcard
