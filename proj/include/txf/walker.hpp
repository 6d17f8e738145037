#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <span>
#include <vector>

#include "txf/dygraph.hpp"
#include "txf/types.hpp"

namespace txf {

struct Walk {
  std::vector<Address> nodes;  // first node is the start node
  int birth_slot = 0;
  double decayed_weight = 1.0;
};

struct WalkParams {
  int walks_per_node = 10;
  int walk_length = 40;  // maximum nodes per walk
  std::uint64_t seed = 0;
  int threads = 1;
};

struct ContextPair {
  Address target = 0;
  Address context = 0;
  double weight = 1.0;  // the owning walk's decayed_weight
};

class WalkCorpus {
 public:
  WalkCorpus() = default;
  WalkCorpus(WalkParams params, int slot) : params_(params), slot_(slot) {}

  const std::map<Address, std::vector<Walk>>& walks() const { return walks_; }
  std::map<Address, std::vector<Walk>>& walks() { return walks_; }
  const WalkParams& params() const { return params_; }
  int slot() const { return slot_; }
  void set_slot(int slot) { slot_ = slot; }
  std::size_t node_count() const { return walks_.size(); }
  std::size_t walk_count() const;

  // One walk per line: birth_slot, decayed_weight, then the node ids.
  void save(std::ostream& out) const;
  static WalkCorpus load(std::istream& in);

 private:
  WalkParams params_;
  int slot_ = -1;
  std::map<Address, std::vector<Walk>> walks_;
};

// Next hops are drawn with probability proportional to current edge weight.
// Per-node streams are derived from (seed, node, slot), so results do not
// depend on thread count or node order.
WalkCorpus generate_walks(const DecayedGraph& graph, const WalkParams& params);
WalkCorpus generate_walks(const DecayedGraph& graph, std::span<const Address> nodes,
                          const WalkParams& params);

// Advances the corpus by the one slot the graph just applied: decays walk
// weights by the graph's decay base, deletes walks at or below the opt-out
// threshold or touching departed nodes, and regenerates walks for changed
// nodes and for live nodes left without any walk. Static graphs regenerate
// everything.
void update_corpus(WalkCorpus& corpus, const DecayedGraph& graph,
                   std::span<const Address> changed);

// All ordered (target, context) pairs within `window` positions inside each
// walk, weighted by the walk's decayed_weight. Deterministic order.
std::vector<ContextPair> context_pairs(const WalkCorpus& corpus, int window = 10);

}  // namespace txf
