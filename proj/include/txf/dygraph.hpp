#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "txf/ingest.hpp"
#include "txf/types.hpp"

namespace txf {

enum class GraphKind { Static, Reachability, Amount };

std::string to_string(GraphKind kind);
GraphKind graph_kind_from_string(const std::string& name);

struct AmountBucketing {
  // Amounts at or below the cutoff are "frequent" (slot weight 1), everything
  // above is "occasional" (slot weight 0.5). Default 10 BTC.
  std::int64_t frequent_cutoff_satoshi = 10 * kSatoshiPerBitcoin;
};

struct GraphSpec {
  GraphKind kind = GraphKind::Reachability;
  double decay_base = 0.5;
  int start_slot = 0;
};

// Per-slot pair weights; a pair absent from entries contributed w_t = 0.
// Entries are canonical (u < v) and sorted.
struct SlotContribution {
  int slot_index = -1;
  std::vector<std::pair<std::pair<Address, Address>, double>> entries;
};

// Collapses a slot's events into one weight per unordered pair. Self pairs
// never become edges. Multiple events take the max bucket weight.
// slot_index = -1 infers the slot from the events (which must be nonempty).
SlotContribution slot_contribution(std::span<const PairEvent> events, GraphKind kind,
                                   const AmountBucketing& bucketing = {}, int slot_index = -1);

// Endpoints of edges that received an event or were pruned in the last
// apply_slot. Sorted, deduplicated.
struct SlotDelta {
  std::vector<Address> touched;
};

// Undirected weighted graph whose edge weights follow
//   W_t(u,v) = sum_i decay_base^(t - t_i) * w_{t_i}
// updated incrementally one slot at a time, with opt-out pruning at the
// threshold. Static kind keeps every ever-seen edge at weight 1.
class DecayedGraph {
 public:
  explicit DecayedGraph(GraphKind kind, double decay_base = 0.5, double optout_threshold = 0.125,
                        int start_slot = 0, int initial_slot = -1);

  // Contribution must be for current_slot()+1. Slots before start_slot only
  // advance the clock.
  SlotDelta apply_slot(const SlotContribution& contribution);

  double edge_weight(Address u, Address v) const;  // 0 if absent
  std::vector<std::pair<Address, double>> neighbors(Address u) const;  // sorted by id
  bool is_live(Address u) const;
  std::vector<Address> live_nodes() const;  // sorted
  std::size_t node_count() const { return adj_.size(); }
  std::size_t edge_count() const { return edge_count_; }

  GraphKind kind() const { return kind_; }
  double decay_base() const { return decay_base_; }
  double optout_threshold() const { return optout_threshold_; }
  int start_slot() const { return start_slot_; }
  int current_slot() const { return current_slot_; }

  // Header line with the graph parameters, then one "u v weight" line per
  // canonical edge sorted by u then v.
  void save(std::ostream& out) const;
  static DecayedGraph load(std::istream& in);

 private:
  GraphKind kind_;
  double decay_base_;
  double optout_threshold_;
  int start_slot_;
  int current_slot_;
  std::size_t edge_count_ = 0;
  std::unordered_map<Address, std::unordered_map<Address, double>> adj_;
};

}  // namespace txf
