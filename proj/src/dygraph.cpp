#include "txf/dygraph.hpp"

#include <algorithm>
#include <cstdio>
#include <istream>
#include <map>
#include <ostream>
#include <set>
#include <sstream>
#include <stdexcept>

namespace txf {

std::string to_string(GraphKind kind) {
  switch (kind) {
    case GraphKind::Static: return "static";
    case GraphKind::Reachability: return "reachability";
    case GraphKind::Amount: return "amount";
  }
  return "?";
}

GraphKind graph_kind_from_string(const std::string& name) {
  if (name == "static") return GraphKind::Static;
  if (name == "reachability") return GraphKind::Reachability;
  if (name == "amount") return GraphKind::Amount;
  throw std::invalid_argument("unknown graph kind: " + name);
}

SlotContribution slot_contribution(std::span<const PairEvent> events, GraphKind kind,
                                   const AmountBucketing& bucketing, int slot_index) {
  if (slot_index < 0) {
    if (events.empty())
      throw std::invalid_argument("slot_contribution: cannot infer slot from empty events");
    slot_index = events.front().slot_index;
  }
  std::map<std::pair<Address, Address>, double> acc;
  for (const auto& e : events) {
    if (e.slot_index != slot_index)
      throw std::invalid_argument("slot_contribution: events span multiple slots");
    if (e.sender == e.receiver) continue;
    const auto key = std::minmax(e.sender, e.receiver);
    double w = 1.0;
    if (kind == GraphKind::Amount)
      w = e.amount_satoshi <= bucketing.frequent_cutoff_satoshi ? 1.0 : 0.5;
    auto [it, inserted] = acc.emplace(std::pair<Address, Address>(key.first, key.second), w);
    if (!inserted) it->second = std::max(it->second, w);
  }
  SlotContribution c;
  c.slot_index = slot_index;
  c.entries.assign(acc.begin(), acc.end());
  return c;
}

DecayedGraph::DecayedGraph(GraphKind kind, double decay_base, double optout_threshold,
                           int start_slot, int initial_slot)
    : kind_(kind),
      decay_base_(decay_base),
      optout_threshold_(optout_threshold),
      start_slot_(start_slot),
      current_slot_(initial_slot) {
  if (kind != GraphKind::Static && (decay_base <= 0.0 || decay_base >= 1.0))
    throw std::invalid_argument("decay_base must lie in (0,1)");
}

SlotDelta DecayedGraph::apply_slot(const SlotContribution& contribution) {
  if (contribution.slot_index != current_slot_ + 1)
    throw std::invalid_argument("apply_slot: contribution is for slot " +
                                std::to_string(contribution.slot_index) + ", graph expects " +
                                std::to_string(current_slot_ + 1));
  current_slot_ = contribution.slot_index;
  SlotDelta delta;
  if (current_slot_ < start_slot_) return delta;  // model not started yet

  std::set<Address> touched;
  if (kind_ == GraphKind::Static) {
    for (const auto& [pair, w] : contribution.entries) {
      (void)w;
      const auto [u, v] = pair;
      if (adj_[u].emplace(v, 1.0).second) {
        adj_[v].emplace(u, 1.0);
        ++edge_count_;
        touched.insert(u);
        touched.insert(v);
      }
    }
  } else {
    for (auto& [u, nbrs] : adj_) {
      (void)u;
      for (auto& [v, w] : nbrs) {
        (void)v;
        w *= decay_base_;
      }
    }
    for (const auto& [pair, w] : contribution.entries) {
      const auto [u, v] = pair;
      auto [it, inserted] = adj_[u].emplace(v, w);
      if (!inserted)
        it->second += w;
      else
        ++edge_count_;
      auto [rit, rinserted] = adj_[v].emplace(u, w);
      if (!rinserted) rit->second += w;
      touched.insert(u);
      touched.insert(v);
    }
    std::vector<std::pair<Address, Address>> dead;
    for (const auto& [u, nbrs] : adj_) {
      for (const auto& [v, w] : nbrs) {
        if (u < v && w <= optout_threshold_) dead.emplace_back(u, v);
      }
    }
    for (const auto& [u, v] : dead) {
      adj_[u].erase(v);
      adj_[v].erase(u);
      --edge_count_;
      touched.insert(u);
      touched.insert(v);
    }
    for (auto it = adj_.begin(); it != adj_.end();) {
      it = it->second.empty() ? adj_.erase(it) : std::next(it);
    }
  }
  delta.touched.assign(touched.begin(), touched.end());
  return delta;
}

double DecayedGraph::edge_weight(Address u, Address v) const {
  auto it = adj_.find(u);
  if (it == adj_.end()) return 0.0;
  auto jt = it->second.find(v);
  return jt == it->second.end() ? 0.0 : jt->second;
}

std::vector<std::pair<Address, double>> DecayedGraph::neighbors(Address u) const {
  std::vector<std::pair<Address, double>> out;
  auto it = adj_.find(u);
  if (it == adj_.end()) return out;
  out.assign(it->second.begin(), it->second.end());
  std::sort(out.begin(), out.end());
  return out;
}

bool DecayedGraph::is_live(Address u) const { return adj_.count(u) > 0; }

std::vector<Address> DecayedGraph::live_nodes() const {
  std::vector<Address> out;
  out.reserve(adj_.size());
  for (const auto& [u, nbrs] : adj_) {
    (void)nbrs;
    out.push_back(u);
  }
  std::sort(out.begin(), out.end());
  return out;
}

void DecayedGraph::save(std::ostream& out) const {
  char buf[64];
  out << "kind=" << to_string(kind_);
  std::snprintf(buf, sizeof(buf), "%.17g", decay_base_);
  out << " decay_base=" << buf;
  std::snprintf(buf, sizeof(buf), "%.17g", optout_threshold_);
  out << " optout_threshold=" << buf;
  out << " start_slot=" << start_slot_ << " current_slot=" << current_slot_
      << " edges=" << edge_count_ << '\n';
  std::map<std::pair<Address, Address>, double> edges;
  for (const auto& [u, nbrs] : adj_) {
    for (const auto& [v, w] : nbrs) {
      if (u < v) edges[{u, v}] = w;
    }
  }
  for (const auto& [pair, w] : edges) {
    std::snprintf(buf, sizeof(buf), "%.17g", w);
    out << pair.first << ' ' << pair.second << ' ' << buf << '\n';
  }
}

DecayedGraph DecayedGraph::load(std::istream& in) {
  std::string header;
  if (!std::getline(in, header)) throw std::runtime_error("graph load: missing header");
  std::map<std::string, std::string> kv;
  std::istringstream hs(header);
  std::string token;
  while (hs >> token) {
    auto eq = token.find('=');
    if (eq == std::string::npos) throw std::runtime_error("graph load: bad header token " + token);
    kv[token.substr(0, eq)] = token.substr(eq + 1);
  }
  for (const char* key : {"kind", "decay_base", "optout_threshold", "start_slot", "current_slot",
                          "edges"}) {
    if (!kv.count(key)) throw std::runtime_error(std::string("graph load: header missing ") + key);
  }
  DecayedGraph g(graph_kind_from_string(kv["kind"]), std::stod(kv["decay_base"]),
                 std::stod(kv["optout_threshold"]), std::stoi(kv["start_slot"]),
                 std::stoi(kv["current_slot"]));
  const std::size_t edges = std::stoull(kv["edges"]);
  for (std::size_t i = 0; i < edges; ++i) {
    Address u, v;
    double w;
    if (!(in >> u >> v >> w)) throw std::runtime_error("graph load: truncated edge list");
    g.adj_[u][v] = w;
    g.adj_[v][u] = w;
  }
  g.edge_count_ = edges;
  return g;
}

}  // namespace txf
