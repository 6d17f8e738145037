#include "txf/walker.hpp"

#include <algorithm>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <thread>
#include <unordered_map>
#include <unordered_set>

#include "txf/rng.hpp"

namespace txf {

namespace {

// Cumulative-weight adjacency snapshot for O(log deg) weighted sampling.
struct SamplingIndex {
  struct Node {
    std::vector<Address> nbr;
    std::vector<double> cum;
  };
  std::unordered_map<Address, Node> nodes;

  explicit SamplingIndex(const DecayedGraph& graph) {
    for (Address u : graph.live_nodes()) {
      Node n;
      double total = 0.0;
      for (const auto& [v, w] : graph.neighbors(u)) {
        total += w;
        n.nbr.push_back(v);
        n.cum.push_back(total);
      }
      nodes.emplace(u, std::move(n));
    }
  }
};

std::vector<Walk> walks_for_node(const SamplingIndex& index, Address start, int slot,
                                 const WalkParams& params) {
  std::uint64_t state = mix_seed(params.seed, static_cast<std::uint64_t>(start),
                                 static_cast<std::uint64_t>(slot + 1));
  auto next_u64 = [&state]() {
    state = splitmix64(state);
    return state;
  };
  std::vector<Walk> walks;
  walks.reserve(params.walks_per_node);
  for (int k = 0; k < params.walks_per_node; ++k) {
    Walk walk;
    walk.birth_slot = slot;
    walk.decayed_weight = 1.0;
    walk.nodes.push_back(start);
    Address cur = start;
    while (static_cast<int>(walk.nodes.size()) < params.walk_length) {
      auto it = index.nodes.find(cur);
      if (it == index.nodes.end() || it->second.nbr.empty()) break;
      const auto& node = it->second;
      const double x = to_unit(next_u64()) * node.cum.back();
      const std::size_t pick =
          std::upper_bound(node.cum.begin(), node.cum.end(), x) - node.cum.begin();
      cur = node.nbr[std::min(pick, node.nbr.size() - 1)];
      walk.nodes.push_back(cur);
    }
    walks.push_back(std::move(walk));
  }
  return walks;
}

void generate_into(WalkCorpus& corpus, const SamplingIndex& index,
                   std::span<const Address> nodes, const WalkParams& params, int slot) {
  if (params.threads <= 1 || nodes.size() < 64) {
    for (Address a : nodes) corpus.walks()[a] = walks_for_node(index, a, slot, params);
    return;
  }
  // Per-node seeding makes the result independent of the partitioning.
  std::vector<std::vector<std::vector<Walk>>> parts(params.threads);
  std::vector<std::thread> workers;
  const std::size_t chunk = (nodes.size() + params.threads - 1) / params.threads;
  for (int t = 0; t < params.threads; ++t) {
    workers.emplace_back([&, t]() {
      const std::size_t lo = t * chunk;
      const std::size_t hi = std::min(nodes.size(), lo + chunk);
      auto& out = parts[t];
      out.reserve(hi > lo ? hi - lo : 0);
      for (std::size_t i = lo; i < hi; ++i)
        out.push_back(walks_for_node(index, nodes[i], slot, params));
    });
  }
  for (auto& w : workers) w.join();
  std::size_t i = 0;
  for (int t = 0; t < params.threads; ++t) {
    for (auto& walks : parts[t]) corpus.walks()[nodes[i++]] = std::move(walks);
  }
}

}  // namespace

std::size_t WalkCorpus::walk_count() const {
  std::size_t n = 0;
  for (const auto& [node, ws] : walks_) {
    (void)node;
    n += ws.size();
  }
  return n;
}

WalkCorpus generate_walks(const DecayedGraph& graph, const WalkParams& params) {
  const auto nodes = graph.live_nodes();
  return generate_walks(graph, nodes, params);
}

WalkCorpus generate_walks(const DecayedGraph& graph, std::span<const Address> nodes,
                          const WalkParams& params) {
  if (params.walks_per_node < 1 || params.walk_length < 1)
    throw std::invalid_argument("generate_walks: walks_per_node and walk_length must be >= 1");
  WalkCorpus corpus(params, graph.current_slot());
  SamplingIndex index(graph);
  generate_into(corpus, index, nodes, params, graph.current_slot());
  return corpus;
}

void update_corpus(WalkCorpus& corpus, const DecayedGraph& graph,
                   std::span<const Address> changed) {
  if (graph.current_slot() != corpus.slot() + 1)
    throw std::invalid_argument("update_corpus: graph at slot " +
                                std::to_string(graph.current_slot()) + ", corpus at " +
                                std::to_string(corpus.slot()));
  const int slot = graph.current_slot();
  const WalkParams params = corpus.params();

  if (graph.kind() == GraphKind::Static) {
    corpus = generate_walks(graph, params);
    return;
  }

  auto& walks = corpus.walks();
  std::unordered_set<Address> departed;
  for (const auto& [node, ws] : walks) {
    (void)ws;
    if (!graph.is_live(node)) departed.insert(node);
  }
  for (Address node : departed) walks.erase(node);

  const double decay = graph.decay_base();
  const double threshold = graph.optout_threshold();
  for (auto& [node, ws] : walks) {
    (void)node;
    for (auto& w : ws) w.decayed_weight *= decay;
    std::erase_if(ws, [&](const Walk& w) {
      if (w.decayed_weight <= threshold) return true;
      for (Address a : w.nodes) {
        if (departed.count(a)) return true;
      }
      return false;
    });
  }

  SamplingIndex index(graph);
  std::vector<Address> regen(changed.begin(), changed.end());
  std::sort(regen.begin(), regen.end());
  regen.erase(std::unique(regen.begin(), regen.end()), regen.end());
  std::erase_if(regen, [&](Address a) { return !graph.is_live(a); });
  for (Address a : graph.live_nodes()) {
    auto it = walks.find(a);
    if (it == walks.end() || it->second.empty()) regen.push_back(a);
  }
  std::sort(regen.begin(), regen.end());
  regen.erase(std::unique(regen.begin(), regen.end()), regen.end());
  generate_into(corpus, index, regen, params, slot);
  corpus.set_slot(slot);
}

std::vector<ContextPair> context_pairs(const WalkCorpus& corpus, int window) {
  if (window < 1) throw std::invalid_argument("context_pairs: window must be >= 1");
  std::vector<ContextPair> pairs;
  for (const auto& [node, ws] : corpus.walks()) {
    (void)node;
    for (const auto& walk : ws) {
      const int len = static_cast<int>(walk.nodes.size());
      for (int i = 0; i < len; ++i) {
        const int lo = std::max(0, i - window);
        const int hi = std::min(len - 1, i + window);
        for (int j = lo; j <= hi; ++j) {
          if (j == i) continue;
          pairs.push_back({walk.nodes[i], walk.nodes[j], walk.decayed_weight});
        }
      }
    }
  }
  return pairs;
}

void WalkCorpus::save(std::ostream& out) const {
  char buf[64];
  out << "# slot=" << slot_ << " walks_per_node=" << params_.walks_per_node
      << " walk_length=" << params_.walk_length << " seed=" << params_.seed << '\n';
  for (const auto& [node, ws] : walks_) {
    (void)node;
    for (const auto& w : ws) {
      std::snprintf(buf, sizeof(buf), "%.17g", w.decayed_weight);
      out << w.birth_slot << ' ' << buf;
      for (Address a : w.nodes) out << ' ' << a;
      out << '\n';
    }
  }
}

WalkCorpus WalkCorpus::load(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line.rfind("# ", 0) != 0)
    throw std::runtime_error("corpus load: missing header");
  WalkParams params;
  int slot = -1;
  std::istringstream hs(line.substr(2));
  std::string token;
  while (hs >> token) {
    auto eq = token.find('=');
    if (eq == std::string::npos) continue;
    const std::string key = token.substr(0, eq);
    const std::string value = token.substr(eq + 1);
    if (key == "slot") slot = std::stoi(value);
    else if (key == "walks_per_node") params.walks_per_node = std::stoi(value);
    else if (key == "walk_length") params.walk_length = std::stoi(value);
    else if (key == "seed") params.seed = std::stoull(value);
  }
  WalkCorpus corpus(params, slot);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    Walk w;
    if (!(ls >> w.birth_slot >> w.decayed_weight)) throw std::runtime_error("corpus load: bad walk line");
    Address a;
    while (ls >> a) w.nodes.push_back(a);
    if (w.nodes.empty()) throw std::runtime_error("corpus load: empty walk");
    corpus.walks_[w.nodes.front()].push_back(std::move(w));
  }
  return corpus;
}

}  // namespace txf
