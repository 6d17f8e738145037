#include "txf/synth.hpp"

#include <algorithm>
#include <ostream>
#include <stdexcept>
#include <utility>
#include <vector>

#include "txf/rng.hpp"

namespace txf {

namespace {

struct Rng {
  std::uint64_t state;
  std::uint64_t next() { return state = splitmix64(state); }
  double unit() { return to_unit(next()); }
  std::uint64_t below(std::uint64_t n) { return next() % n; }
};

}  // namespace

void synth_stream(const SynthConfig& config, std::ostream& out) {
  if (config.communities < 2 || config.members_per_community < 2)
    throw std::invalid_argument("synth_stream: need at least 2 communities of 2 members");
  if (config.slots < 1 || config.pairs_per_slot < 1)
    throw std::invalid_argument("synth_stream: need at least 1 slot of 1 pair");

  Rng rng{mix_seed(config.seed, 0x5e3dULL)};
  std::vector<std::vector<Address>> members(config.communities);
  Address next_address = 0;
  for (auto& community : members) {
    community.reserve(config.members_per_community);
    for (int m = 0; m < config.members_per_community; ++m) community.push_back(next_address++);
  }

  std::int64_t txid = 0;
  for (int slot = 0; slot < config.slots; ++slot) {
    if (slot > 0) {
      // Retire a fraction of each community, replacing them with fresh
      // addresses, then migrate a fraction between communities.
      for (auto& community : members) {
        for (auto& node : community) {
          if (rng.unit() < config.turnover_rate) node = next_address++;
        }
      }
      for (std::size_t c = 0; c < members.size(); ++c) {
        for (auto& node : members[c]) {
          if (rng.unit() >= config.migrate_rate) continue;
          std::size_t target = rng.below(members.size() - 1);
          if (target >= c) ++target;
          // Swap with a random slot in the target community, keeping sizes fixed.
          Address& other = members[target][rng.below(members[target].size())];
          std::swap(node, other);
        }
      }
      // Burst drift: some communities dissolve outright and their members
      // reform into fresh groupings with new co-members.
      std::vector<std::size_t> dissolving;
      for (std::size_t c = 0; c < members.size(); ++c) {
        if (rng.unit() < config.dissolve_rate) dissolving.push_back(c);
      }
      if (dissolving.size() >= 2) {
        std::vector<Address> pool;
        for (std::size_t c : dissolving) {
          pool.insert(pool.end(), members[c].begin(), members[c].end());
        }
        for (std::size_t i = pool.size(); i > 1; --i) {
          std::swap(pool[i - 1], pool[rng.below(i)]);
        }
        std::size_t next = 0;
        for (std::size_t c : dissolving) {
          for (auto& node : members[c]) node = pool[next++];
        }
      }
    }

    std::int64_t emitted = 0;
    while (emitted < config.pairs_per_slot) {
      // One txid covers a small geometric burst of pairs.
      std::int64_t burst = 1;
      while (burst < 8 && rng.unit() < 1.0 - 1.0 / config.mean_pairs_per_txn) ++burst;
      for (std::int64_t i = 0; i < burst; ++i) {
        const bool intra = rng.unit() < config.intra_prob;
        Address a, b;
        if (intra) {
          const auto& community = members[rng.below(members.size())];
          const std::size_t ai = rng.below(community.size());
          std::size_t bi = rng.below(community.size() - 1);
          if (bi >= ai) ++bi;
          a = community[ai];
          b = community[bi];
        } else {
          const std::size_t ca = rng.below(members.size());
          std::size_t cb = rng.below(members.size() - 1);
          if (cb >= ca) ++cb;
          a = members[ca][rng.below(members[ca].size())];
          b = members[cb][rng.below(members[cb].size())];
        }
        const double p_frequent =
            intra ? config.frequent_amount_prob : 1.0 - config.frequent_amount_prob;
        std::int64_t amount;
        if (rng.unit() < p_frequent) {
          amount = 1 + static_cast<std::int64_t>(rng.unit() * (config.frequent_cutoff_satoshi - 1));
        } else {
          amount = config.frequent_cutoff_satoshi +
                   1 + static_cast<std::int64_t>(rng.unit() * 9.0 * config.frequent_cutoff_satoshi);
        }
        out << txid << ' ' << a << ' ' << b << ' ' << amount << '\n';
        ++emitted;
      }
      ++txid;
    }
  }
}

}  // namespace txf
