#pragma once

#include <cstdint>
#include <iosfwd>

#include "txf/types.hpp"

namespace txf {

// Planted-community pair stream with per-slot membership drift and account
// turnover, so decayed graphs have something to forget. Amounts come from two
// regimes around frequent_cutoff_satoshi; intra-community pairs mostly fall
// in the frequent range, cross-community pairs mostly above it.
struct SynthConfig {
  int communities = 40;
  int members_per_community = 25;
  int slots = 10;
  std::int64_t pairs_per_slot = 10000;
  double intra_prob = 0.9;      // fraction of pairs drawn inside one community
  double turnover_rate = 0.1;   // members retired (and replaced) per slot
  double migrate_rate = 0.2;    // members moved to another community per slot
  double dissolve_rate = 0.0;   // communities dissolved and reformed per slot
  double frequent_amount_prob = 0.9;
  std::int64_t frequent_cutoff_satoshi = 10 * kSatoshiPerBitcoin;
  double mean_pairs_per_txn = 3.0;
  std::uint64_t seed = 0;
};

void synth_stream(const SynthConfig& config, std::ostream& out);

}  // namespace txf
