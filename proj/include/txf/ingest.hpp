#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "txf/types.hpp"

namespace txf {

// One parsed row of the transaction log: <txid, in_addr, out_addr, weight>,
// amounts in Satoshi.
struct TransactionRecord {
  std::int64_t txid = 0;
  Address sender = 0;
  Address receiver = 0;
  std::int64_t amount_satoshi = 0;
};

// One retained sender-receiver pair with its position in the modeling stream.
struct PairEvent {
  std::int64_t txid = 0;
  Address sender = 0;
  Address receiver = 0;
  std::int64_t amount_satoshi = 0;
  int slot_index = 0;
  std::int64_t pair_ordinal = 0;
};

struct SlotBoundary {
  int slot_index = 0;
  std::int64_t first_pair_ordinal = 0;
  std::int64_t last_pair_ordinal = 0;
  std::int64_t pair_count = 0;
  std::int64_t txn_count = 0;      // distinct txids inside the slot
  std::int64_t account_count = 0;  // distinct addresses inside the slot
};

// Tallies produced while expanding records into the pair stream.
struct ExpandCounters {
  std::int64_t retained_pairs = 0;
  std::int64_t excluded_sentinel_pairs = 0;  // -1 on either side; never modeled
  std::int64_t self_pairs = 0;               // retained in stats, never graph edges
};

struct SlotStatsRow {
  int slot_index = 0;
  std::int64_t pair_count = 0;
  std::int64_t txn_count = 0;
  std::int64_t account_count = 0;
  std::int64_t cum_pairs = 0;
  std::int64_t cum_txns = 0;
  std::int64_t cum_accounts = 0;
};

struct StatsReport {
  std::vector<SlotStatsRow> slots;
  std::int64_t total_pairs = 0;
  std::int64_t total_txns = 0;
  std::int64_t total_accounts = 0;
  ExpandCounters counters;
  // Pair categories by whether each endpoint was seen at any earlier ordinal.
  std::int64_t old_old = 0;
  std::int64_t old_new = 0;
  std::int64_t new_old = 0;
  std::int64_t new_new = 0;
  // Key: -1 for zero amounts, otherwise floor(log10(amount_satoshi)).
  std::map<int, std::int64_t> amount_decade_hist;

  double pct_old_old() const;
  double pct_old_new() const;
  double pct_new_old() const;
  double pct_new_new() const;
  void write_csv(std::ostream& out) const;
};

struct DegreeHistograms {
  std::map<std::int64_t, std::int64_t> in_degree;   // degree -> #addresses
  std::map<std::int64_t, std::int64_t> out_degree;
  void write_in_csv(std::ostream& out) const;
  void write_out_csv(std::ostream& out) const;
};

class ParseError : public std::runtime_error {
 public:
  ParseError(std::size_t line, const std::string& what);
  std::size_t line() const { return line_; }

 private:
  std::size_t line_ = 0;
};

// Reads whitespace-separated rows of exactly 4 integers. Rejects malformed
// rows, negative amounts, addresses below -1, and decreasing txids, all with
// the offending line number.
std::vector<TransactionRecord> parse_transactions(std::istream& in);

// Canonical form: "txid sender receiver amount\n" per record.
void serialize_transactions(std::ostream& out, std::span<const TransactionRecord> records);

// Pass-through of the already-pairwise rows: assigns gap-free pair_ordinals to
// retained pairs, drops -1 sentinel pairs, tallies self pairs.
std::vector<PairEvent> expand_pairs(std::span<const TransactionRecord> records,
                                    ExpandCounters* counters = nullptr);

// Slots end at the first txid boundary at or after nominal_size pairs; the
// last slot may be short. Stamps slot_index into the events.
std::vector<SlotBoundary> slot_partition(std::span<PairEvent> events,
                                         std::int64_t nominal_size = 10000);

StatsReport dataset_stats(std::span<const PairEvent> events,
                          std::span<const SlotBoundary> slots,
                          const ExpandCounters& counters = {});

DegreeHistograms degree_distribution(std::span<const PairEvent> events);

}  // namespace txf
