#include "txf/ingest.hpp"

#include <charconv>
#include <cstdio>
#include <istream>
#include <ostream>
#include <unordered_map>
#include <unordered_set>

namespace txf {

namespace {

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\r' || c == '\v' || c == '\f'; }

// Splits a line into int64 tokens; returns false on any non-integer token.
bool tokenize_ints(const std::string& line, std::vector<std::int64_t>& out) {
  out.clear();
  const char* p = line.data();
  const char* end = p + line.size();
  while (p != end) {
    while (p != end && is_space(*p)) ++p;
    if (p == end) break;
    std::int64_t value = 0;
    auto [next, ec] = std::from_chars(p, end, value);
    if (ec != std::errc() || (next != end && !is_space(*next))) return false;
    out.push_back(value);
    p = next;
  }
  return true;
}

}  // namespace

ParseError::ParseError(std::size_t line, const std::string& what)
    : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}

std::vector<TransactionRecord> parse_transactions(std::istream& in) {
  std::vector<TransactionRecord> records;
  std::string line;
  std::vector<std::int64_t> fields;
  std::size_t line_no = 0;
  std::int64_t prev_txid = -1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!tokenize_ints(line, fields)) throw ParseError(line_no, "non-integer field");
    if (fields.empty()) continue;  // blank line
    if (fields.size() != 4)
      throw ParseError(line_no, "expected 4 fields, got " + std::to_string(fields.size()));
    TransactionRecord rec{fields[0], fields[1], fields[2], fields[3]};
    if (rec.txid < 0) throw ParseError(line_no, "negative txid");
    if (rec.txid < prev_txid) throw ParseError(line_no, "txid decreases");
    if (rec.sender < kUndecodableAddress || rec.receiver < kUndecodableAddress)
      throw ParseError(line_no, "address below -1");
    if (rec.amount_satoshi < 0) throw ParseError(line_no, "negative amount");
    prev_txid = rec.txid;
    records.push_back(rec);
  }
  return records;
}

void serialize_transactions(std::ostream& out, std::span<const TransactionRecord> records) {
  for (const auto& r : records) {
    out << r.txid << ' ' << r.sender << ' ' << r.receiver << ' ' << r.amount_satoshi << '\n';
  }
}

std::vector<PairEvent> expand_pairs(std::span<const TransactionRecord> records,
                                    ExpandCounters* counters) {
  std::vector<PairEvent> events;
  events.reserve(records.size());
  ExpandCounters local;
  std::int64_t ordinal = 0;
  for (const auto& r : records) {
    if (r.sender == kUndecodableAddress || r.receiver == kUndecodableAddress) {
      ++local.excluded_sentinel_pairs;
      continue;
    }
    if (r.sender == r.receiver) ++local.self_pairs;
    events.push_back({r.txid, r.sender, r.receiver, r.amount_satoshi, 0, ordinal});
    ++ordinal;
  }
  local.retained_pairs = ordinal;
  if (counters) *counters = local;
  return events;
}

std::vector<SlotBoundary> slot_partition(std::span<PairEvent> events, std::int64_t nominal_size) {
  if (nominal_size < 1) throw std::invalid_argument("slot_partition: nominal_size must be >= 1");
  std::vector<SlotBoundary> slots;
  std::size_t i = 0;
  int slot = 0;
  while (i < events.size()) {
    const std::size_t start = i;
    std::int64_t count = 0;
    while (i < events.size()) {
      // Consume a whole txid group; slots never split a transaction.
      const std::int64_t txid = events[i].txid;
      while (i < events.size() && events[i].txid == txid) {
        events[i].slot_index = slot;
        ++i;
        ++count;
      }
      if (count >= nominal_size) break;
    }
    SlotBoundary b;
    b.slot_index = slot;
    b.first_pair_ordinal = events[start].pair_ordinal;
    b.last_pair_ordinal = events[i - 1].pair_ordinal;
    b.pair_count = count;
    std::unordered_set<Address> accounts;
    std::int64_t txns = 0;
    std::int64_t prev = -1;
    for (std::size_t j = start; j < i; ++j) {
      if (events[j].txid != prev) {
        ++txns;
        prev = events[j].txid;
      }
      accounts.insert(events[j].sender);
      accounts.insert(events[j].receiver);
    }
    b.txn_count = txns;
    b.account_count = static_cast<std::int64_t>(accounts.size());
    slots.push_back(b);
    ++slot;
  }
  return slots;
}

namespace {

double pct(std::int64_t part, std::int64_t whole) {
  return whole == 0 ? 0.0 : 100.0 * static_cast<double>(part) / static_cast<double>(whole);
}

int amount_decade(std::int64_t satoshi) {
  if (satoshi <= 0) return -1;
  int d = 0;
  while (satoshi >= 10) {
    satoshi /= 10;
    ++d;
  }
  return d;
}

}  // namespace

double StatsReport::pct_old_old() const { return pct(old_old, total_pairs); }
double StatsReport::pct_old_new() const { return pct(old_new, total_pairs); }
double StatsReport::pct_new_old() const { return pct(new_old, total_pairs); }
double StatsReport::pct_new_new() const { return pct(new_new, total_pairs); }

StatsReport dataset_stats(std::span<const PairEvent> events, std::span<const SlotBoundary> slots,
                          const ExpandCounters& counters) {
  StatsReport rep;
  rep.counters = counters;
  rep.total_pairs = static_cast<std::int64_t>(events.size());
  std::unordered_set<Address> seen;
  seen.reserve(events.size() / 2 + 16);
  std::size_t next_event = 0;
  std::int64_t cum_pairs = 0;
  std::int64_t cum_txns = 0;
  for (const auto& slot : slots) {
    for (std::int64_t k = 0; k < slot.pair_count; ++k) {
      const PairEvent& e = events[next_event++];
      const bool sender_old = seen.count(e.sender) > 0;
      const bool receiver_old = seen.count(e.receiver) > 0;
      if (sender_old && receiver_old)
        ++rep.old_old;
      else if (sender_old)
        ++rep.old_new;
      else if (receiver_old)
        ++rep.new_old;
      else
        ++rep.new_new;
      seen.insert(e.sender);
      seen.insert(e.receiver);
      ++rep.amount_decade_hist[amount_decade(e.amount_satoshi)];
    }
    cum_pairs += slot.pair_count;
    cum_txns += slot.txn_count;
    rep.slots.push_back({slot.slot_index, slot.pair_count, slot.txn_count, slot.account_count,
                         cum_pairs, cum_txns, static_cast<std::int64_t>(seen.size())});
  }
  rep.total_txns = cum_txns;
  rep.total_accounts = static_cast<std::int64_t>(seen.size());
  return rep;
}

void StatsReport::write_csv(std::ostream& out) const {
  char buf[64];
  out << "# total_pairs=" << total_pairs << " total_transactions=" << total_txns
      << " total_accounts=" << total_accounts << '\n';
  out << "# excluded_sentinel_pairs=" << counters.excluded_sentinel_pairs
      << " self_pairs=" << counters.self_pairs << '\n';
  std::snprintf(buf, sizeof(buf), "%.4f", pct_old_old());
  out << "# pct_old_old=" << buf;
  std::snprintf(buf, sizeof(buf), "%.4f", pct_old_new());
  out << " pct_old_new=" << buf;
  std::snprintf(buf, sizeof(buf), "%.4f", pct_new_old());
  out << " pct_new_old=" << buf;
  std::snprintf(buf, sizeof(buf), "%.4f", pct_new_new());
  out << " pct_new_new=" << buf << '\n';
  out << "# amount_decades";
  for (const auto& [decade, count] : amount_decade_hist) out << ' ' << decade << ':' << count;
  out << '\n';
  out << "slot,pairs,transactions,accounts,cum_pairs,cum_transactions,cum_accounts\n";
  for (const auto& row : slots) {
    out << row.slot_index << ',' << row.pair_count << ',' << row.txn_count << ','
        << row.account_count << ',' << row.cum_pairs << ',' << row.cum_txns << ','
        << row.cum_accounts << '\n';
  }
}

DegreeHistograms degree_distribution(std::span<const PairEvent> events) {
  std::unordered_map<Address, std::int64_t> in_deg, out_deg;
  for (const auto& e : events) {
    ++out_deg[e.sender];
    ++in_deg[e.receiver];
  }
  DegreeHistograms h;
  for (const auto& [addr, d] : in_deg) {
    (void)addr;
    ++h.in_degree[d];
  }
  for (const auto& [addr, d] : out_deg) {
    (void)addr;
    ++h.out_degree[d];
  }
  return h;
}

namespace {
void write_degree_csv(std::ostream& out, const std::map<std::int64_t, std::int64_t>& hist) {
  out << "degree,count\n";
  for (const auto& [deg, cnt] : hist) out << deg << ',' << cnt << '\n';
}
}  // namespace

void DegreeHistograms::write_in_csv(std::ostream& out) const { write_degree_csv(out, in_degree); }
void DegreeHistograms::write_out_csv(std::ostream& out) const { write_degree_csv(out, out_degree); }

}  // namespace txf
