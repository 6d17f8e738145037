#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "txf/types.hpp"
#include "txf/walker.hpp"

namespace txf {

struct SkipGramConfig {
  enum class Mode { ExactSoftmax, NegativeSampling };
  int dimension = 128;
  int epochs = 5;
  double learning_rate = 0.025;
  double min_learning_rate = 0.0001;  // sampling mode decays linearly to this
  int negatives_per_positive = 5;
  Mode mode = Mode::NegativeSampling;
  int threads = 1;  // >1 applies unsynchronized sparse updates (sampling mode)
};

// Input and output embedding rows per address. New addresses are initialized
// uniformly in [-0.5/dim, 0.5/dim) from a per-address hash, so initialization
// does not depend on insertion order.
class EmbeddingTable {
 public:
  EmbeddingTable() = default;
  EmbeddingTable(int dimension, std::uint64_t init_seed);

  int dimension() const { return dim_; }
  std::size_t size() const { return addresses_.size(); }
  bool contains(Address a) const { return index_.count(a) > 0; }
  std::optional<std::size_t> index_of(Address a) const;
  std::size_t ensure(Address a);
  const std::vector<Address>& addresses() const { return addresses_; }

  std::optional<std::span<const double>> lookup(Address a) const;  // input embedding

  double* input_row(std::size_t idx) { return input_.data() + idx * dim_; }
  const double* input_row(std::size_t idx) const { return input_.data() + idx * dim_; }
  double* output_row(std::size_t idx) { return output_.data() + idx * dim_; }
  const double* output_row(std::size_t idx) const { return output_.data() + idx * dim_; }
  std::vector<double>& input_data() { return input_; }
  std::vector<double>& output_data() { return output_; }
  const std::vector<double>& input_data() const { return input_; }
  const std::vector<double>& output_data() const { return output_; }

  int slot_of_last_update() const { return slot_of_last_update_; }
  void set_slot_of_last_update(int slot) { slot_of_last_update_ = slot; }

  // "count dimension" header, then one line per address: id and the input
  // embedding at 9 significant digits. Sorted by address.
  void save(std::ostream& out) const;
  static EmbeddingTable load(std::istream& in, std::uint64_t init_seed = 0);
  // Full state (input and output rows, 17 digits) for checkpointing.
  void save_full(std::ostream& out) const;
  static EmbeddingTable load_full(std::istream& in);

 private:
  int dim_ = 0;
  std::uint64_t init_seed_ = 0;
  std::vector<Address> addresses_;
  std::unordered_map<Address, std::size_t> index_;
  std::vector<double> input_;
  std::vector<double> output_;
  int slot_of_last_update_ = -1;
};

struct SkipGramStats {
  std::size_t pairs_used = 0;
  std::size_t pairs_skipped = 0;  // endpoints rejected by the live filter
  double final_loss = std::numeric_limits<double>::quiet_NaN();  // exact mode only
};

// Minimizes the sample-weighted mean negative log-likelihood of context given
// target (exact mode: full-batch softmax; sampling mode: SGD with negative
// sampling). Warm start = pass an existing table.
SkipGramStats train_skipgram(EmbeddingTable& table, std::span<const ContextPair> pairs,
                             const SkipGramConfig& config, std::uint64_t seed,
                             const std::function<bool(Address)>& live = {});

EmbeddingTable train_skipgram(std::span<const ContextPair> pairs, const SkipGramConfig& config,
                              std::optional<EmbeddingTable> warm_start, std::uint64_t seed,
                              const std::function<bool(Address)>& live = {},
                              SkipGramStats* stats = nullptr);

struct SkipGramGradients {
  double loss = 0.0;
  std::vector<double> d_input;   // laid out like the table's input rows
  std::vector<double> d_output;
};

// Full-batch loss and gradients for the exact-softmax objective; every pair
// endpoint must already be in the table.
SkipGramGradients skipgram_exact_gradients(const EmbeddingTable& table,
                                           std::span<const ContextPair> pairs);
double skipgram_exact_loss(const EmbeddingTable& table, std::span<const ContextPair> pairs);

// Softmax over the whole vocabulary for one target (exact-mode forward pass).
std::vector<double> skipgram_predict_distribution(const EmbeddingTable& table, Address target);

// Per-slot wall-clock table: one row per slot, one column per model.
class RuntimeTable {
 public:
  void add(int slot, const std::string& column, double seconds);
  const std::map<int, std::map<std::string, double>>& rows() const { return rows_; }
  void write_csv(std::ostream& out) const;

 private:
  std::map<int, std::map<std::string, double>> rows_;
  std::vector<std::string> column_order_;
};

}  // namespace txf
