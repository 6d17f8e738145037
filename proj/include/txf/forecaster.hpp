#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <unordered_set>
#include <vector>

#include "txf/dygraph.hpp"
#include "txf/embedder.hpp"
#include "txf/ingest.hpp"
#include "txf/types.hpp"

namespace txf {

struct DenseLayer {
  int in = 0;
  int out = 0;
  std::vector<double> W;  // row-major [out][in]
  std::vector<double> b;
};

// ReLU MLP ending in a single logistic unit. Input is the concatenation of
// the two endpoint embeddings in canonical (smaller id first) order.
class ForecastModel {
 public:
  ForecastModel() = default;
  ForecastModel(int input_dim, std::span<const int> hidden, std::uint64_t seed);

  double predict(std::span<const double> features) const;
  int input_dim() const { return layers.empty() ? 0 : layers.front().in; }

  void save(std::ostream& out) const;
  static ForecastModel load(std::istream& in);

  std::vector<DenseLayer> layers;
};

struct LabeledEdgeExample {
  Address u = 0;
  Address v = 0;
  int label = 0;
  int slot = 0;
};

struct ExampleSet {
  std::vector<LabeledEdgeExample> examples;  // positives first, then negatives
  std::int64_t positives = 0;
  std::int64_t negatives = 0;
  std::int64_t skipped_unembedded = 0;  // transacting pairs without full embedding coverage
  bool negative_shortfall = false;
  bool empty_warning = false;
};

struct PairHash {
  std::size_t operator()(const std::pair<Address, Address>& p) const;
};
using PairSet = std::unordered_set<std::pair<Address, Address>, PairHash>;

// Canonical non-self pairs of the slot's events.
PairSet transacting_pairs(std::span<const PairEvent> events);

// Uniform canonical pairs from the pool that are outside `excluded`, pass
// `accept` when given, and are mutually distinct. May return fewer than
// `want` when the pool runs dry.
std::vector<std::pair<Address, Address>> sample_negative_pairs(
    std::span<const Address> pool, const PairSet& excluded, std::size_t want, std::uint64_t seed,
    const std::function<bool(Address, Address)>& accept = {});

// Positives: distinct pairs transacting in the slot with both endpoints
// embedded. Negatives: neg_ratio x positives pairs of live embedded nodes
// with no transaction in the slot.
ExampleSet make_examples(std::span<const PairEvent> slot_events, const DecayedGraph& graph,
                         const EmbeddingTable& embeddings, double neg_ratio, std::uint64_t seed);

struct FitStats {
  std::size_t used = 0;
  std::size_t skipped = 0;  // examples with missing embeddings
};

// Per-example SGD on the mean cross-entropy, shuffled each epoch.
FitStats train(ForecastModel& model, std::span<const LabeledEdgeExample> examples,
               const EmbeddingTable& embeddings, int epochs, double learning_rate,
               std::uint64_t seed);

// Continues from the current parameters; identical mechanics to train.
FitStats fine_tune(ForecastModel& model, std::span<const LabeledEdgeExample> examples,
                   const EmbeddingTable& embeddings, int epochs, double learning_rate,
                   std::uint64_t seed);

// Empty when either embedding is missing (pair is unforecastable).
std::vector<double> pair_features(const EmbeddingTable& embeddings, Address u, Address v);
std::optional<double> predict_pair(const ForecastModel& model, const EmbeddingTable& embeddings,
                                   Address u, Address v);

struct Metrics {
  double accuracy = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::int64_t tp = 0, tn = 0, fp = 0, fn = 0;
};

// Predicted positive iff prediction >= threshold. 0/0 ratios report as 0.
Metrics evaluate(std::span<const double> predictions, std::span<const int> labels,
                 double threshold = 0.5);

struct ForecastGradients {
  double loss = 0.0;
  std::vector<DenseLayer> grads;  // same shapes as the model's layers
};

// Full-batch mean cross-entropy and its parameter gradients.
ForecastGradients forecaster_gradients(const ForecastModel& model,
                                       std::span<const LabeledEdgeExample> examples,
                                       const EmbeddingTable& embeddings);
double forecaster_loss(const ForecastModel& model, std::span<const LabeledEdgeExample> examples,
                       const EmbeddingTable& embeddings);

}  // namespace txf
