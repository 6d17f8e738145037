#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "txf/dygraph.hpp"
#include "txf/embedder.hpp"
#include "txf/forecaster.hpp"
#include "txf/ingest.hpp"

namespace txf {

struct ModelInfo {
  int model_id = 0;
  std::string name;
  GraphSpec graph;
  bool in_ensemble = true;  // forced false for static baselines
};

struct PipelineConfig {
  std::string input_path;
  std::string out_dir = "out";
  std::uint64_t seed = 0;  // mandatory in the config file; no wall-clock entropy
  std::int64_t slot_size = 10000;
  AmountBucketing bucketing;
  std::vector<ModelInfo> models;

  int walks_per_node = 10;
  int walk_length = 40;
  int window = 10;

  SkipGramConfig embedding;  // dimension 128, epochs 5, lr 0.025, 5 negatives

  std::vector<int> hidden{128, 64};
  int train_epochs = 20;
  int fine_tune_epochs = 5;
  double forecaster_lr = 0.05;
  double neg_ratio = 1.0;
  double threshold = 0.5;

  double eta = 0.5;
  enum class LossMode { OneMinusAccuracy, LogReturn };
  LossMode loss_mode = LossMode::OneMinusAccuracy;
  bool adapt_experts = false;  // Algorithm-1 add/remove cadence from round 3 on

  int threads = 1;  // 1 = deterministic; >1 parallelizes per-model work
  bool checkpoints = true;
  int max_slots = 0;  // 0 = use the whole stream

  void validate() const;
  static PipelineConfig load(const std::string& path);
  static PipelineConfig from_json_text(const std::string& text);
  std::string to_json_text() const;
};

struct MetricsRow {
  int slot = 0;      // 1-based evaluation round; row t is tested on slot t's pairs
  int model_id = 0;  // -1 is the ensemble
  Metrics metrics;
  double coverage = 0.0;
};

struct EnsembleRound {
  int round = 0;
  std::vector<int> expert_ids;
  std::vector<double> p;  // distribution used for this round's combine
  std::vector<double> losses;
  double ensemble_loss = 0.0;
  double regret = 0.0;
  double adaptive_regret = 0.0;
};

struct RuntimeSample {
  int slot = 0;
  std::string column;
  double seconds = 0.0;
};

struct RunReport {
  std::vector<ModelInfo> models;
  std::vector<MetricsRow> metrics;
  std::vector<EnsembleRound> rounds;
  std::vector<RuntimeSample> runtime;
  int slots_processed = 0;
  std::string out_dir;
};

// Runs the full per-slot loop: graph update, walks, embeddings, forecaster
// train/fine-tune, next-slot evaluation, MMU update. Writes metrics.csv,
// ensemble_ledger.csv, runtime.csv, stats report CSVs, embeddings/ and
// checkpoints/ under config.out_dir. With resume=true, continues from the
// newest complete checkpoint in out_dir.
RunReport run_pipeline(const PipelineConfig& config, bool resume = false);

// Re-renders the CSV reports from a previously written run_ledger.json.
void render_reports_from_ledger(const std::string& ledger_dir, const std::string& out_dir);

void write_metrics_csv(std::ostream& out, const RunReport& report);
void write_ensemble_ledger_csv(std::ostream& out, const RunReport& report);
void write_runtime_csv(std::ostream& out, const RunReport& report);

}  // namespace txf
