#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace txf {

// Multiplicative model updates over a roster of forecasting experts.
// Weights stay strictly positive and sum to 1.
class EnsembleState {
 public:
  static EnsembleState init(std::span<const int> expert_ids);  // uniform; rejects empty
  // Bit-exact restore of a previously saved distribution (checkpoint resume).
  static EnsembleState restore(std::span<const int> expert_ids, std::span<const double> weights);

  std::size_t size() const { return ids_.size(); }
  const std::vector<int>& expert_ids() const { return ids_; }
  const std::vector<double>& weights() const { return p_; }

  // Weighted average over experts with a prediction, renormalized over that
  // subset. Nullopt when every expert abstains.
  std::optional<double> combine(std::span<const std::optional<double>> expert_probs) const;

  // p_k <- p_k * exp(-eta * L_k), renormalized. Computed against the minimum
  // loss so a common shift cancels exactly.
  void mmu_update(std::span<const double> losses, double eta);

  // New expert enters with weight 1/(t+1); existing weights scale by
  // 1 - 1/(t+1). An empty roster gives the newcomer weight 1.
  void add_expert(int model_id, int round_plus_one);

  // Drops the single lowest-accuracy expert (ties to the lowest model_id) and
  // renormalizes. Returns false (and leaves the roster alone) on a singleton.
  bool remove_lowest_accuracy(std::span<const double> accuracies);

 private:
  std::vector<int> ids_;
  std::vector<double> p_;
};

// -log(p . r); rejects a nonpositive dot product.
double portfolio_loss(std::span<const double> p, std::span<const double> returns);

// Per-round loss history. Column k refers to the k-th roster slot throughout;
// regret is defined against a fixed roster.
class RegretLedger {
 public:
  void record(std::span<const double> expert_losses, double ensemble_loss);
  std::size_t rounds() const { return ensemble_losses_.size(); }
  double cumulative_ensemble_loss() const;
  // Cumulative ensemble loss minus the best single expert's cumulative loss.
  double regret() const;
  // Max over all contiguous intervals of the interval regret (exhaustive scan).
  double adaptive_regret() const;

 private:
  std::vector<std::vector<double>> expert_losses_;
  std::vector<double> ensemble_losses_;
};

}  // namespace txf
