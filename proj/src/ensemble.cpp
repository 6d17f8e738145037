#include "txf/ensemble.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace txf {

EnsembleState EnsembleState::init(std::span<const int> expert_ids) {
  if (expert_ids.empty()) throw std::invalid_argument("init_ensemble: empty expert set");
  EnsembleState s;
  s.ids_.assign(expert_ids.begin(), expert_ids.end());
  for (std::size_t i = 0; i < s.ids_.size(); ++i) {
    for (std::size_t j = i + 1; j < s.ids_.size(); ++j) {
      if (s.ids_[i] == s.ids_[j]) throw std::invalid_argument("init_ensemble: duplicate model_id");
    }
  }
  s.p_.assign(s.ids_.size(), 1.0 / static_cast<double>(s.ids_.size()));
  return s;
}

EnsembleState EnsembleState::restore(std::span<const int> expert_ids,
                                     std::span<const double> weights) {
  EnsembleState s = init(expert_ids);
  if (weights.size() != expert_ids.size())
    throw std::invalid_argument("restore: weight count does not match roster");
  double sum = 0.0;
  for (double w : weights) {
    if (!(w > 0.0)) throw std::invalid_argument("restore: weights must be positive");
    sum += w;
  }
  if (std::abs(sum - 1.0) > 1e-6) throw std::invalid_argument("restore: weights must sum to 1");
  s.p_.assign(weights.begin(), weights.end());
  return s;
}

std::optional<double> EnsembleState::combine(
    std::span<const std::optional<double>> expert_probs) const {
  if (expert_probs.size() != p_.size())
    throw std::invalid_argument("combine: probability count does not match roster");
  double mass = 0.0, sum = 0.0;
  for (std::size_t k = 0; k < p_.size(); ++k) {
    if (!expert_probs[k]) continue;
    mass += p_[k];
    sum += p_[k] * *expert_probs[k];
  }
  if (mass <= 0.0) {
    // Every expert abstained (or available mass underflowed): fall back to a
    // plain average of whoever answered.
    double cnt = 0.0, avg = 0.0;
    for (const auto& p : expert_probs) {
      if (p) {
        avg += *p;
        cnt += 1.0;
      }
    }
    if (cnt == 0.0) return std::nullopt;
    return avg / cnt;
  }
  return sum / mass;
}

void EnsembleState::mmu_update(std::span<const double> losses, double eta) {
  if (losses.size() != p_.size())
    throw std::invalid_argument("mmu_update: loss count does not match roster");
  double min_loss = std::numeric_limits<double>::infinity();
  for (double l : losses) {
    if (!std::isfinite(l)) throw std::invalid_argument("mmu_update: nonfinite loss");
    min_loss = std::min(min_loss, l);
  }
  double z = 0.0;
  for (std::size_t k = 0; k < p_.size(); ++k) {
    p_[k] *= std::exp(-eta * (losses[k] - min_loss));
    z += p_[k];
  }
  for (auto& p : p_) p /= z;
}

void EnsembleState::add_expert(int model_id, int round_plus_one) {
  if (round_plus_one < 1) throw std::invalid_argument("add_expert: round must be >= 0");
  for (int id : ids_) {
    if (id == model_id) throw std::invalid_argument("add_expert: duplicate model_id");
  }
  if (ids_.empty()) {
    ids_.push_back(model_id);
    p_.push_back(1.0);
    return;
  }
  const double c = 1.0 / static_cast<double>(round_plus_one);
  for (auto& p : p_) p *= 1.0 - c;
  ids_.push_back(model_id);
  p_.push_back(c);
}

bool EnsembleState::remove_lowest_accuracy(std::span<const double> accuracies) {
  if (accuracies.size() != p_.size())
    throw std::invalid_argument("remove_lowest_accuracy: accuracy count does not match roster");
  if (p_.size() < 2) return false;  // never remove the last expert
  std::size_t worst = 0;
  for (std::size_t k = 1; k < p_.size(); ++k) {
    if (accuracies[k] < accuracies[worst] ||
        (accuracies[k] == accuracies[worst] && ids_[k] < ids_[worst]))
      worst = k;
  }
  ids_.erase(ids_.begin() + worst);
  p_.erase(p_.begin() + worst);
  double z = 0.0;
  for (double p : p_) z += p;
  if (z <= 0.0) {
    // All remaining mass was on the removed expert; restart uniform.
    std::fill(p_.begin(), p_.end(), 1.0 / static_cast<double>(p_.size()));
    return true;
  }
  for (auto& p : p_) p /= z;
  return true;
}

double portfolio_loss(std::span<const double> p, std::span<const double> returns) {
  if (p.size() != returns.size())
    throw std::invalid_argument("portfolio_loss: size mismatch");
  double dotp = 0.0;
  for (std::size_t k = 0; k < p.size(); ++k) dotp += p[k] * returns[k];
  if (!(dotp > 0.0)) throw std::domain_error("portfolio_loss: nonpositive return under p");
  return -std::log(dotp);
}

void RegretLedger::record(std::span<const double> expert_losses, double ensemble_loss) {
  if (!expert_losses_.empty() && expert_losses.size() != expert_losses_.back().size())
    throw std::invalid_argument("RegretLedger: expert count changed between rounds");
  expert_losses_.emplace_back(expert_losses.begin(), expert_losses.end());
  ensemble_losses_.push_back(ensemble_loss);
}

double RegretLedger::cumulative_ensemble_loss() const {
  double s = 0.0;
  for (double l : ensemble_losses_) s += l;
  return s;
}

double RegretLedger::regret() const {
  if (ensemble_losses_.empty()) throw std::logic_error("regret: no recorded rounds");
  const std::size_t k_count = expert_losses_.front().size();
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < k_count; ++k) {
    double s = 0.0;
    for (const auto& round : expert_losses_) s += round[k];
    best = std::min(best, s);
  }
  return cumulative_ensemble_loss() - best;
}

double RegretLedger::adaptive_regret() const {
  if (ensemble_losses_.empty()) throw std::logic_error("adaptive_regret: no recorded rounds");
  const std::size_t t_count = ensemble_losses_.size();
  const std::size_t k_count = expert_losses_.front().size();
  double worst = -std::numeric_limits<double>::infinity();
  std::vector<double> expert_sum(k_count);
  for (std::size_t r = 0; r < t_count; ++r) {
    double ens_sum = 0.0;
    std::fill(expert_sum.begin(), expert_sum.end(), 0.0);
    for (std::size_t s = r; s < t_count; ++s) {
      ens_sum += ensemble_losses_[s];
      double best = std::numeric_limits<double>::infinity();
      for (std::size_t k = 0; k < k_count; ++k) {
        expert_sum[k] += expert_losses_[s][k];
        best = std::min(best, expert_sum[k]);
      }
      worst = std::max(worst, ens_sum - best);
    }
  }
  return worst;
}

}  // namespace txf
