// Acceptance suite: runs every gate criterion and prints one PASS/FAIL line
// per criterion. Exit code is the number of failed criteria.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "txf/dygraph.hpp"
#include "txf/embedder.hpp"
#include "txf/ensemble.hpp"
#include "txf/forecaster.hpp"
#include "txf/pipeline.hpp"
#include "txf/rng.hpp"
#include "txf/synth.hpp"

using namespace txf;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

// ---------------------------------------------------------------------------
// Criterion 1: incremental decayed weights match a from-scratch power-sum
// oracle on 1000 random event sequences.
// ---------------------------------------------------------------------------

double oracle_weight(const std::vector<std::map<std::pair<Address, Address>, double>>& history,
                     std::pair<Address, Address> pair, int upto_slot, double decay,
                     double threshold) {
  int last_reset = -1;
  double current = 0.0;
  for (int t = 0; t <= upto_slot; ++t) {
    double sum = 0.0;
    for (int i = last_reset + 1; i <= t; ++i) {
      auto it = history[i].find(pair);
      if (it != history[i].end()) sum += std::pow(decay, t - i) * it->second;
    }
    if (sum <= threshold) {
      last_reset = t;
      current = 0.0;
    } else {
      current = sum;
    }
  }
  return current;
}

Outcome criterion_eq1_oracle() {
  std::mt19937_64 rng(101);
  const double decays[] = {0.25, 0.5, 0.75};
  double worst = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    const double decay = decays[trial % 3];
    const int slots = 2 + static_cast<int>(rng() % 9);   // <= 10
    const int nodes = 3 + static_cast<int>(rng() % 18);  // <= 20
    std::vector<std::map<std::pair<Address, Address>, double>> history(slots);
    DecayedGraph g(GraphKind::Amount, decay);
    for (int s = 0; s < slots; ++s) {
      SlotContribution c;
      c.slot_index = s;
      std::map<std::pair<Address, Address>, double> entries;
      const int events = static_cast<int>(rng() % 8);
      for (int e = 0; e < events; ++e) {
        Address u = static_cast<Address>(rng() % nodes);
        Address v = static_cast<Address>(rng() % nodes);
        if (u == v) continue;
        auto mm = std::minmax(u, v);
        const double w = rng() % 2 ? 1.0 : 0.5;
        auto [it, ins] = entries.emplace(std::pair<Address, Address>(mm.first, mm.second), w);
        if (!ins) it->second = std::max(it->second, w);
      }
      c.entries.assign(entries.begin(), entries.end());
      history[s] = entries;
      g.apply_slot(c);
    }
    for (Address u = 0; u < nodes; ++u) {
      for (Address v = u + 1; v < nodes; ++v) {
        const double expect = oracle_weight(history, {u, v}, slots - 1, decay, 0.125);
        worst = std::max(worst, std::abs(g.edge_weight(u, v) - expect));
      }
    }
  }
  char buf[96];
  std::snprintf(buf, sizeof(buf), "max |incremental - oracle| = %.3g over 1000 sequences", worst);
  return {worst <= 1e-12, buf};
}

// ---------------------------------------------------------------------------
// Criterion 2: opt-out pruning. Exactly 3 empty slots at decay 0.5; across
// decay values the edge disappears exactly when decay^k falls to 0.125.
// ---------------------------------------------------------------------------

Outcome criterion_optout() {
  std::ostringstream detail;
  bool pass = true;
  for (double decay : {0.25, 0.5, 0.75}) {
    int expected_k = 0;
    double w = 1.0;
    while (w > 0.125) {
      w *= decay;
      ++expected_k;
    }
    DecayedGraph g(GraphKind::Reachability, decay);
    SlotContribution first;
    first.slot_index = 0;
    first.entries.push_back({{1, 2}, 1.0});
    g.apply_slot(first);
    int observed_k = -1;
    for (int s = 1; s <= 12; ++s) {
      SlotContribution empty;
      empty.slot_index = s;
      g.apply_slot(empty);
      if (g.edge_weight(1, 2) == 0.0) {
        observed_k = s;
        break;
      }
    }
    pass = pass && observed_k == expected_k;
    detail << "decay " << decay << ": pruned after " << observed_k << " empty slots (expect "
           << expected_k << "); ";
    if (decay == 0.5) pass = pass && observed_k == 3;
  }
  return {pass, detail.str()};
}

// ---------------------------------------------------------------------------
// Criterion 3: analytic gradients vs central finite differences, 20+ random
// instances each for the skip-gram (exact mode) and the forecaster.
// ---------------------------------------------------------------------------

double skipgram_fd_worst(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const int nodes = 4 + static_cast<int>(rng() % 4);
  const int dim = 3 + static_cast<int>(rng() % 3);
  std::vector<ContextPair> pairs;
  const int count = 10 + static_cast<int>(rng() % 20);
  for (int i = 0; i < count; ++i) {
    Address t = static_cast<Address>(rng() % nodes);
    Address c = static_cast<Address>(rng() % nodes);
    if (t == c) c = (c + 1) % nodes;
    pairs.push_back({t, c, 0.25 + 0.75 * to_unit(rng())});
  }
  EmbeddingTable table(dim, seed * 13 + 1);
  for (const auto& p : pairs) {
    table.ensure(p.target);
    table.ensure(p.context);
  }
  const auto analytic = skipgram_exact_gradients(table, pairs);
  const double h = 1e-5;
  double worst = 0.0;
  EmbeddingTable probe = table;
  auto scan = [&](std::vector<double>& params, const std::vector<double>& grads) {
    for (std::size_t i = 0; i < params.size(); ++i) {
      const double saved = params[i];
      params[i] = saved + h;
      const double up = skipgram_exact_loss(probe, pairs);
      params[i] = saved - h;
      const double down = skipgram_exact_loss(probe, pairs);
      params[i] = saved;
      const double fd = (up - down) / (2 * h);
      const double denom = std::max({std::abs(fd), std::abs(grads[i]), 1e-6});
      worst = std::max(worst, std::abs(fd - grads[i]) / denom);
    }
  };
  scan(probe.input_data(), analytic.d_input);
  scan(probe.output_data(), analytic.d_output);
  return worst;
}

double forecaster_smallest_preact(const ForecastModel& m, const EmbeddingTable& emb,
                                  std::span<const LabeledEdgeExample> examples) {
  double smallest = 1e18;
  for (const auto& ex : examples) {
    auto cur = pair_features(emb, ex.u, ex.v);
    for (std::size_t l = 0; l + 1 < m.layers.size(); ++l) {
      const auto& layer = m.layers[l];
      std::vector<double> next(layer.out, 0.0);
      for (int r = 0; r < layer.out; ++r) {
        double s = layer.b[r];
        for (int c = 0; c < layer.in; ++c) s += layer.W[r * layer.in + c] * cur[c];
        next[r] = s;
        smallest = std::min(smallest, std::abs(s));
      }
      for (auto& v : next) v = v > 0 ? v : 0.0;
      cur = next;
    }
  }
  return smallest;
}

double forecaster_fd_worst(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const int nodes = 8;
  const int dim = 3 + static_cast<int>(rng() % 3);
  EmbeddingTable emb(dim, seed);
  for (Address a = 0; a < nodes; ++a) {
    double* row = emb.input_row(emb.ensure(a));
    for (int k = 0; k < dim; ++k) row[k] = to_unit(rng()) * 2.0 - 1.0;
  }
  ForecastModel model(2 * dim, std::vector<int>{5, 4}, seed * 7 + 3);
  std::vector<LabeledEdgeExample> examples;
  for (int i = 0; i < 8; ++i) {
    Address u = static_cast<Address>(rng() % nodes);
    Address v = static_cast<Address>(rng() % nodes);
    if (u == v) v = (v + 1) % nodes;
    examples.push_back({u, v, static_cast<int>(rng() % 2), 0});
  }
  // ReLU kink within h of zero invalidates the finite difference, not the
  // gradient; signal the caller to draw a fresh instance.
  if (forecaster_smallest_preact(model, emb, examples) < 1e-3) return -1.0;
  const auto analytic = forecaster_gradients(model, examples, emb);
  const double h = 1e-5;
  double worst = 0.0;
  ForecastModel probe = model;
  for (std::size_t l = 0; l < probe.layers.size(); ++l) {
    auto scan = [&](std::vector<double>& params, const std::vector<double>& grads) {
      for (std::size_t i = 0; i < params.size(); ++i) {
        const double saved = params[i];
        params[i] = saved + h;
        const double up = forecaster_loss(probe, examples, emb);
        params[i] = saved - h;
        const double down = forecaster_loss(probe, examples, emb);
        params[i] = saved;
        const double fd = (up - down) / (2 * h);
        const double denom = std::max({std::abs(fd), std::abs(grads[i]), 1e-6});
        worst = std::max(worst, std::abs(fd - grads[i]) / denom);
      }
    };
    scan(probe.layers[l].W, analytic.grads[l].W);
    scan(probe.layers[l].b, analytic.grads[l].b);
  }
  return worst;
}

Outcome criterion_gradients() {
  double worst_sg = 0.0, worst_fc = 0.0;
  for (std::uint64_t seed = 1; seed <= 20; ++seed)
    worst_sg = std::max(worst_sg, skipgram_fd_worst(seed));
  int accepted = 0;
  std::uint64_t seed = 100;
  while (accepted < 20 && seed < 400) {
    const double w = forecaster_fd_worst(seed++);
    if (w < 0.0) continue;
    ++accepted;
    worst_fc = std::max(worst_fc, w);
  }
  char buf[128];
  std::snprintf(buf, sizeof(buf),
                "skip-gram max rel err %.3g (20 instances), forecaster %.3g (%d instances)",
                worst_sg, worst_fc, accepted);
  return {worst_sg < 1e-4 && worst_fc < 1e-4 && accepted == 20, buf};
}

// ---------------------------------------------------------------------------
// Criterion 4: metrics match an independent confusion tally on 1000 batches.
// ---------------------------------------------------------------------------

Outcome criterion_metric_oracle() {
  std::mt19937_64 rng(401);
  for (int batch = 0; batch < 1000; ++batch) {
    const int n = 1 + static_cast<int>(rng() % 200);
    std::vector<double> preds(n);
    std::vector<int> labels(n);
    for (int i = 0; i < n; ++i) {
      preds[i] = to_unit(rng());
      labels[i] = static_cast<int>(rng() % 2);
    }
    const double threshold = 0.25 + 0.5 * to_unit(rng());
    const Metrics m = evaluate(preds, labels, threshold);
    std::int64_t tp = 0, tn = 0, fp = 0, fn = 0;
    for (int i = 0; i < n; ++i) {
      const bool pos = preds[i] >= threshold;
      if (pos && labels[i]) ++tp;
      else if (pos) ++fp;
      else if (labels[i]) ++fn;
      else ++tn;
    }
    const double acc = static_cast<double>(tp + tn) / n;
    const double prec = tp + fp ? static_cast<double>(tp) / (tp + fp) : 0.0;
    const double rec = tp + fn ? static_cast<double>(tp) / (tp + fn) : 0.0;
    const double f1 = prec + rec > 0 ? 2 * prec * rec / (prec + rec) : 0.0;
    if (m.tp != tp || m.tn != tn || m.fp != fp || m.fn != fn) return {false, "confusion mismatch"};
    if (m.accuracy != acc || m.precision != prec || m.recall != rec || m.f1 != f1)
      return {false, "ratio mismatch"};
  }
  return {true, "1000 random batches match the brute-force tally exactly"};
}

// ---------------------------------------------------------------------------
// Criterion 5: MMU algebra against hand-derived values; distribution validity
// under 10^4 random operations.
// ---------------------------------------------------------------------------

Outcome criterion_mmu_algebra() {
  const double tol = 1e-12;
  auto close = [&](double a, double b) { return std::abs(a - b) <= tol; };
  bool pass = true;

  // Line 1: uniform initialization.
  auto s3 = EnsembleState::init(std::vector<int>{0, 1, 2});
  for (double p : s3.weights()) pass = pass && close(p, 1.0 / 3);

  // Line 3: combine, hand-evaluated.
  auto s2 = EnsembleState::init(std::vector<int>{0, 1});
  std::vector<std::optional<double>> probs{0.2, 0.8};
  pass = pass && close(*s2.combine(probs), 0.5);
  s2.mmu_update(std::vector<double>{std::log(3.0), 0.0}, 1.0);  // p -> [0.25, 0.75]
  probs = {0.4, 0.8};
  pass = pass && close(*s2.combine(probs), 0.7);

  // Line 4: p=[0.5,0.5], L=[0, ln 2], eta=1 -> [2/3, 1/3].
  auto s4 = EnsembleState::init(std::vector<int>{0, 1});
  s4.mmu_update(std::vector<double>{0.0, std::log(2.0)}, 1.0);
  pass = pass && close(s4.weights()[0], 2.0 / 3) && close(s4.weights()[1], 1.0 / 3);

  // Line 5: t+1 = 4, p = [0.3,0.3,0.4] -> [0.225, 0.225, 0.3, 0.25].
  auto s5 = EnsembleState::init(std::vector<int>{0, 1, 2});
  s5.mmu_update(std::vector<double>{std::log(4.0 / 3.0), std::log(4.0 / 3.0), 0.0}, 1.0);
  s5.add_expert(3, 4);
  pass = pass && close(s5.weights()[0], 0.225) && close(s5.weights()[1], 0.225) &&
         close(s5.weights()[2], 0.3) && close(s5.weights()[3], 0.25);

  // Line 6: p = [0.2, 0.3, 0.5], drop the 0.2 expert -> [0.375, 0.625].
  auto s6 = EnsembleState::init(std::vector<int>{0, 1, 2});
  s6.mmu_update(
      std::vector<double>{std::log(1.0 / 0.6), std::log(1.0 / 0.9), std::log(1.0 / 1.5)}, 1.0);
  s6.remove_lowest_accuracy(std::vector<double>{0.1, 0.8, 0.9});
  pass = pass && s6.size() == 2 && close(s6.weights()[0], 0.375) && close(s6.weights()[1], 0.625);

  // Portfolio loss examples.
  pass = pass && close(portfolio_loss(std::vector<double>{0.5, 0.5}, std::vector<double>{1, 1}), 0);
  pass = pass &&
         close(portfolio_loss(std::vector<double>{1.0}, std::vector<double>{2.0}), -std::log(2.0));

  // Distribution validity under 10^4 random update/add/remove operations.
  std::mt19937_64 rng(501);
  auto churn = EnsembleState::init(std::vector<int>{0, 1, 2, 3});
  int next_id = 4;
  for (int op = 0; op < 10000; ++op) {
    const int kind = static_cast<int>(rng() % 3);
    if (kind == 0) {
      std::vector<double> losses(churn.size());
      for (auto& l : losses) l = to_unit(rng());
      churn.mmu_update(losses, 0.1 + to_unit(rng()));
    } else if (kind == 1 && churn.size() < 16) {
      churn.add_expert(next_id++, 1 + static_cast<int>(rng() % 100));
    } else if (churn.size() >= 2) {
      std::vector<double> accs(churn.size());
      for (auto& a : accs) a = to_unit(rng());
      churn.remove_lowest_accuracy(accs);
    }
    double sum = 0.0;
    bool nonneg = true;
    for (double p : churn.weights()) {
      sum += p;
      nonneg = nonneg && p >= 0.0;
    }
    if (!nonneg || std::abs(sum - 1.0) > 1e-9) return {false, "distribution broke under churn"};
  }
  return {pass, pass ? "lines 1,3-6 match hand values to 1e-12; 10^4 ops stay valid"
                     : "hand-derived value mismatch"};
}

// ---------------------------------------------------------------------------
// Criterion 6: multiplicative-weights regret bound over 100 random streams,
// and the adaptive-regret scan against a brute-force oracle for T <= 50.
// ---------------------------------------------------------------------------

Outcome criterion_regret() {
  const int K = 5, T = 200;
  const double eta = 0.5;
  const double bound = std::log(5.0) / eta + eta * T / 8.0;
  std::mt19937_64 rng(601);
  double worst_margin = -1e18;
  for (int stream = 0; stream < 100; ++stream) {
    auto s = EnsembleState::init(std::vector<int>{0, 1, 2, 3, 4});
    RegretLedger ledger;
    for (int t = 0; t < T; ++t) {
      std::vector<double> losses(K);
      for (auto& l : losses) l = to_unit(rng());
      if (stream % 3 == 0) {
        // Adversarial: hammer the currently heaviest expert.
        std::size_t heavy = 0;
        for (std::size_t k = 1; k < s.weights().size(); ++k) {
          if (s.weights()[k] > s.weights()[heavy]) heavy = k;
        }
        losses[heavy] = 1.0;
      } else if (stream % 3 == 1) {
        // Phase-switching best expert.
        for (int k = 0; k < K; ++k) losses[k] = 0.5 + 0.5 * to_unit(rng());
        losses[(t / 25) % K] = 0.1 * to_unit(rng());
      }
      double expected = 0.0;
      for (int k = 0; k < K; ++k) expected += s.weights()[k] * losses[k];
      ledger.record(losses, expected);
      s.mmu_update(losses, eta);
    }
    worst_margin = std::max(worst_margin, ledger.regret() - bound);
    if (ledger.regret() > bound) {
      char buf[96];
      std::snprintf(buf, sizeof(buf), "bound violated on stream %d: regret %.4f > %.4f", stream,
                    ledger.regret(), bound);
      return {false, buf};
    }
  }

  // DR oracle, T <= 50: exhaustive fresh-sum scan.
  for (int trial = 0; trial < 20; ++trial) {
    const int t_count = 5 + static_cast<int>(rng() % 46);
    const int k_count = 2 + static_cast<int>(rng() % 4);
    RegretLedger ledger;
    std::vector<std::vector<double>> losses(t_count, std::vector<double>(k_count));
    std::vector<double> ens(t_count);
    for (int t = 0; t < t_count; ++t) {
      for (int k = 0; k < k_count; ++k) losses[t][k] = to_unit(rng());
      ens[t] = to_unit(rng());
      ledger.record(losses[t], ens[t]);
    }
    double expect = -1e300;
    for (int r = 0; r < t_count; ++r) {
      for (int s2 = r; s2 < t_count; ++s2) {
        double ens_sum = 0.0;
        for (int t = r; t <= s2; ++t) ens_sum += ens[t];
        double best = 1e300;
        for (int k = 0; k < k_count; ++k) {
          double es = 0.0;
          for (int t = r; t <= s2; ++t) es += losses[t][k];
          best = std::min(best, es);
        }
        expect = std::max(expect, ens_sum - best);
      }
    }
    if (std::abs(ledger.adaptive_regret() - expect) > 1e-9)
      return {false, "adaptive regret disagrees with the brute-force interval scan"};
  }
  char buf[96];
  std::snprintf(buf, sizeof(buf), "100 streams under the bound (worst margin %+.3f); DR oracle ok",
                worst_margin);
  return {true, buf};
}

// ---------------------------------------------------------------------------
// Criteria 7 and 9: the synthetic drifting-community benchmark.
// ---------------------------------------------------------------------------

struct BenchmarkResult {
  RunReport report;
  std::map<int, std::string> names;
  double seconds = 0.0;
};

BenchmarkResult run_benchmark(const fs::path& dir) {
  fs::create_directories(dir);
  SynthConfig synth;
  synth.communities = 60;
  synth.members_per_community = 10;
  synth.slots = 10;
  synth.pairs_per_slot = 10000;
  synth.intra_prob = 0.9;
  synth.turnover_rate = 0.15;
  synth.migrate_rate = 0.0;
  synth.dissolve_rate = 0.3;
  synth.seed = 20260809;
  {
    std::ofstream out(dir / "stream.txt", std::ios::binary);
    synth_stream(synth, out);
  }
  PipelineConfig cfg = PipelineConfig::from_json_text(R"({
    "seed": 7,
    "slot_size": 10000,
    "models": [
      {"name": "reach_d50", "kind": "reachability", "decay": 0.5},
      {"name": "amount_d25", "kind": "amount", "decay": 0.25},
      {"name": "amount_d50", "kind": "amount", "decay": 0.5},
      {"name": "amount_d75", "kind": "amount", "decay": 0.75},
      {"name": "amount_d50_s2", "kind": "amount", "decay": 0.5, "start_slot": 2},
      {"name": "static", "kind": "static"}
    ],
    "walks": {"per_node": 5, "length": 20, "window": 5},
    "embedding": {"dimension": 64, "epochs": 2, "negatives": 3},
    "forecaster": {"hidden": [128, 64], "train_epochs": 12, "fine_tune_epochs": 4,
                   "learning_rate": 0.05},
    "ensemble": {"eta": 0.5},
    "checkpoints": false
  })");
  cfg.input_path = (dir / "stream.txt").string();
  cfg.out_dir = (dir / "out").string();
  const auto t0 = std::chrono::steady_clock::now();
  BenchmarkResult result;
  result.report = run_pipeline(cfg);
  result.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  for (const auto& m : result.report.models) result.names[m.model_id] = m.name;
  return result;
}

double mean_accuracy(const RunReport& report, int model_id, int from_round, int to_round) {
  double sum = 0.0;
  int n = 0;
  for (const auto& r : report.metrics) {
    if (r.model_id == model_id && r.slot >= from_round && r.slot <= to_round) {
      sum += r.metrics.accuracy;
      ++n;
    }
  }
  return n ? sum / n : 0.0;
}

int model_id_by_name(const BenchmarkResult& bench, const std::string& name) {
  for (const auto& [id, n] : bench.names) {
    if (n == name) return id;
  }
  return -1000;
}

Outcome criterion_benchmark(const BenchmarkResult& bench) {
  // Full-dataset headline numbers are out of reach at desk scale; this is the
  // substitute benchmark: decayed models reach 0.60 average accuracy over
  // t3..t9 and beat the static baseline by 10 points.
  const int reach = model_id_by_name(bench, "reach_d50");
  const int amount = model_id_by_name(bench, "amount_d50");
  const int stat = model_id_by_name(bench, "static");
  const double acc_reach = mean_accuracy(bench.report, reach, 3, 9);
  const double acc_amount = mean_accuracy(bench.report, amount, 3, 9);
  const double acc_static = mean_accuracy(bench.report, stat, 3, 9);
  char buf[160];
  std::snprintf(buf, sizeof(buf),
                "t3..t9 mean accuracy: reach %.3f, amount %.3f, static %.3f; runtime %.0fs",
                acc_reach, acc_amount, acc_static, bench.seconds);
  const bool pass = acc_reach >= 0.60 && acc_amount >= 0.60 &&
                    acc_reach - acc_static >= 0.10 && acc_amount - acc_static >= 0.10 &&
                    bench.seconds < 600.0;
  return {pass, buf};
}

Outcome criterion_ensemble_stability(const BenchmarkResult& bench) {
  // Ensemble accuracy at every round t >= 3 is at least the worst expert's,
  // and its round-to-round variance is at most the worst single-expert
  // variance (both over t3..t9).
  std::vector<int> expert_ids;
  for (const auto& m : bench.report.models) {
    if (m.in_ensemble) expert_ids.push_back(m.model_id);
  }
  std::map<int, std::map<int, double>> acc;  // model -> round -> accuracy
  for (const auto& r : bench.report.metrics) acc[r.model_id][r.slot] = r.metrics.accuracy;

  bool above_worst = true;
  for (int t = 3; t <= 9; ++t) {
    double worst = 1e18;
    for (int id : expert_ids) worst = std::min(worst, acc[id][t]);
    if (acc[-1][t] < worst - 1e-12) above_worst = false;
  }
  auto variance = [&](int id) {
    double mean = 0.0;
    for (int t = 3; t <= 9; ++t) mean += acc[id][t];
    mean /= 7.0;
    double var = 0.0;
    for (int t = 3; t <= 9; ++t) var += (acc[id][t] - mean) * (acc[id][t] - mean);
    return var / 7.0;
  };
  double max_expert_var = 0.0;
  for (int id : expert_ids) max_expert_var = std::max(max_expert_var, variance(id));
  const double ens_var = variance(-1);
  char buf[128];
  std::snprintf(buf, sizeof(buf),
                "ensemble >= worst expert at every t>=3: %s; variance %.2e <= max expert %.2e",
                above_worst ? "yes" : "NO", ens_var, max_expert_var);
  return {above_worst && ens_var <= max_expert_var, buf};
}

// ---------------------------------------------------------------------------
// Criterion 8: per-slot embedding runtime, decayed < static from round 3 on,
// on a stream with heavy account turnover.
// ---------------------------------------------------------------------------

Outcome criterion_runtime_ordering(const fs::path& dir) {
  fs::create_directories(dir);
  SynthConfig synth;
  synth.communities = 10;
  synth.members_per_community = 12;
  synth.slots = 8;
  synth.pairs_per_slot = 1500;
  synth.turnover_rate = 0.5;
  synth.migrate_rate = 0.0;
  synth.dissolve_rate = 0.25;
  synth.seed = 88;
  {
    std::ofstream out(dir / "stream.txt", std::ios::binary);
    synth_stream(synth, out);
  }
  PipelineConfig cfg = PipelineConfig::from_json_text(R"({
    "seed": 5,
    "slot_size": 1500,
    "models": [
      {"name": "reachability", "kind": "reachability", "decay": 0.25},
      {"name": "amount", "kind": "amount", "decay": 0.25},
      {"name": "static", "kind": "static"}
    ],
    "walks": {"per_node": 6, "length": 20, "window": 5},
    "embedding": {"dimension": 48, "epochs": 3, "negatives": 3},
    "forecaster": {"hidden": [32, 16], "train_epochs": 4, "fine_tune_epochs": 2},
    "checkpoints": false
  })");
  cfg.input_path = (dir / "stream.txt").string();
  cfg.out_dir = (dir / "out").string();
  const auto report = run_pipeline(cfg);

  std::map<int, std::map<std::string, double>> seconds;  // round -> column -> s
  for (const auto& s : report.runtime) seconds[s.slot][s.column] += s.seconds;
  bool ordered = true;
  std::ostringstream detail;
  for (int round = 3; round <= 7; ++round) {
    const double stat = seconds[round]["static"];
    const double reach = seconds[round]["reachability"];
    const double amount = seconds[round]["amount"];
    detail << "t" << round << " " << std::fixed << reach << "/" << amount << "/" << stat << "s ";
    if (!(reach < stat) || !(amount < stat)) ordered = false;
  }
  return {ordered, "decayed/static per-round embedding seconds: " + detail.str()};
}

// ---------------------------------------------------------------------------
// Criterion 10: byte-identical reports for identical config and seed.
// ---------------------------------------------------------------------------

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

Outcome criterion_determinism(const fs::path& dir) {
  fs::create_directories(dir);
  SynthConfig synth;
  synth.communities = 10;
  synth.members_per_community = 10;
  synth.slots = 6;
  synth.pairs_per_slot = 2000;
  synth.turnover_rate = 0.2;
  synth.migrate_rate = 0.25;
  synth.seed = 17;
  {
    std::ofstream out(dir / "stream.txt", std::ios::binary);
    synth_stream(synth, out);
  }
  PipelineConfig cfg = PipelineConfig::from_json_text(R"({
    "seed": 99,
    "slot_size": 2000,
    "models": [
      {"kind": "reachability", "decay": 0.5},
      {"kind": "amount", "decay": 0.5},
      {"kind": "amount", "decay": 0.25},
      {"kind": "static"}
    ],
    "walks": {"per_node": 4, "length": 12, "window": 4},
    "embedding": {"dimension": 24, "epochs": 2, "negatives": 3},
    "forecaster": {"hidden": [24, 12], "train_epochs": 6, "fine_tune_epochs": 2},
    "checkpoints": false
  })");
  cfg.input_path = (dir / "stream.txt").string();
  cfg.out_dir = (dir / "run1").string();
  run_pipeline(cfg);
  cfg.out_dir = (dir / "run2").string();
  run_pipeline(cfg);
  const bool metrics_same =
      slurp(dir / "run1" / "metrics.csv") == slurp(dir / "run2" / "metrics.csv");
  const bool ledger_same =
      slurp(dir / "run1" / "ensemble_ledger.csv") == slurp(dir / "run2" / "ensemble_ledger.csv");
  std::string detail = std::string("metrics.csv ") + (metrics_same ? "identical" : "DIFFER") +
                       ", ensemble_ledger.csv " + (ledger_same ? "identical" : "DIFFER");
  return {metrics_same && ledger_same, detail};
}

}  // namespace

int main() {
  const fs::path work = fs::temp_directory_path() / "txf_acceptance";
  fs::remove_all(work);
  fs::create_directories(work);

  int failures = 0;
  int index = 0;
  BenchmarkResult bench;  // shared by criteria 7 and 9

  auto run = [&](const char* name, const std::function<Outcome()>& fn) {
    ++index;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome outcome;
    try {
      outcome = fn();
    } catch (const std::exception& e) {
      outcome = {false, std::string("exception: ") + e.what()};
    }
    const double dt = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("%s  [%2d] %s (%.1fs): %s\n", outcome.pass ? "PASS" : "FAIL", index, name, dt,
                outcome.detail.c_str());
    std::fflush(stdout);
    if (!outcome.pass) ++failures;
  };

  run("Eq.-1 oracle equivalence", criterion_eq1_oracle);
  run("opt-out pruning reproduction", criterion_optout);
  run("gradient checks vs finite differences", criterion_gradients);
  run("metric oracle", criterion_metric_oracle);
  run("MMU algebra", criterion_mmu_algebra);
  run("MW regret bound and DR oracle", criterion_regret);
  run("synthetic benchmark: decayed beats static", [&]() {
    bench = run_benchmark(work / "bench");
    return criterion_benchmark(bench);
  });
  run("runtime ordering: decayed embeds faster than static", [&]() {
    return criterion_runtime_ordering(work / "runtime");
  });
  run("ensemble stability", [&]() { return criterion_ensemble_stability(bench); });
  run("determinism: byte-identical reports", [&]() { return criterion_determinism(work / "det"); });

  std::printf("%d/%d criteria passed\n", index - failures, index);
  return failures;
}
