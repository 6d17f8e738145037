#include "txf/embedder.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <numeric>
#include <ostream>
#include <random>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "txf/rng.hpp"

namespace txf {

namespace {

double init_component(std::uint64_t init_seed, Address a, int k, int which, int dim) {
  const std::uint64_t u = mix_seed(init_seed, static_cast<std::uint64_t>(a),
                                   static_cast<std::uint64_t>(k * 2 + which));
  return (to_unit(u) - 0.5) / dim;
}

double dot(const double* a, const double* b, int n) {
  double s = 0.0;
  for (int i = 0; i < n; ++i) s += a[i] * b[i];
  return s;
}

double sigmoid(double x) {
  if (x > 40.0) return 1.0;
  if (x < -40.0) return 0.0;
  return 1.0 / (1.0 + std::exp(-x));
}

}  // namespace

EmbeddingTable::EmbeddingTable(int dimension, std::uint64_t init_seed)
    : dim_(dimension), init_seed_(init_seed) {
  if (dimension < 1) throw std::invalid_argument("EmbeddingTable: dimension must be >= 1");
}

std::optional<std::size_t> EmbeddingTable::index_of(Address a) const {
  auto it = index_.find(a);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::size_t EmbeddingTable::ensure(Address a) {
  auto it = index_.find(a);
  if (it != index_.end()) return it->second;
  const std::size_t idx = addresses_.size();
  addresses_.push_back(a);
  index_.emplace(a, idx);
  input_.resize(input_.size() + dim_);
  output_.resize(output_.size() + dim_);
  for (int k = 0; k < dim_; ++k) {
    input_[idx * dim_ + k] = init_component(init_seed_, a, k, 0, dim_);
    output_[idx * dim_ + k] = init_component(init_seed_, a, k, 1, dim_);
  }
  return idx;
}

std::optional<std::span<const double>> EmbeddingTable::lookup(Address a) const {
  auto idx = index_of(a);
  if (!idx) return std::nullopt;
  return std::span<const double>(input_row(*idx), static_cast<std::size_t>(dim_));
}

SkipGramGradients skipgram_exact_gradients(const EmbeddingTable& table,
                                           std::span<const ContextPair> pairs) {
  const int dim = table.dimension();
  const std::size_t n = table.size();
  SkipGramGradients g;
  g.d_input.assign(n * dim, 0.0);
  g.d_output.assign(n * dim, 0.0);
  if (pairs.empty()) return g;

  std::vector<double> logits(n), probs(n);
  double total_weight = 0.0;
  for (const auto& pr : pairs) {
    const auto ti = table.index_of(pr.target);
    const auto ci = table.index_of(pr.context);
    if (!ti || !ci) throw std::invalid_argument("skipgram_exact_gradients: pair endpoint missing");
    const double* u = table.input_row(*ti);
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < n; ++j) {
      logits[j] = dot(u, table.output_row(j), dim);
      mx = std::max(mx, logits[j]);
    }
    double z = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      probs[j] = std::exp(logits[j] - mx);
      z += probs[j];
    }
    const double w = pr.weight;
    g.loss += w * (-(logits[*ci] - mx) + std::log(z));
    for (std::size_t j = 0; j < n; ++j) {
      const double p = probs[j] / z;
      const double coeff = w * (p - (j == *ci ? 1.0 : 0.0));
      const double* vj = table.output_row(j);
      double* dout = g.d_output.data() + j * dim;
      double* din = g.d_input.data() + *ti * dim;
      for (int k = 0; k < dim; ++k) {
        dout[k] += coeff * u[k];
        din[k] += coeff * vj[k];
      }
    }
    total_weight += w;
  }
  if (total_weight > 0.0) {
    const double inv = 1.0 / total_weight;
    g.loss *= inv;
    for (auto& x : g.d_input) x *= inv;
    for (auto& x : g.d_output) x *= inv;
  }
  return g;
}

double skipgram_exact_loss(const EmbeddingTable& table, std::span<const ContextPair> pairs) {
  const int dim = table.dimension();
  const std::size_t n = table.size();
  double loss = 0.0, total_weight = 0.0;
  std::vector<double> logits(n);
  for (const auto& pr : pairs) {
    const auto ti = table.index_of(pr.target);
    const auto ci = table.index_of(pr.context);
    if (!ti || !ci) throw std::invalid_argument("skipgram_exact_loss: pair endpoint missing");
    const double* u = table.input_row(*ti);
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < n; ++j) {
      logits[j] = dot(u, table.output_row(j), dim);
      mx = std::max(mx, logits[j]);
    }
    double z = 0.0;
    for (std::size_t j = 0; j < n; ++j) z += std::exp(logits[j] - mx);
    loss += pr.weight * (-(logits[*ci] - mx) + std::log(z));
    total_weight += pr.weight;
  }
  return total_weight > 0.0 ? loss / total_weight : 0.0;
}

std::vector<double> skipgram_predict_distribution(const EmbeddingTable& table, Address target) {
  const auto ti = table.index_of(target);
  if (!ti) throw std::invalid_argument("skipgram_predict_distribution: unknown target");
  const int dim = table.dimension();
  const std::size_t n = table.size();
  std::vector<double> out(n);
  const double* u = table.input_row(*ti);
  double mx = -std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < n; ++j) {
    out[j] = dot(u, table.output_row(j), dim);
    mx = std::max(mx, out[j]);
  }
  double z = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    out[j] = std::exp(out[j] - mx);
    z += out[j];
  }
  for (std::size_t j = 0; j < n; ++j) out[j] /= z;
  return out;
}

namespace {

struct UsablePairs {
  std::vector<std::uint32_t> target;   // table indices
  std::vector<std::uint32_t> context;
  std::vector<double> weight;
};

// Noise distribution over context occurrences^0.75, by table index.
struct NoiseTable {
  std::vector<double> cum;
  std::vector<std::uint32_t> idx;

  NoiseTable(const UsablePairs& pairs, std::size_t vocab) {
    std::vector<double> counts(vocab, 0.0);
    for (std::uint32_t c : pairs.context) counts[c] += 1.0;
    double total = 0.0;
    for (std::size_t i = 0; i < vocab; ++i) {
      if (counts[i] <= 0.0) continue;
      total += std::pow(counts[i], 0.75);
      idx.push_back(static_cast<std::uint32_t>(i));
      cum.push_back(total);
    }
  }

  std::uint32_t sample(std::uint64_t& state) const {
    state = splitmix64(state);
    const double x = to_unit(state) * cum.back();
    const std::size_t pick = std::upper_bound(cum.begin(), cum.end(), x) - cum.begin();
    return idx[std::min(pick, idx.size() - 1)];
  }
};

void sgd_range(EmbeddingTable& table, const UsablePairs& pairs, const NoiseTable& noise,
               std::span<const std::size_t> order, const SkipGramConfig& cfg,
               std::uint64_t seed, std::size_t total_steps, std::size_t step_base) {
  const int dim = table.dimension();
  std::uint64_t state = mix_seed(seed, 0xabcdULL);
  std::vector<double> acc(dim);
  std::size_t step = step_base;
  for (std::size_t pi : order) {
    const double frac = total_steps > 1 ? static_cast<double>(step) / (total_steps - 1) : 1.0;
    const double lr =
        std::max(cfg.min_learning_rate, cfg.learning_rate * (1.0 - frac));
    ++step;
    double* u = table.input_row(pairs.target[pi]);
    const double w = pairs.weight[pi];
    std::fill(acc.begin(), acc.end(), 0.0);
    for (int s = 0; s <= cfg.negatives_per_positive; ++s) {
      std::uint32_t out_idx;
      double label;
      if (s == 0) {
        out_idx = pairs.context[pi];
        label = 1.0;
      } else {
        out_idx = noise.sample(state);
        for (int retry = 0; retry < 8 && out_idx == pairs.context[pi]; ++retry)
          out_idx = noise.sample(state);
        if (out_idx == pairs.context[pi]) continue;
        label = 0.0;
      }
      double* v = table.output_row(out_idx);
      const double g = (sigmoid(dot(u, v, dim)) - label) * lr * w;
      for (int k = 0; k < dim; ++k) {
        acc[k] += g * v[k];
        v[k] -= g * u[k];
      }
    }
    for (int k = 0; k < dim; ++k) u[k] -= acc[k];
  }
}

}  // namespace

SkipGramStats train_skipgram(EmbeddingTable& table, std::span<const ContextPair> pairs,
                             const SkipGramConfig& config, std::uint64_t seed,
                             const std::function<bool(Address)>& live) {
  if (config.mode == SkipGramConfig::Mode::NegativeSampling && config.negatives_per_positive < 1)
    throw std::invalid_argument("train_skipgram: negatives_per_positive must be >= 1");
  if (table.dimension() == 0)
    throw std::invalid_argument("train_skipgram: table has no dimension");

  SkipGramStats stats;
  UsablePairs usable;
  usable.target.reserve(pairs.size());
  for (const auto& pr : pairs) {
    if (live && (!live(pr.target) || !live(pr.context))) {
      ++stats.pairs_skipped;
      continue;
    }
    usable.target.push_back(static_cast<std::uint32_t>(table.ensure(pr.target)));
    usable.context.push_back(static_cast<std::uint32_t>(table.ensure(pr.context)));
    usable.weight.push_back(pr.weight);
  }
  stats.pairs_used = usable.target.size();
  if (usable.target.empty()) return stats;

  if (config.mode == SkipGramConfig::Mode::ExactSoftmax) {
    std::vector<ContextPair> kept;
    kept.reserve(usable.target.size());
    for (std::size_t i = 0; i < usable.target.size(); ++i)
      kept.push_back({table.addresses()[usable.target[i]], table.addresses()[usable.context[i]],
                      usable.weight[i]});
    for (int e = 0; e < config.epochs; ++e) {
      SkipGramGradients g = skipgram_exact_gradients(table, kept);
      auto& in = table.input_data();
      auto& out = table.output_data();
      for (std::size_t i = 0; i < in.size(); ++i) in[i] -= config.learning_rate * g.d_input[i];
      for (std::size_t i = 0; i < out.size(); ++i) out[i] -= config.learning_rate * g.d_output[i];
      stats.final_loss = g.loss;
    }
    stats.final_loss = skipgram_exact_loss(table, kept);
    return stats;
  }

  NoiseTable noise(usable, table.size());
  const std::size_t n = usable.target.size();
  const std::size_t total_steps = n * static_cast<std::size_t>(config.epochs);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  for (int e = 0; e < config.epochs; ++e) {
    std::mt19937_64 shuffler(mix_seed(seed, 0x5a4f1ULL, static_cast<std::uint64_t>(e)));
    std::shuffle(order.begin(), order.end(), shuffler);
    if (config.threads <= 1) {
      sgd_range(table, usable, noise, order, config, mix_seed(seed, 1, e), total_steps,
                static_cast<std::size_t>(e) * n);
    } else {
      std::vector<std::thread> workers;
      const std::size_t chunk = (n + config.threads - 1) / config.threads;
      for (int t = 0; t < config.threads; ++t) {
        const std::size_t lo = std::min(n, t * chunk);
        const std::size_t hi = std::min(n, lo + chunk);
        workers.emplace_back([&, lo, hi, t]() {
          sgd_range(table, usable, noise,
                    std::span<const std::size_t>(order.data() + lo, hi - lo), config,
                    mix_seed(seed, 1, e, t), total_steps,
                    static_cast<std::size_t>(e) * n + lo);
        });
      }
      for (auto& w : workers) w.join();
    }
  }
  return stats;
}

EmbeddingTable train_skipgram(std::span<const ContextPair> pairs, const SkipGramConfig& config,
                              std::optional<EmbeddingTable> warm_start, std::uint64_t seed,
                              const std::function<bool(Address)>& live, SkipGramStats* stats) {
  EmbeddingTable table =
      warm_start ? std::move(*warm_start) : EmbeddingTable(config.dimension, mix_seed(seed, 0x11));
  SkipGramStats s = train_skipgram(table, pairs, config, seed, live);
  if (stats) *stats = s;
  return table;
}

void EmbeddingTable::save(std::ostream& out) const {
  char buf[64];
  out << size() << ' ' << dim_ << '\n';
  std::vector<Address> sorted = addresses_;
  std::sort(sorted.begin(), sorted.end());
  for (Address a : sorted) {
    out << a;
    const double* row = input_row(index_.at(a));
    for (int k = 0; k < dim_; ++k) {
      std::snprintf(buf, sizeof(buf), "%.9g", row[k]);
      out << ' ' << buf;
    }
    out << '\n';
  }
}

EmbeddingTable EmbeddingTable::load(std::istream& in, std::uint64_t init_seed) {
  std::size_t count = 0;
  int dim = 0;
  if (!(in >> count >> dim)) throw std::runtime_error("embedding load: bad header");
  EmbeddingTable table(dim, init_seed);
  for (std::size_t i = 0; i < count; ++i) {
    Address a;
    if (!(in >> a)) throw std::runtime_error("embedding load: truncated");
    const std::size_t idx = table.ensure(a);
    double* row = table.input_row(idx);
    for (int k = 0; k < dim; ++k) {
      if (!(in >> row[k])) throw std::runtime_error("embedding load: truncated row");
    }
  }
  return table;
}

void EmbeddingTable::save_full(std::ostream& out) const {
  char buf[64];
  out << size() << ' ' << dim_ << ' ' << init_seed_ << ' ' << slot_of_last_update_ << '\n';
  for (std::size_t i = 0; i < addresses_.size(); ++i) {
    out << addresses_[i];
    for (int k = 0; k < dim_; ++k) {
      std::snprintf(buf, sizeof(buf), "%.17g", input_[i * dim_ + k]);
      out << ' ' << buf;
    }
    for (int k = 0; k < dim_; ++k) {
      std::snprintf(buf, sizeof(buf), "%.17g", output_[i * dim_ + k]);
      out << ' ' << buf;
    }
    out << '\n';
  }
}

EmbeddingTable EmbeddingTable::load_full(std::istream& in) {
  std::size_t count = 0;
  int dim = 0;
  std::uint64_t init_seed = 0;
  int slot = -1;
  if (!(in >> count >> dim >> init_seed >> slot))
    throw std::runtime_error("embedding load_full: bad header");
  EmbeddingTable table(dim, init_seed);
  table.slot_of_last_update_ = slot;
  for (std::size_t i = 0; i < count; ++i) {
    Address a;
    if (!(in >> a)) throw std::runtime_error("embedding load_full: truncated");
    const std::size_t idx = table.ensure(a);
    double* in_row = table.input_row(idx);
    for (int k = 0; k < dim; ++k) in >> in_row[k];
    double* out_row = table.output_row(idx);
    for (int k = 0; k < dim; ++k) in >> out_row[k];
    if (!in) throw std::runtime_error("embedding load_full: truncated row");
  }
  return table;
}

void RuntimeTable::add(int slot, const std::string& column, double seconds) {
  if (std::find(column_order_.begin(), column_order_.end(), column) == column_order_.end())
    column_order_.push_back(column);
  rows_[slot][column] += seconds;
}

void RuntimeTable::write_csv(std::ostream& out) const {
  char buf[64];
  out << "slot";
  for (const auto& c : column_order_) out << ',' << c;
  out << '\n';
  for (const auto& [slot, cols] : rows_) {
    out << slot;
    for (const auto& c : column_order_) {
      auto it = cols.find(c);
      std::snprintf(buf, sizeof(buf), "%.4f", it == cols.end() ? 0.0 : it->second);
      out << ',' << buf;
    }
    out << '\n';
  }
}

}  // namespace txf
