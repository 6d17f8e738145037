#include "txf/forecaster.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <numeric>
#include <ostream>
#include <random>
#include <stdexcept>

#include "txf/rng.hpp"

namespace txf {

namespace {

double sigmoid(double x) {
  if (x > 40.0) return 1.0;
  if (x < -40.0) return 0.0;
  return 1.0 / (1.0 + std::exp(-x));
}

// Clamped log keeps the loss finite when a prediction saturates.
double safe_log(double x) { return std::log(std::max(x, 1e-300)); }

struct Activations {
  std::vector<std::vector<double>> pre;   // pre-activation per layer
  std::vector<std::vector<double>> post;  // post-activation per layer
};

double forward(const ForecastModel& model, std::span<const double> x, Activations* acts) {
  const double* cur = x.data();
  std::size_t cur_n = x.size();
  static thread_local std::vector<std::vector<double>> scratch;
  scratch.resize(model.layers.size());
  if (acts) {
    acts->pre.resize(model.layers.size());
    acts->post.resize(model.layers.size());
  }
  double z_out = 0.0;
  for (std::size_t l = 0; l < model.layers.size(); ++l) {
    const DenseLayer& layer = model.layers[l];
    if (static_cast<int>(cur_n) != layer.in)
      throw std::invalid_argument("forecast forward: feature size mismatch");
    const bool last = l + 1 == model.layers.size();
    std::vector<double>& z = acts ? acts->pre[l] : scratch[l];
    z.assign(layer.out, 0.0);
    for (int r = 0; r < layer.out; ++r) {
      const double* wr = layer.W.data() + static_cast<std::size_t>(r) * layer.in;
      double s = layer.b[r];
      for (int c = 0; c < layer.in; ++c) s += wr[c] * cur[c];
      z[r] = s;
    }
    if (last) {
      z_out = z[0];
      if (acts) acts->post[l] = {sigmoid(z_out)};
      break;
    }
    std::vector<double>* a = &z;
    if (acts) {
      acts->post[l] = z;
      a = &acts->post[l];
    }
    for (auto& v : *a) v = std::max(0.0, v);
    cur = a->data();
    cur_n = a->size();
  }
  return sigmoid(z_out);
}

}  // namespace

ForecastModel::ForecastModel(int input_dim, std::span<const int> hidden, std::uint64_t seed) {
  if (input_dim < 1) throw std::invalid_argument("ForecastModel: input_dim must be >= 1");
  std::vector<int> dims;
  dims.push_back(input_dim);
  for (int h : hidden) {
    if (h < 1) throw std::invalid_argument("ForecastModel: hidden sizes must be >= 1");
    dims.push_back(h);
  }
  dims.push_back(1);
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    DenseLayer layer;
    layer.in = dims[l];
    layer.out = dims[l + 1];
    layer.W.resize(static_cast<std::size_t>(layer.in) * layer.out);
    layer.b.assign(layer.out, 0.0);
    std::mt19937_64 rng(mix_seed(seed, 0xf0, l));
    const double r = std::sqrt(6.0 / (layer.in + layer.out));
    for (auto& w : layer.W) w = (to_unit(rng()) * 2.0 - 1.0) * r;
    layers.push_back(std::move(layer));
  }
}

double ForecastModel::predict(std::span<const double> features) const {
  return forward(*this, features, nullptr);
}

void ForecastModel::save(std::ostream& out) const {
  char buf[64];
  out << layers.size();
  for (const auto& l : layers) out << ' ' << l.in << ' ' << l.out;
  out << '\n';
  for (const auto& l : layers) {
    for (std::size_t i = 0; i < l.W.size(); ++i) {
      std::snprintf(buf, sizeof(buf), "%.17g", l.W[i]);
      out << buf << (i + 1 == l.W.size() ? '\n' : ' ');
    }
    for (std::size_t i = 0; i < l.b.size(); ++i) {
      std::snprintf(buf, sizeof(buf), "%.17g", l.b[i]);
      out << buf << (i + 1 == l.b.size() ? '\n' : ' ');
    }
  }
}

ForecastModel ForecastModel::load(std::istream& in) {
  std::size_t n = 0;
  if (!(in >> n)) throw std::runtime_error("model load: bad header");
  ForecastModel model;
  for (std::size_t l = 0; l < n; ++l) {
    DenseLayer layer;
    if (!(in >> layer.in >> layer.out)) throw std::runtime_error("model load: bad shape");
    layer.W.resize(static_cast<std::size_t>(layer.in) * layer.out);
    layer.b.resize(layer.out);
    model.layers.push_back(std::move(layer));
  }
  for (auto& layer : model.layers) {
    for (auto& w : layer.W) in >> w;
    for (auto& b : layer.b) in >> b;
    if (!in) throw std::runtime_error("model load: truncated");
  }
  return model;
}

std::size_t PairHash::operator()(const std::pair<Address, Address>& p) const {
  return static_cast<std::size_t>(
      mix_seed(static_cast<std::uint64_t>(p.first), static_cast<std::uint64_t>(p.second)));
}

PairSet transacting_pairs(std::span<const PairEvent> events) {
  PairSet set;
  set.reserve(events.size());
  for (const auto& e : events) {
    if (e.sender == e.receiver) continue;
    const auto mm = std::minmax(e.sender, e.receiver);
    set.insert({mm.first, mm.second});
  }
  return set;
}

std::vector<std::pair<Address, Address>> sample_negative_pairs(
    std::span<const Address> pool, const PairSet& excluded, std::size_t want, std::uint64_t seed,
    const std::function<bool(Address, Address)>& accept) {
  std::vector<std::pair<Address, Address>> out;
  if (want == 0 || pool.size() < 2) return out;
  std::uint64_t state = mix_seed(seed, 0x9e9e);
  auto next = [&state]() {
    state = splitmix64(state);
    return state;
  };
  PairSet chosen;
  const std::size_t n = pool.size();
  const std::size_t possible = n * (n - 1) / 2;
  if (possible <= std::max<std::size_t>(4 * want, 1024)) {
    // Small pool: enumerate eligible pairs and take a deterministic sample.
    std::vector<std::pair<Address, Address>> eligible;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i + 1; j < n; ++j) {
        std::pair<Address, Address> p{pool[i], pool[j]};
        if (excluded.count(p)) continue;
        if (accept && !accept(p.first, p.second)) continue;
        eligible.push_back(p);
      }
    }
    std::mt19937_64 rng(mix_seed(seed, 0x7777));
    std::shuffle(eligible.begin(), eligible.end(), rng);
    if (eligible.size() > want) eligible.resize(want);
    std::sort(eligible.begin(), eligible.end());
    return eligible;
  }
  std::size_t attempts = 0;
  const std::size_t max_attempts = 200 * want;
  while (out.size() < want && attempts < max_attempts) {
    ++attempts;
    const Address a = pool[next() % n];
    const Address b = pool[next() % n];
    if (a == b) continue;
    const auto mm = std::minmax(a, b);
    std::pair<Address, Address> p{mm.first, mm.second};
    if (excluded.count(p) || chosen.count(p)) continue;
    if (accept && !accept(p.first, p.second)) continue;
    chosen.insert(p);
    out.push_back(p);
  }
  std::sort(out.begin(), out.end());
  return out;
}

ExampleSet make_examples(std::span<const PairEvent> slot_events, const DecayedGraph& graph,
                         const EmbeddingTable& embeddings, double neg_ratio, std::uint64_t seed) {
  if (neg_ratio < 0.0) throw std::invalid_argument("make_examples: neg_ratio must be >= 0");
  ExampleSet set;
  const int slot = slot_events.empty() ? -1 : slot_events.front().slot_index;
  const PairSet transacting = transacting_pairs(slot_events);
  std::vector<std::pair<Address, Address>> positives;
  positives.reserve(transacting.size());
  for (const auto& p : transacting) {
    if (embeddings.contains(p.first) && embeddings.contains(p.second))
      positives.push_back(p);
    else
      ++set.skipped_unembedded;
  }
  std::sort(positives.begin(), positives.end());
  set.positives = static_cast<std::int64_t>(positives.size());
  if (positives.empty()) {
    set.empty_warning = true;
    return set;
  }

  std::vector<Address> pool;
  for (Address a : graph.live_nodes()) {
    if (embeddings.contains(a)) pool.push_back(a);
  }
  const auto want = static_cast<std::size_t>(std::llround(neg_ratio * positives.size()));
  const auto negatives = sample_negative_pairs(pool, transacting, want, seed);
  set.negatives = static_cast<std::int64_t>(negatives.size());
  set.negative_shortfall = negatives.size() < want;

  set.examples.reserve(positives.size() + negatives.size());
  for (const auto& [u, v] : positives) set.examples.push_back({u, v, 1, slot});
  for (const auto& [u, v] : negatives) set.examples.push_back({u, v, 0, slot});
  return set;
}

std::vector<double> pair_features(const EmbeddingTable& embeddings, Address u, Address v) {
  const auto mm = std::minmax(u, v);
  const auto eu = embeddings.lookup(mm.first);
  const auto ev = embeddings.lookup(mm.second);
  if (!eu || !ev) return {};
  std::vector<double> x;
  x.reserve(eu->size() + ev->size());
  x.insert(x.end(), eu->begin(), eu->end());
  x.insert(x.end(), ev->begin(), ev->end());
  return x;
}

std::optional<double> predict_pair(const ForecastModel& model, const EmbeddingTable& embeddings,
                                   Address u, Address v) {
  const auto x = pair_features(embeddings, u, v);
  if (x.empty()) return std::nullopt;
  return model.predict(x);
}

namespace {

// Backpropagates one example; returns the unscaled output delta (yhat - y).
void backward_example(ForecastModel& model, const Activations& acts,
                      std::span<const double> x, double delta_out, double scale) {
  const std::size_t L = model.layers.size();
  std::vector<double> delta{delta_out};
  for (std::size_t li = L; li-- > 0;) {
    DenseLayer& layer = model.layers[li];
    const double* input = li == 0 ? x.data() : acts.post[li - 1].data();
    std::vector<double> prev_delta(layer.in, 0.0);
    for (int r = 0; r < layer.out; ++r) {
      const double d = delta[r] * scale;
      double* wr = layer.W.data() + static_cast<std::size_t>(r) * layer.in;
      for (int c = 0; c < layer.in; ++c) {
        prev_delta[c] += wr[c] * delta[r];
        wr[c] -= d * input[c];
      }
      layer.b[r] -= d;
    }
    if (li == 0) break;
    for (int c = 0; c < model.layers[li - 1].out; ++c) {
      if (acts.pre[li - 1][c] <= 0.0) prev_delta[c] = 0.0;
    }
    delta = std::move(prev_delta);
  }
}

}  // namespace

FitStats train(ForecastModel& model, std::span<const LabeledEdgeExample> examples,
               const EmbeddingTable& embeddings, int epochs, double learning_rate,
               std::uint64_t seed) {
  FitStats stats;
  const int in_dim = model.input_dim();
  std::vector<std::vector<double>> features;
  std::vector<int> labels;
  features.reserve(examples.size());
  for (const auto& ex : examples) {
    auto x = pair_features(embeddings, ex.u, ex.v);
    if (x.empty() || static_cast<int>(x.size()) != in_dim) {
      ++stats.skipped;
      continue;
    }
    features.push_back(std::move(x));
    labels.push_back(ex.label);
  }
  stats.used = features.size();
  if (features.empty()) return stats;

  std::vector<std::size_t> order(features.size());
  std::iota(order.begin(), order.end(), 0);
  Activations acts;
  for (int e = 0; e < epochs; ++e) {
    std::mt19937_64 shuffler(mix_seed(seed, 0x51ULL, static_cast<std::uint64_t>(e)));
    std::shuffle(order.begin(), order.end(), shuffler);
    for (std::size_t i : order) {
      const double y = forward(model, features[i], &acts);
      const double delta = y - labels[i];
      backward_example(model, acts, features[i], delta, learning_rate);
    }
  }
  return stats;
}

FitStats fine_tune(ForecastModel& model, std::span<const LabeledEdgeExample> examples,
                   const EmbeddingTable& embeddings, int epochs, double learning_rate,
                   std::uint64_t seed) {
  return train(model, examples, embeddings, epochs, learning_rate, seed);
}

Metrics evaluate(std::span<const double> predictions, std::span<const int> labels,
                 double threshold) {
  if (predictions.size() != labels.size())
    throw std::invalid_argument("evaluate: predictions and labels differ in length");
  Metrics m;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    const bool pred = predictions[i] >= threshold;
    const bool truth = labels[i] != 0;
    if (pred && truth) ++m.tp;
    else if (pred && !truth) ++m.fp;
    else if (!pred && truth) ++m.fn;
    else ++m.tn;
  }
  const std::int64_t total = m.tp + m.tn + m.fp + m.fn;
  m.accuracy = total == 0 ? 0.0 : static_cast<double>(m.tp + m.tn) / total;
  m.precision = (m.tp + m.fp) == 0 ? 0.0 : static_cast<double>(m.tp) / (m.tp + m.fp);
  m.recall = (m.tp + m.fn) == 0 ? 0.0 : static_cast<double>(m.tp) / (m.tp + m.fn);
  m.f1 = (m.precision + m.recall) == 0.0
             ? 0.0
             : 2.0 * m.precision * m.recall / (m.precision + m.recall);
  return m;
}

ForecastGradients forecaster_gradients(const ForecastModel& model,
                                       std::span<const LabeledEdgeExample> examples,
                                       const EmbeddingTable& embeddings) {
  ForecastGradients g;
  g.grads.reserve(model.layers.size());
  for (const auto& l : model.layers) {
    DenseLayer zero;
    zero.in = l.in;
    zero.out = l.out;
    zero.W.assign(l.W.size(), 0.0);
    zero.b.assign(l.b.size(), 0.0);
    g.grads.push_back(std::move(zero));
  }
  std::size_t n = 0;
  Activations acts;
  std::vector<std::vector<double>> feats;
  std::vector<int> labels;
  for (const auto& ex : examples) {
    auto x = pair_features(embeddings, ex.u, ex.v);
    if (x.empty()) continue;
    feats.push_back(std::move(x));
    labels.push_back(ex.label);
    ++n;
  }
  if (n == 0) return g;
  const double inv = 1.0 / static_cast<double>(n);
  for (std::size_t i = 0; i < feats.size(); ++i) {
    const double y = forward(model, feats[i], &acts);
    g.loss += -(labels[i] * safe_log(y) + (1 - labels[i]) * safe_log(1.0 - y)) * inv;
    std::vector<double> delta{(y - labels[i]) * inv};
    const std::size_t L = model.layers.size();
    for (std::size_t li = L; li-- > 0;) {
      const DenseLayer& layer = model.layers[li];
      const double* input = li == 0 ? feats[i].data() : acts.post[li - 1].data();
      std::vector<double> prev_delta(layer.in, 0.0);
      for (int r = 0; r < layer.out; ++r) {
        const double* wr = layer.W.data() + static_cast<std::size_t>(r) * layer.in;
        double* gw = g.grads[li].W.data() + static_cast<std::size_t>(r) * layer.in;
        for (int c = 0; c < layer.in; ++c) {
          prev_delta[c] += wr[c] * delta[r];
          gw[c] += delta[r] * input[c];
        }
        g.grads[li].b[r] += delta[r];
      }
      if (li == 0) break;
      for (int c = 0; c < model.layers[li - 1].out; ++c) {
        if (acts.pre[li - 1][c] <= 0.0) prev_delta[c] = 0.0;
      }
      delta = std::move(prev_delta);
    }
  }
  return g;
}

double forecaster_loss(const ForecastModel& model, std::span<const LabeledEdgeExample> examples,
                       const EmbeddingTable& embeddings) {
  double loss = 0.0;
  std::size_t n = 0;
  for (const auto& ex : examples) {
    const auto y = predict_pair(model, embeddings, ex.u, ex.v);
    if (!y) continue;
    loss += -(ex.label * safe_log(*y) + (1 - ex.label) * safe_log(1.0 - *y));
    ++n;
  }
  return n == 0 ? 0.0 : loss / static_cast<double>(n);
}

}  // namespace txf
