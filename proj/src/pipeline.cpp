#include "txf/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <memory>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "json.hpp"
#include "txf/ensemble.hpp"
#include "txf/rng.hpp"
#include "txf/walker.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace txf {

namespace {

// Tags for deriving independent random streams from (seed, model, slot, tag).
enum SeedTag : std::uint64_t {
  kTagTableInit = 1,
  kTagModelInit = 2,
  kTagWalks = 3,
  kTagEmbed = 4,
  kTagTrainSet = 5,
  kTagFit = 6,
  kTagEvalSet = 7,
};

std::string fd(double x) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.12g", x);
  return buf;
}

std::string default_model_name(const GraphSpec& spec) {
  if (spec.kind == GraphKind::Static) return "static";
  std::ostringstream os;
  os << to_string(spec.kind) << "_d" << fd(spec.decay_base);
  if (spec.start_slot > 0) os << "_s" << spec.start_slot;
  return os.str();
}

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  out << content;
  if (!out) throw std::runtime_error("failed to write " + path.string());
}

}  // namespace

void PipelineConfig::validate() const {
  if (input_path.empty()) throw std::invalid_argument("config: input path is required");
  if (models.empty()) throw std::invalid_argument("config: at least one graph model is required");
  if (slot_size < 1) throw std::invalid_argument("config: slot_size must be >= 1");
  if (bucketing.frequent_cutoff_satoshi <= 0)
    throw std::invalid_argument("config: frequent_cutoff_satoshi must be > 0");
  if (walks_per_node < 1 || walk_length < 1 || window < 1)
    throw std::invalid_argument("config: walk parameters must be >= 1");
  if (embedding.dimension < 1) throw std::invalid_argument("config: embedding dimension must be >= 1");
  if (train_epochs < 0 || fine_tune_epochs < 0)
    throw std::invalid_argument("config: epochs must be >= 0");
  if (neg_ratio < 0.0) throw std::invalid_argument("config: neg_ratio must be >= 0");
  if (eta <= 0.0) throw std::invalid_argument("config: eta must be > 0");
  if (threads < 1) throw std::invalid_argument("config: threads must be >= 1");
  std::vector<int> ids;
  for (const auto& m : models) {
    if (m.graph.kind != GraphKind::Static &&
        (m.graph.decay_base <= 0.0 || m.graph.decay_base >= 1.0))
      throw std::invalid_argument("config: decay must lie in (0,1) for model " + m.name);
    if (m.graph.start_slot < 0)
      throw std::invalid_argument("config: start_slot must be >= 0 for model " + m.name);
    ids.push_back(m.model_id);
  }
  std::sort(ids.begin(), ids.end());
  if (std::adjacent_find(ids.begin(), ids.end()) != ids.end())
    throw std::invalid_argument("config: duplicate model ids");
}

PipelineConfig PipelineConfig::from_json_text(const std::string& text) {
  json j = json::parse(text);
  PipelineConfig c;
  if (!j.contains("seed")) throw std::invalid_argument("config: seed is mandatory");
  c.seed = j.at("seed").get<std::uint64_t>();
  c.input_path = j.value("input", "");
  c.out_dir = j.value("out_dir", "out");
  c.slot_size = j.value("slot_size", std::int64_t{10000});
  c.bucketing.frequent_cutoff_satoshi =
      j.value("frequent_cutoff_satoshi", c.bucketing.frequent_cutoff_satoshi);
  if (j.contains("models")) {
    int next_id = 0;
    for (const auto& m : j.at("models")) {
      ModelInfo info;
      info.model_id = next_id++;
      info.graph.kind = graph_kind_from_string(m.at("kind").get<std::string>());
      info.graph.decay_base = m.value("decay", 0.5);
      info.graph.start_slot = m.value("start_slot", 0);
      info.name = m.value("name", default_model_name(info.graph));
      info.in_ensemble =
          info.graph.kind != GraphKind::Static && m.value("in_ensemble", true);
      c.models.push_back(info);
    }
  }
  if (j.contains("walks")) {
    const auto& w = j.at("walks");
    c.walks_per_node = w.value("per_node", c.walks_per_node);
    c.walk_length = w.value("length", c.walk_length);
    c.window = w.value("window", c.window);
  }
  if (j.contains("embedding")) {
    const auto& e = j.at("embedding");
    c.embedding.dimension = e.value("dimension", c.embedding.dimension);
    c.embedding.epochs = e.value("epochs", c.embedding.epochs);
    c.embedding.learning_rate = e.value("learning_rate", c.embedding.learning_rate);
    c.embedding.min_learning_rate = e.value("min_learning_rate", c.embedding.min_learning_rate);
    c.embedding.negatives_per_positive = e.value("negatives", c.embedding.negatives_per_positive);
    c.embedding.threads = e.value("threads", 1);
    const std::string mode = e.value("mode", std::string("negative_sampling"));
    if (mode == "negative_sampling")
      c.embedding.mode = SkipGramConfig::Mode::NegativeSampling;
    else if (mode == "exact_softmax")
      c.embedding.mode = SkipGramConfig::Mode::ExactSoftmax;
    else
      throw std::invalid_argument("config: unknown embedding mode " + mode);
  }
  if (j.contains("forecaster")) {
    const auto& f = j.at("forecaster");
    if (f.contains("hidden")) c.hidden = f.at("hidden").get<std::vector<int>>();
    c.train_epochs = f.value("train_epochs", c.train_epochs);
    c.fine_tune_epochs = f.value("fine_tune_epochs", c.fine_tune_epochs);
    c.forecaster_lr = f.value("learning_rate", c.forecaster_lr);
    c.neg_ratio = f.value("neg_ratio", c.neg_ratio);
    c.threshold = f.value("threshold", c.threshold);
  }
  if (j.contains("ensemble")) {
    const auto& e = j.at("ensemble");
    c.eta = e.value("eta", c.eta);
    c.adapt_experts = e.value("adapt_experts", c.adapt_experts);
    const std::string mode = e.value("loss_mode", std::string("one_minus_accuracy"));
    if (mode == "one_minus_accuracy")
      c.loss_mode = LossMode::OneMinusAccuracy;
    else if (mode == "log_return")
      c.loss_mode = LossMode::LogReturn;
    else
      throw std::invalid_argument("config: unknown loss_mode " + mode);
  }
  c.threads = j.value("threads", 1);
  c.checkpoints = j.value("checkpoints", true);
  c.max_slots = j.value("max_slots", 0);
  return c;
}

PipelineConfig PipelineConfig::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config " + path);
  std::ostringstream text;
  text << in.rdbuf();
  return from_json_text(text.str());
}

std::string PipelineConfig::to_json_text() const {
  json j;
  j["seed"] = seed;
  j["input"] = input_path;
  j["out_dir"] = out_dir;
  j["slot_size"] = slot_size;
  j["frequent_cutoff_satoshi"] = bucketing.frequent_cutoff_satoshi;
  j["models"] = json::array();
  for (const auto& m : models) {
    json jm;
    jm["name"] = m.name;
    jm["kind"] = to_string(m.graph.kind);
    jm["decay"] = m.graph.decay_base;
    jm["start_slot"] = m.graph.start_slot;
    jm["in_ensemble"] = m.in_ensemble;
    j["models"].push_back(jm);
  }
  j["walks"] = {{"per_node", walks_per_node}, {"length", walk_length}, {"window", window}};
  j["embedding"] = {
      {"dimension", embedding.dimension},
      {"epochs", embedding.epochs},
      {"learning_rate", embedding.learning_rate},
      {"min_learning_rate", embedding.min_learning_rate},
      {"negatives", embedding.negatives_per_positive},
      {"threads", embedding.threads},
      {"mode", embedding.mode == SkipGramConfig::Mode::NegativeSampling ? "negative_sampling"
                                                                        : "exact_softmax"}};
  j["forecaster"] = {{"hidden", hidden},
                     {"train_epochs", train_epochs},
                     {"fine_tune_epochs", fine_tune_epochs},
                     {"learning_rate", forecaster_lr},
                     {"neg_ratio", neg_ratio},
                     {"threshold", threshold}};
  j["ensemble"] = {
      {"eta", eta},
      {"adapt_experts", adapt_experts},
      {"loss_mode",
       loss_mode == LossMode::OneMinusAccuracy ? "one_minus_accuracy" : "log_return"}};
  j["threads"] = threads;
  j["checkpoints"] = checkpoints;
  j["max_slots"] = max_slots;
  return j.dump(2);
}

namespace {

struct ModelRuntime {
  ModelInfo info;
  DecayedGraph graph;
  WalkCorpus corpus;
  bool corpus_ready = false;
  EmbeddingTable table;
  ForecastModel model;
  bool model_ready = false;
  double last_accuracy = -1.0;  // accuracy on the most recent evaluated round; <0 = never
  double prev_accuracy = -1.0;  // the round before that; <0 = none yet

  ModelRuntime(const PipelineConfig& cfg, const ModelInfo& m, int initial_slot)
      : info(m),
        graph(m.graph.kind, m.graph.decay_base, 0.125, m.graph.start_slot, initial_slot),
        table(cfg.embedding.dimension, mix_seed(cfg.seed, m.model_id, kTagTableInit)),
        model(2 * cfg.embedding.dimension, cfg.hidden,
              mix_seed(cfg.seed, m.model_id, kTagModelInit)) {}

  ModelRuntime(ModelInfo m, DecayedGraph g, WalkCorpus c, EmbeddingTable t, ForecastModel f)
      : info(std::move(m)),
        graph(std::move(g)),
        corpus(std::move(c)),
        corpus_ready(true),
        table(std::move(t)),
        model(std::move(f)) {}
};

struct SharedEvalSet {
  std::vector<std::pair<Address, Address>> pairs;
  std::vector<int> labels;
  std::int64_t positives = 0;
};

bool model_can_score(const ModelRuntime& m, Address u, Address v) {
  return m.table.contains(u) && m.table.contains(v);
}

SharedEvalSet build_eval_set(std::span<const PairEvent> events,
                             std::span<const ModelRuntime* const> roster, double neg_ratio,
                             std::uint64_t seed) {
  SharedEvalSet set;
  const PairSet transacting = transacting_pairs(events);
  auto scoreable = [&](Address u, Address v) {
    for (const ModelRuntime* m : roster) {
      if (model_can_score(*m, u, v)) return true;
    }
    return false;
  };
  std::vector<std::pair<Address, Address>> positives;
  for (const auto& p : transacting) {
    if (scoreable(p.first, p.second)) positives.push_back(p);
  }
  std::sort(positives.begin(), positives.end());
  set.positives = static_cast<std::int64_t>(positives.size());
  if (positives.empty()) return set;

  std::vector<Address> pool;
  for (const ModelRuntime* m : roster) {
    for (Address a : m->graph.live_nodes()) {
      if (m->table.contains(a)) pool.push_back(a);
    }
  }
  std::sort(pool.begin(), pool.end());
  pool.erase(std::unique(pool.begin(), pool.end()), pool.end());
  const auto want = static_cast<std::size_t>(std::llround(neg_ratio * positives.size()));
  const auto negatives = sample_negative_pairs(pool, transacting, want, seed, scoreable);

  for (const auto& p : positives) {
    set.pairs.push_back(p);
    set.labels.push_back(1);
  }
  for (const auto& p : negatives) {
    set.pairs.push_back(p);
    set.labels.push_back(0);
  }
  return set;
}

double update_loss(PipelineConfig::LossMode mode, double accuracy, double prev_accuracy) {
  if (mode == PipelineConfig::LossMode::OneMinusAccuracy) return 1.0 - accuracy;
  // Log-return mode: r = accuracy_t / accuracy_{t-1}, clamped to [0.1, 10].
  double r;
  if (prev_accuracy < 0.0) {
    r = 1.0;  // no previous round yet
  } else if (prev_accuracy <= 0.0) {
    r = accuracy > 0.0 ? 10.0 : 1.0;
  } else {
    r = std::clamp(accuracy / prev_accuracy, 0.1, 10.0);
  }
  return -std::log(r);
}

json report_to_json(const RunReport& report) {
  json j;
  j["models"] = json::array();
  for (const auto& m : report.models) {
    j["models"].push_back({{"model_id", m.model_id},
                           {"name", m.name},
                           {"kind", to_string(m.graph.kind)},
                           {"decay", m.graph.decay_base},
                           {"start_slot", m.graph.start_slot},
                           {"in_ensemble", m.in_ensemble}});
  }
  j["metrics"] = json::array();
  for (const auto& r : report.metrics) {
    j["metrics"].push_back({{"slot", r.slot},
                            {"model_id", r.model_id},
                            {"accuracy", r.metrics.accuracy},
                            {"precision", r.metrics.precision},
                            {"recall", r.metrics.recall},
                            {"f1", r.metrics.f1},
                            {"tp", r.metrics.tp},
                            {"tn", r.metrics.tn},
                            {"fp", r.metrics.fp},
                            {"fn", r.metrics.fn},
                            {"coverage", r.coverage}});
  }
  j["ensemble_rounds"] = json::array();
  for (const auto& r : report.rounds) {
    j["ensemble_rounds"].push_back({{"round", r.round},
                                    {"expert_ids", r.expert_ids},
                                    {"p", r.p},
                                    {"losses", r.losses},
                                    {"ensemble_loss", r.ensemble_loss},
                                    {"regret", r.regret},
                                    {"adaptive_regret", r.adaptive_regret}});
  }
  j["runtime"] = json::array();
  for (const auto& s : report.runtime) {
    j["runtime"].push_back({{"slot", s.slot}, {"column", s.column}, {"seconds", s.seconds}});
  }
  j["slots_processed"] = report.slots_processed;
  return j;
}

RunReport report_from_json(const json& j) {
  RunReport report;
  for (const auto& m : j.at("models")) {
    ModelInfo info;
    info.model_id = m.at("model_id").get<int>();
    info.name = m.at("name").get<std::string>();
    info.graph.kind = graph_kind_from_string(m.at("kind").get<std::string>());
    info.graph.decay_base = m.at("decay").get<double>();
    info.graph.start_slot = m.at("start_slot").get<int>();
    info.in_ensemble = m.at("in_ensemble").get<bool>();
    report.models.push_back(info);
  }
  for (const auto& r : j.at("metrics")) {
    MetricsRow row;
    row.slot = r.at("slot").get<int>();
    row.model_id = r.at("model_id").get<int>();
    row.metrics.accuracy = r.at("accuracy").get<double>();
    row.metrics.precision = r.at("precision").get<double>();
    row.metrics.recall = r.at("recall").get<double>();
    row.metrics.f1 = r.at("f1").get<double>();
    row.metrics.tp = r.at("tp").get<std::int64_t>();
    row.metrics.tn = r.at("tn").get<std::int64_t>();
    row.metrics.fp = r.at("fp").get<std::int64_t>();
    row.metrics.fn = r.at("fn").get<std::int64_t>();
    row.coverage = r.at("coverage").get<double>();
    report.metrics.push_back(row);
  }
  for (const auto& r : j.at("ensemble_rounds")) {
    EnsembleRound round;
    round.round = r.at("round").get<int>();
    round.expert_ids = r.at("expert_ids").get<std::vector<int>>();
    round.p = r.at("p").get<std::vector<double>>();
    round.losses = r.at("losses").get<std::vector<double>>();
    round.ensemble_loss = r.at("ensemble_loss").get<double>();
    round.regret = r.at("regret").get<double>();
    round.adaptive_regret = r.at("adaptive_regret").get<double>();
    report.rounds.push_back(round);
  }
  for (const auto& s : j.at("runtime")) {
    report.runtime.push_back(
        {s.at("slot").get<int>(), s.at("column").get<std::string>(), s.at("seconds").get<double>()});
  }
  report.slots_processed = j.value("slots_processed", 0);
  return report;
}

struct CheckpointState {
  int next_slot = 0;  // ingest slot index to process next
  std::vector<std::unique_ptr<ModelRuntime>> models;
  EnsembleState ensemble = EnsembleState::init(std::vector<int>{0});
  RegretLedger ledger;
  RunReport report;
  int next_model_id = 0;
  double prev_ens_accuracy = -1.0;
};

void write_checkpoint(const fs::path& dir, int slot, const PipelineConfig& cfg,
                      const std::vector<std::unique_ptr<ModelRuntime>>& models,
                      const EnsembleState& state, const RunReport& report, int next_model_id,
                      double prev_ens_accuracy) {
  const fs::path slot_dir = dir / ("slot_" + std::to_string(slot));
  fs::create_directories(slot_dir);
  json meta;
  meta["next_slot"] = slot + 1;
  meta["next_model_id"] = next_model_id;
  meta["prev_ens_accuracy"] = prev_ens_accuracy;
  meta["experts"] = json::array();
  for (const auto& m : models) {
    meta["experts"].push_back({{"model_id", m->info.model_id},
                               {"name", m->info.name},
                               {"kind", to_string(m->info.graph.kind)},
                               {"decay", m->info.graph.decay_base},
                               {"start_slot", m->info.graph.start_slot},
                               {"in_ensemble", m->info.in_ensemble},
                               {"model_ready", m->model_ready},
                               {"last_accuracy", m->last_accuracy},
                               {"prev_accuracy", m->prev_accuracy}});
    const std::string stem = "model_" + std::to_string(m->info.model_id);
    std::ostringstream g, c, t, f;
    m->graph.save(g);
    m->corpus.save(c);
    m->table.save_full(t);
    m->model.save(f);
    write_file(slot_dir / (stem + ".graph"), g.str());
    write_file(slot_dir / (stem + ".corpus"), c.str());
    write_file(slot_dir / (stem + ".table"), t.str());
    write_file(slot_dir / (stem + ".net"), f.str());
  }
  meta["ensemble_ids"] = state.expert_ids();
  meta["ensemble_p"] = state.weights();
  write_file(slot_dir / "state.json", meta.dump(2));
  write_file(slot_dir / "ledger.json", report_to_json(report).dump());
  write_file(slot_dir / "DONE", "ok\n");
  (void)cfg;
}

std::optional<int> newest_checkpoint_slot(const fs::path& dir) {
  if (!fs::exists(dir)) return std::nullopt;
  std::optional<int> best;
  for (const auto& entry : fs::directory_iterator(dir)) {
    const std::string name = entry.path().filename().string();
    if (name.rfind("slot_", 0) != 0) continue;
    if (!fs::exists(entry.path() / "DONE")) continue;
    const int slot = std::stoi(name.substr(5));
    if (!best || slot > *best) best = slot;
  }
  return best;
}

CheckpointState load_checkpoint(const fs::path& dir, int slot, const PipelineConfig& cfg) {
  const fs::path slot_dir = dir / ("slot_" + std::to_string(slot));
  std::ifstream meta_in(slot_dir / "state.json");
  if (!meta_in) throw std::runtime_error("checkpoint missing state.json");
  json meta = json::parse(meta_in);

  CheckpointState state;
  state.next_slot = meta.at("next_slot").get<int>();
  state.next_model_id = meta.at("next_model_id").get<int>();
  state.prev_ens_accuracy = meta.value("prev_ens_accuracy", -1.0);
  for (const auto& e : meta.at("experts")) {
    ModelInfo info;
    info.model_id = e.at("model_id").get<int>();
    info.name = e.at("name").get<std::string>();
    info.graph.kind = graph_kind_from_string(e.at("kind").get<std::string>());
    info.graph.decay_base = e.at("decay").get<double>();
    info.graph.start_slot = e.at("start_slot").get<int>();
    info.in_ensemble = e.at("in_ensemble").get<bool>();
    const std::string stem = "model_" + std::to_string(info.model_id);
    std::ifstream g(slot_dir / (stem + ".graph"));
    std::ifstream c(slot_dir / (stem + ".corpus"));
    std::ifstream t(slot_dir / (stem + ".table"));
    std::ifstream f(slot_dir / (stem + ".net"));
    if (!g || !c || !t || !f) throw std::runtime_error("checkpoint missing files for " + stem);
    auto m = std::make_unique<ModelRuntime>(info, DecayedGraph::load(g), WalkCorpus::load(c),
                                            EmbeddingTable::load_full(t), ForecastModel::load(f));
    m->model_ready = e.at("model_ready").get<bool>();
    m->last_accuracy = e.at("last_accuracy").get<double>();
    m->prev_accuracy = e.at("prev_accuracy").get<double>();
    state.models.push_back(std::move(m));
  }
  const auto ids = meta.at("ensemble_ids").get<std::vector<int>>();
  const auto p = meta.at("ensemble_p").get<std::vector<double>>();
  state.ensemble = EnsembleState::restore(ids, p);
  std::ifstream ledger_in(slot_dir / "ledger.json");
  if (!ledger_in) throw std::runtime_error("checkpoint missing ledger.json");
  state.report = report_from_json(json::parse(ledger_in));
  for (const auto& r : state.report.rounds) state.ledger.record(r.losses, r.ensemble_loss);
  (void)cfg;
  return state;
}

}  // namespace

void write_metrics_csv(std::ostream& out, const RunReport& report) {
  out << "slot,model_id,accuracy,precision,recall,f1,coverage\n";
  for (const auto& r : report.metrics) {
    out << r.slot << ',' << r.model_id << ',' << fd(r.metrics.accuracy) << ','
        << fd(r.metrics.precision) << ',' << fd(r.metrics.recall) << ',' << fd(r.metrics.f1)
        << ',' << fd(r.coverage) << '\n';
  }
}

void write_ensemble_ledger_csv(std::ostream& out, const RunReport& report) {
  out << "round,expert_ids,p,losses,ensemble_loss,regret,adaptive_regret\n";
  for (const auto& r : report.rounds) {
    out << r.round << ',';
    for (std::size_t k = 0; k < r.expert_ids.size(); ++k)
      out << (k ? " " : "") << r.expert_ids[k];
    out << ',';
    for (std::size_t k = 0; k < r.p.size(); ++k) out << (k ? " " : "") << fd(r.p[k]);
    out << ',';
    for (std::size_t k = 0; k < r.losses.size(); ++k) out << (k ? " " : "") << fd(r.losses[k]);
    out << ',' << fd(r.ensemble_loss) << ',' << fd(r.regret) << ',' << fd(r.adaptive_regret)
        << '\n';
  }
}

void write_runtime_csv(std::ostream& out, const RunReport& report) {
  RuntimeTable table;
  for (const auto& s : report.runtime) table.add(s.slot, s.column, s.seconds);
  table.write_csv(out);
}

namespace {

void write_models_csv(std::ostream& out, const RunReport& report) {
  out << "model_id,name,kind,decay,start_slot,in_ensemble\n";
  for (const auto& m : report.models) {
    out << m.model_id << ',' << m.name << ',' << to_string(m.graph.kind) << ','
        << fd(m.graph.decay_base) << ',' << m.graph.start_slot << ',' << (m.in_ensemble ? 1 : 0)
        << '\n';
  }
}

void write_all_reports(const fs::path& out_dir, const RunReport& report) {
  std::ostringstream metrics, ledger, runtime, models;
  write_metrics_csv(metrics, report);
  write_ensemble_ledger_csv(ledger, report);
  write_runtime_csv(runtime, report);
  write_models_csv(models, report);
  write_file(out_dir / "metrics.csv", metrics.str());
  write_file(out_dir / "ensemble_ledger.csv", ledger.str());
  write_file(out_dir / "runtime.csv", runtime.str());
  write_file(out_dir / "models.csv", models.str());
  write_file(out_dir / "run_ledger.json", report_to_json(report).dump(2));
}

}  // namespace

void render_reports_from_ledger(const std::string& ledger_dir, const std::string& out_dir) {
  std::ifstream in(fs::path(ledger_dir) / "run_ledger.json");
  if (!in) throw std::runtime_error("no run_ledger.json under " + ledger_dir);
  const RunReport report = report_from_json(json::parse(in));
  fs::create_directories(out_dir);
  write_all_reports(out_dir, report);
}

RunReport run_pipeline(const PipelineConfig& config, bool resume) {
  config.validate();

  std::ifstream input(config.input_path);
  if (!input) throw std::runtime_error("cannot open input " + config.input_path);
  const auto records = parse_transactions(input);
  ExpandCounters counters;
  auto events = expand_pairs(records, &counters);
  auto slots = slot_partition(events, config.slot_size);
  if (config.max_slots > 0 && static_cast<int>(slots.size()) > config.max_slots) {
    slots.resize(config.max_slots);
    const auto last = slots.back().last_pair_ordinal;
    events.resize(static_cast<std::size_t>(last + 1));
  }
  const int slot_count = static_cast<int>(slots.size());
  if (slot_count < 2)
    throw std::runtime_error("need at least 2 slots; stream gives " + std::to_string(slot_count));

  const fs::path out_dir(config.out_dir);
  fs::create_directories(out_dir);
  fs::create_directories(out_dir / "embeddings");

  {  // dataset statistics, recomputed deterministically on every run
    const StatsReport stats = dataset_stats(events, slots, counters);
    const DegreeHistograms degrees = degree_distribution(events);
    std::ostringstream s1, s2, s3;
    stats.write_csv(s1);
    degrees.write_in_csv(s2);
    degrees.write_out_csv(s3);
    write_file(out_dir / "stats.csv", s1.str());
    write_file(out_dir / "in_degree_hist.csv", s2.str());
    write_file(out_dir / "out_degree_hist.csv", s3.str());
  }

  // Per-slot event spans.
  std::vector<std::span<const PairEvent>> slot_span(slot_count);
  {
    std::size_t offset = 0;
    for (int s = 0; s < slot_count; ++s) {
      slot_span[s] = std::span<const PairEvent>(events.data() + offset,
                                                static_cast<std::size_t>(slots[s].pair_count));
      offset += static_cast<std::size_t>(slots[s].pair_count);
    }
  }

  std::vector<std::unique_ptr<ModelRuntime>> models;
  EnsembleState state = EnsembleState::init(std::vector<int>{0});
  RegretLedger ledger;
  RunReport report;
  int next_model_id = 0;
  int first_slot = 0;
  double prev_ens_accuracy = -1.0;

  const fs::path ckpt_dir = out_dir / "checkpoints";
  bool loaded = false;
  if (resume) {
    if (const auto slot = newest_checkpoint_slot(ckpt_dir)) {
      CheckpointState ck = load_checkpoint(ckpt_dir, *slot, config);
      models = std::move(ck.models);
      state = std::move(ck.ensemble);
      ledger = std::move(ck.ledger);
      report = std::move(ck.report);
      next_model_id = ck.next_model_id;
      first_slot = ck.next_slot;
      prev_ens_accuracy = ck.prev_ens_accuracy;
      loaded = true;
    }
  }
  if (!loaded) {
    for (const auto& info : config.models) {
      models.push_back(std::make_unique<ModelRuntime>(config, info, -1));
      next_model_id = std::max(next_model_id, info.model_id + 1);
    }
    std::vector<int> expert_ids;
    for (const auto& m : models) {
      if (m->info.in_ensemble) expert_ids.push_back(m->info.model_id);
    }
    if (expert_ids.empty())
      throw std::invalid_argument("config: the ensemble needs at least one non-static model");
    state = EnsembleState::init(expert_ids);
    report.models = config.models;
  }
  report.out_dir = config.out_dir;
  report.slots_processed = slot_count;

  const auto roster_models = [&]() {
    std::vector<ModelRuntime*> roster;
    for (int id : state.expert_ids()) {
      for (const auto& m : models) {
        if (m->info.model_id == id) roster.push_back(m.get());
      }
    }
    return roster;
  };

  for (int s = first_slot; s + 1 < slot_count; ++s) {
    const int round = s + 1;

    // Temporal hygiene: everything trained this round comes from ordinals at
    // or below the end of slot s, strictly before the evaluation slot.
    if (slots[s].last_pair_ordinal >= slots[s + 1].first_pair_ordinal)
      throw std::logic_error("slot boundaries overlap");

    auto process_model = [&](ModelRuntime& m) -> RuntimeSample {
      const auto contribution =
          slot_contribution(slot_span[s], m.info.graph.kind, config.bucketing, s);
      const SlotDelta delta = m.graph.apply_slot(contribution);
      // The static baseline has no temporal machinery at all: its embedding
      // and forecaster are rebuilt from scratch on the whole graph every
      // slot. Decayed experts warm-start and fine-tune.
      const bool cold = m.info.graph.kind == GraphKind::Static;

      const auto t0 = std::chrono::steady_clock::now();
      if (!m.corpus_ready) {
        WalkParams params{config.walks_per_node, config.walk_length,
                          mix_seed(config.seed, m.info.model_id, kTagWalks), 1};
        m.corpus = generate_walks(m.graph, params);
        m.corpus_ready = true;
      } else {
        update_corpus(m.corpus, m.graph, delta.touched);
      }
      const auto pairs = context_pairs(m.corpus, config.window);
      auto live = [&](Address a) { return m.graph.is_live(a); };
      if (cold) {
        m.table = EmbeddingTable(config.embedding.dimension,
                                 mix_seed(config.seed, m.info.model_id, kTagTableInit, s));
      }
      train_skipgram(m.table, pairs, config.embedding,
                     mix_seed(config.seed, m.info.model_id, kTagEmbed, s), live);
      m.table.set_slot_of_last_update(s);
      const auto t1 = std::chrono::steady_clock::now();

      const ExampleSet train_set =
          make_examples(slot_span[s], m.graph, m.table, config.neg_ratio,
                        mix_seed(config.seed, m.info.model_id, kTagTrainSet, s));
      for (const auto& ex : train_set.examples) {
        if (ex.slot != s) throw std::logic_error("training example leaked from another slot");
      }
      if (!train_set.examples.empty()) {
        const auto fit_seed = mix_seed(config.seed, m.info.model_id, kTagFit, s);
        if (cold) {
          m.model = ForecastModel(2 * config.embedding.dimension, config.hidden,
                                  mix_seed(config.seed, m.info.model_id, kTagModelInit, s));
          train(m.model, train_set.examples, m.table, config.train_epochs, config.forecaster_lr,
                fit_seed);
          m.model_ready = true;
        } else if (m.model_ready) {
          fine_tune(m.model, train_set.examples, m.table, config.fine_tune_epochs,
                    config.forecaster_lr, fit_seed);
        } else {
          train(m.model, train_set.examples, m.table, config.train_epochs, config.forecaster_lr,
                fit_seed);
          m.model_ready = true;
        }
      }
      return {round, m.info.name, std::chrono::duration<double>(t1 - t0).count()};
    };

    if (config.threads <= 1 || models.size() < 2) {
      for (auto& m : models) report.runtime.push_back(process_model(*m));
    } else {
      std::vector<RuntimeSample> samples(models.size());
      std::vector<std::thread> workers;
      std::atomic<std::size_t> cursor{0};
      const int n_workers = std::min<int>(config.threads, static_cast<int>(models.size()));
      for (int t = 0; t < n_workers; ++t) {
        workers.emplace_back([&]() {
          for (std::size_t i = cursor.fetch_add(1); i < models.size(); i = cursor.fetch_add(1))
            samples[i] = process_model(*models[i]);
        });
      }
      for (auto& w : workers) w.join();
      for (auto& sm : samples) report.runtime.push_back(std::move(sm));
    }

    // Evaluate every model on a shared next-slot example set.
    const auto roster = roster_models();
    const SharedEvalSet eval =
        build_eval_set(slot_span[s + 1], roster, config.neg_ratio,
                       mix_seed(config.seed, kTagEvalSet, static_cast<std::uint64_t>(s + 1)));

    std::vector<std::vector<std::optional<double>>> roster_preds(
        roster.size(), std::vector<std::optional<double>>(eval.pairs.size()));

    for (auto& mp : models) {
      ModelRuntime& m = *mp;
      std::vector<double> preds;
      std::vector<int> labels;
      std::vector<std::optional<double>>* keep = nullptr;
      for (std::size_t k = 0; k < roster.size(); ++k) {
        if (roster[k] == &m) keep = &roster_preds[k];
      }
      for (std::size_t i = 0; i < eval.pairs.size(); ++i) {
        const auto y = predict_pair(m.model, m.table, eval.pairs[i].first, eval.pairs[i].second);
        if (keep) (*keep)[i] = y;
        if (y) {
          preds.push_back(*y);
          labels.push_back(eval.labels[i]);
        }
      }
      const Metrics metrics = evaluate(preds, labels, config.threshold);
      const double coverage =
          eval.pairs.empty() ? 0.0 : static_cast<double>(preds.size()) / eval.pairs.size();
      report.metrics.push_back({round, m.info.model_id, metrics, coverage});
      m.prev_accuracy = m.last_accuracy;
      m.last_accuracy = metrics.accuracy;
    }

    // Ensemble combine over the roster, then the MMU bookkeeping.
    {
      std::vector<double> preds;
      std::vector<int> labels;
      std::size_t available = 0;
      std::vector<std::optional<double>> per_expert(roster.size());
      for (std::size_t i = 0; i < eval.pairs.size(); ++i) {
        for (std::size_t k = 0; k < roster.size(); ++k) per_expert[k] = roster_preds[k][i];
        const auto combined = state.combine(per_expert);
        if (combined) {
          ++available;
          preds.push_back(*combined);
          labels.push_back(eval.labels[i]);
        }
      }
      const Metrics ens_metrics = evaluate(preds, labels, config.threshold);
      const double coverage =
          eval.pairs.empty() ? 0.0 : static_cast<double>(available) / eval.pairs.size();
      report.metrics.push_back({round, -1, ens_metrics, coverage});

      EnsembleRound rec;
      rec.round = round;
      rec.expert_ids = state.expert_ids();
      rec.p = state.weights();
      for (const ModelRuntime* m : roster)
        rec.losses.push_back(update_loss(config.loss_mode, m->last_accuracy, m->prev_accuracy));
      rec.ensemble_loss =
          update_loss(config.loss_mode, ens_metrics.accuracy, prev_ens_accuracy);
      prev_ens_accuracy = ens_metrics.accuracy;
      ledger.record(rec.losses, rec.ensemble_loss);
      rec.regret = ledger.regret();
      rec.adaptive_regret = ledger.adaptive_regret();
      report.rounds.push_back(rec);

      state.mmu_update(rec.losses, config.eta);
    }

    // Algorithm-1 add/remove cadence, once enough rounds have elapsed.
    if (config.adapt_experts && round >= 3 && state.size() >= 2) {
      ModelInfo info;
      info.model_id = next_model_id++;
      info.graph = GraphSpec{GraphKind::Amount, 0.5, s + 1};
      info.name = default_model_name(info.graph) + "_r" + std::to_string(round);
      info.in_ensemble = true;
      models.push_back(std::make_unique<ModelRuntime>(config, info, s));
      report.models.push_back(info);
      state.add_expert(info.model_id, round + 1);

      std::vector<double> accuracies;
      for (int id : state.expert_ids()) {
        double acc = std::numeric_limits<double>::infinity();  // shields the newcomer
        for (const auto& m : models) {
          if (m->info.model_id == id && id != info.model_id) acc = m->last_accuracy;
        }
        accuracies.push_back(acc);
      }
      std::vector<int> before = state.expert_ids();
      if (state.remove_lowest_accuracy(accuracies)) {
        for (int id : before) {
          bool still = false;
          for (int kept : state.expert_ids()) still = still || kept == id;
          if (!still) {
            std::erase_if(models, [&](const std::unique_ptr<ModelRuntime>& m) {
              return m->info.model_id == id;
            });
          }
        }
      }
    }

    if (config.checkpoints)
      write_checkpoint(ckpt_dir, s, config, models, state, report, next_model_id,
                       prev_ens_accuracy);
  }

  // Final artifacts.
  for (const auto& m : models) {
    std::ostringstream emb;
    m->table.save(emb);
    write_file(out_dir / "embeddings" / ("model_" + std::to_string(m->info.model_id) + ".emb"),
               emb.str());
  }
  write_all_reports(out_dir, report);
  return report;
}

}  // namespace txf
