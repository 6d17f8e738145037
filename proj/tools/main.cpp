#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"
#include "txf/ingest.hpp"
#include "txf/pipeline.hpp"
#include "txf/synth.hpp"

namespace fs = std::filesystem;

namespace {

int cmd_synth(const txf::SynthConfig& cfg, const std::string& out_path) {
  std::ofstream out(out_path, std::ios::binary);
  if (!out) {
    std::cerr << "cannot open " << out_path << " for writing\n";
    return 1;
  }
  txf::synth_stream(cfg, out);
  return 0;
}

int cmd_ingest_stats(const std::string& input, std::int64_t slot_size, const std::string& out_dir) {
  std::ifstream in(input);
  if (!in) {
    std::cerr << "cannot open " << input << '\n';
    return 1;
  }
  const auto records = txf::parse_transactions(in);
  txf::ExpandCounters counters;
  auto events = txf::expand_pairs(records, &counters);
  const auto slots = txf::slot_partition(events, slot_size);
  const auto stats = txf::dataset_stats(events, slots, counters);
  const auto degrees = txf::degree_distribution(events);
  fs::create_directories(out_dir);
  std::ofstream(fs::path(out_dir) / "stats.csv") << [&] {
    std::ostringstream os;
    stats.write_csv(os);
    return os.str();
  }();
  std::ofstream(fs::path(out_dir) / "in_degree_hist.csv") << [&] {
    std::ostringstream os;
    degrees.write_in_csv(os);
    return os.str();
  }();
  std::ofstream(fs::path(out_dir) / "out_degree_hist.csv") << [&] {
    std::ostringstream os;
    degrees.write_out_csv(os);
    return os.str();
  }();
  std::cout << "pairs=" << stats.total_pairs << " transactions=" << stats.total_txns
            << " accounts=" << stats.total_accounts << " slots=" << stats.slots.size() << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"transaction graph forecasting toolkit"};
  app.require_subcommand(1);

  // synth
  auto* synth = app.add_subcommand("synth", "generate a synthetic transaction log");
  txf::SynthConfig synth_cfg;
  std::string synth_out = "stream.txt";
  synth->add_option("--out", synth_out, "output path");
  synth->add_option("--communities", synth_cfg.communities);
  synth->add_option("--members", synth_cfg.members_per_community);
  synth->add_option("--slots", synth_cfg.slots);
  synth->add_option("--pairs-per-slot", synth_cfg.pairs_per_slot);
  synth->add_option("--intra", synth_cfg.intra_prob);
  synth->add_option("--turnover", synth_cfg.turnover_rate);
  synth->add_option("--drift", synth_cfg.migrate_rate, "per-member migration rate per slot");
  synth->add_option("--dissolve", synth_cfg.dissolve_rate,
                    "fraction of communities dissolved and reformed per slot");
  synth->add_option("--frequent-prob", synth_cfg.frequent_amount_prob);
  synth->add_option("--cutoff-satoshi", synth_cfg.frequent_cutoff_satoshi);
  synth->add_option("--seed", synth_cfg.seed);

  // ingest-stats
  auto* stats = app.add_subcommand("ingest-stats", "parse a log and write dataset statistics");
  std::string stats_input;
  std::int64_t stats_slot_size = 10000;
  std::string stats_out = "stats_out";
  stats->add_option("--input", stats_input)->required();
  stats->add_option("--slot-size", stats_slot_size);
  stats->add_option("--out", stats_out);

  // run
  auto* run = app.add_subcommand("run", "run the forecasting pipeline from a config file");
  std::string run_config;
  std::optional<std::uint64_t> run_seed;
  std::optional<int> run_threads;
  std::optional<std::string> run_out;
  bool run_resume = false;
  run->add_option("--config", run_config, "pipeline config (JSON)")->required();
  run->add_option("--seed", run_seed, "override the config seed");
  run->add_option("--threads", run_threads, "worker threads (1 = deterministic)");
  run->add_option("--out", run_out, "override the output directory");
  run->add_flag("--resume", run_resume, "continue from the newest checkpoint");

  // report
  auto* report = app.add_subcommand("report", "re-render CSV reports from a run ledger");
  std::string report_from, report_out;
  report->add_option("--from", report_from, "directory holding run_ledger.json")->required();
  report->add_option("--out", report_out, "output directory")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (synth->parsed()) return cmd_synth(synth_cfg, synth_out);
    if (stats->parsed()) return cmd_ingest_stats(stats_input, stats_slot_size, stats_out);
    if (run->parsed()) {
      txf::PipelineConfig cfg = txf::PipelineConfig::load(run_config);
      if (run_seed) cfg.seed = *run_seed;
      if (run_threads) cfg.threads = *run_threads;
      if (run_out) cfg.out_dir = *run_out;
      const txf::RunReport rep = txf::run_pipeline(cfg, run_resume);
      std::cout << "slots=" << rep.slots_processed << " metric_rows=" << rep.metrics.size()
                << " out=" << rep.out_dir << '\n';
      return 0;
    }
    if (report->parsed()) {
      txf::render_reports_from_ledger(report_from, report_out);
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
