// edgeids: train models, run or replay the gateway pipeline, run the bench
// and render statistical reports.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "CLI11.hpp"

#include "edgeids/bench.hpp"
#include "edgeids/config.hpp"
#include "edgeids/error.hpp"
#include "edgeids/flow_csv.hpp"
#include "edgeids/model_io.hpp"
#include "edgeids/pipeline.hpp"
#include "edgeids/replay.hpp"

namespace fs = std::filesystem;
using namespace edgeids;

namespace {

std::ofstream open_out(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(Errc::IoError, "cannot write " + path.string());
  return out;
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::IoError, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

PipelineConfig config_or_default(const std::string& path) {
  return path.empty() ? PipelineConfig{} : load_config(path);
}

void apply_provider(PipelineConfig& cfg, const std::string& provider) {
  if (!provider.empty()) cfg.provider.provider_id = provider;
}

// Loads the labelled corpus or synthesizes one, then splits it.
std::pair<Dataset, Dataset> training_data(const std::string& dataset, double fraction,
                                          double test_fraction, std::size_t per_class,
                                          std::uint64_t seed) {
  Dataset all;
  if (dataset.empty()) {
    all = synthesize_dataset(kAllLabels, per_class, seed);
  } else {
    auto ingested = ingest_dataset(fs::path(dataset), LabelMap::cicids2017(), fraction, seed);
    all = std::move(ingested.data);
  }
  return stratified_split(all, test_fraction, mix_seed(seed, 0x7e57));
}

void print_model_metrics(const ModelBundle& bundle, const Dataset& test) {
  if (test.size() == 0) return;
  const auto vectors = test.vectors();
  for (const auto& model : bundle.models) {
    std::vector<ClassLabel> predicted;
    predicted.reserve(vectors.size());
    for (const auto& lv : vectors) {
      predicted.push_back(predict(model, normalize(lv.x, bundle.stats)).label);
    }
    const auto m = classification_metrics(predicted, test.labels);
    fmt::print("{:<4} accuracy {:.4f}  precision {:.4f}  recall {:.4f}  F1 {:.4f}\n", model.name(),
               m.accuracy, m.precision, m.recall, m.f1);
  }
}

struct TrainArgs {
  std::string dataset;
  double fraction = 1.0;
  double test_fraction = 0.3;
  std::size_t per_class = 200;
  std::uint64_t seed = 1;
  std::string out = "models.bin";
};

int cmd_train(const TrainArgs& a) {
  auto [train, test] = training_data(a.dataset, a.fraction, a.test_fraction, a.per_class, a.seed);
  const ModelBundle bundle = train_default_models(train, a.seed);
  save_bundle(a.out, bundle);
  fmt::print("trained {} models on {} rows, held out {}\n", bundle.models.size(), train.size(),
             test.size());
  print_model_metrics(bundle, test);
  fmt::print("wrote {}\n", a.out);
  return 0;
}

struct PipelineArgs {
  std::string config;
  std::string models;
  std::string provider;
  std::string log;
  std::string jsonl;
  std::string mitigations;
};

struct RunArgs {
  PipelineArgs common;
  std::string input = "-";
};

// Live mode: host metrics, steady clock, configured provider.
int cmd_run(const RunArgs& a) {
  PipelineConfig cfg = config_or_default(a.common.config);
  apply_provider(cfg, a.common.provider);
  ModelBundle bundle;
  if (!a.common.models.empty()) bundle = load_bundle(a.common.models);

  FlowTable table;
  if (a.input == "-") {
    table = read_flow_csv(std::cin);
  } else {
    table = read_flow_csv_file(a.input);
  }
  annotate_windows(table.records);

  HostMetricsSource metrics(cfg.power);
  SteadyClock clock;
  RateLimiter limiter(cfg.provider.rate_capacity, cfg.provider.rate_refill_per_s, clock);
  auto provider = make_provider(cfg.provider, nullptr);

  std::ofstream log_file, jsonl_file, mitigation_file;
  std::ostream* text = &std::cout;
  if (!a.common.log.empty()) {
    log_file = open_out(a.common.log);
    text = &log_file;
  }
  std::ostream* jsonl = nullptr;
  if (!a.common.jsonl.empty()) {
    jsonl_file = open_out(a.common.jsonl);
    jsonl = &jsonl_file;
  }
  std::ostream* mitigation_out = &std::cerr;
  if (!a.common.mitigations.empty()) {
    mitigation_file = open_out(a.common.mitigations);
    mitigation_out = &mitigation_file;
  }
  std::unique_ptr<MitigationSink> sink;
  if (cfg.mitigation_sink == SinkKind::Command) {
    sink = std::make_unique<CommandSink>(*mitigation_out);
  } else {
    sink = std::make_unique<LogSink>(*mitigation_out);
  }
  MitigationDispatcher dispatcher(*sink);
  EventLog log(text, jsonl);

  PipelineServices services;
  services.metrics = &metrics;
  services.provider = provider.get();
  services.limiter = &limiter;
  services.llm_clock = &clock;
  services.dispatcher = &dispatcher;
  services.log = &log;
  Pipeline pipeline(cfg, std::move(bundle), services);
  run_streaming(pipeline, table.records, cfg.queue_capacity,
                [&](const WindowOutcome& o) {
                  if (const auto* alert = std::get_if<AlertRecord>(&o)) {
                    metrics.record_latency_ms(alert->latency.t_total_s * 1000.0);
                    metrics.record_energy_j(alert->energy_j);
                  }
                });
  return 0;
}

struct ReplayArgs {
  PipelineArgs common;
  std::string flows;
  std::string scores;
  std::string telemetry;
};

int cmd_replay(const ReplayArgs& a) {
  ReplayInputs in;
  in.config = config_or_default(a.common.config);
  apply_provider(in.config, a.common.provider);
  if (!a.common.models.empty()) in.bundle = load_bundle(a.common.models);
  FlowTable table = read_flow_csv_file(a.flows);
  annotate_windows(table.records);
  in.flows = std::move(table.records);
  if (!a.scores.empty()) in.scores = ScoreScript::load(a.scores);
  if (!a.telemetry.empty()) {
    // Reuse the source's parser, then copy the timeline out by sampling it at
    // every flow timestamp.
    auto source = ScriptedMetricsSource::from_json(read_file(a.telemetry), in.config.power);
    for (const auto& f : in.flows) {
      ScriptedMetricsSource::Entry e;
      e.t_ms = f.timestamp_ms;
      e.reading = source.read(f.timestamp_ms);
      e.power_w = source.power_watts(f.timestamp_ms);
      in.telemetry.push_back(e);
    }
  } else {
    in.default_reading.power_w = in.config.power.watts(0.0);
  }

  std::ofstream log_file, jsonl_file, mitigation_file;
  ReplayStreams streams;
  streams.text = &std::cout;
  if (!a.common.log.empty()) {
    log_file = open_out(a.common.log);
    streams.text = &log_file;
  }
  if (!a.common.jsonl.empty()) {
    jsonl_file = open_out(a.common.jsonl);
    streams.jsonl = &jsonl_file;
  }
  if (!a.common.mitigations.empty()) {
    mitigation_file = open_out(a.common.mitigations);
    streams.mitigations = &mitigation_file;
  }
  const ReplayResult result = run_replay(in, streams);
  fmt::print(stderr, "{} windows, {} alerts, {} LLM calls\n", result.outcomes.size(),
             result.alerts, result.llm_calls);
  return 0;
}

struct ReportArgs {
  std::string trials;
  std::string out;
  std::string json;
};

int cmd_report(const ReportArgs& a) {
  std::ifstream in(a.trials);
  if (!in) throw Error(Errc::IoError, "cannot open " + a.trials);
  const auto rows = read_trials_csv(in);
  const Report report = emit_report(rows);
  if (a.out.empty()) {
    std::cout << report.to_text();
  } else {
    open_out(a.out) << report.to_text();
  }
  if (!a.json.empty()) open_out(a.json) << report.to_json() << '\n';
  return 0;
}

struct BenchArgs {
  std::string dataset;
  double fraction = 1.0;
  std::vector<std::string> scenarios{"brute-force"};
  std::size_t trials = 62;
  std::size_t windows = 40;
  std::uint64_t seed = 1;
  std::string provider = "mock";
  std::string out = "bench-out";
  std::string config;
  std::string models;
  std::size_t workers = 0;
};

int cmd_bench(const BenchArgs& a) {
  PipelineConfig cfg = config_or_default(a.config);
  apply_provider(cfg, a.provider);

  auto [train, test] = training_data(a.dataset, a.fraction, 0.3, 200, a.seed);
  const ModelBundle bundle =
      a.models.empty() ? train_default_models(train, a.seed) : load_bundle(a.models);

  std::vector<ClassLabel> attacks;
  for (const auto& s : a.scenarios) {
    if (s == "all") {
      for (ClassLabel c : kAllLabels) {
        if (c != ClassLabel::Benign) attacks.push_back(c);
      }
      continue;
    }
    const auto attack = parse_scenario(s);
    if (!attack) throw Error(Errc::InvalidArgument, "unknown scenario '" + s + "'");
    attacks.push_back(*attack);
  }

  std::vector<TrialRow> rows;
  for (ClassLabel attack : attacks) {
    ScenarioSpec spec;
    spec.attack = attack;
    spec.trial_count = a.trials;
    spec.windows_per_trial = a.windows;
    spec.seed = mix_seed(a.seed, index_of(attack));
    spec.pool = a.dataset.empty() ? nullptr : &test;
    spec.workers = a.workers;
    auto scenario_rows = run_scenario(spec, cfg, bundle);
    rows.insert(rows.end(), scenario_rows.begin(), scenario_rows.end());
  }

  const fs::path dir(a.out);
  {
    auto csv = open_out(dir / "trials.csv");
    write_trials_csv(csv, rows);
  }
  const Report report = emit_report(rows);
  open_out(dir / "report.txt") << report.to_text();
  open_out(dir / "report.json") << report.to_json() << '\n';
  std::cout << report.to_text();
  fmt::print("wrote {}\n", (dir / "trials.csv").string());
  return 0;
}

void add_pipeline_options(CLI::App* cmd, PipelineArgs& a) {
  cmd->add_option("--config", a.config, "Gateway INI file")->check(CLI::ExistingFile);
  cmd->add_option("--models", a.models, "Model bundle written by `train`")->check(CLI::ExistingFile);
  cmd->add_option("--provider", a.provider, "Override the configured provider")
      ->check(CLI::IsMember({"mock", "http"}));
  cmd->add_option("--log", a.log, "Human-readable log (default stdout)");
  cmd->add_option("--jsonl", a.jsonl, "Structured log, one JSON object per window");
  cmd->add_option("--mitigations", a.mitigations, "Mitigation sink output");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Edge-gateway intrusion detection with LLM-assisted triage"};
  app.require_subcommand(1);

  TrainArgs train;
  auto* train_cmd = app.add_subcommand("train", "Train DT, KNN and RF and write a model bundle");
  train_cmd->add_option("--dataset", train.dataset, "Labelled flow CSV (synthetic when omitted)")
      ->check(CLI::ExistingFile);
  train_cmd->add_option("--fraction", train.fraction, "Stratified subsample fraction")
      ->check(CLI::Range(0.0, 1.0));
  train_cmd->add_option("--test-fraction", train.test_fraction, "Held-out fraction")
      ->check(CLI::Range(0.0, 0.95));
  train_cmd->add_option("--per-class", train.per_class, "Synthetic rows per class");
  train_cmd->add_option("--seed", train.seed);
  train_cmd->add_option("--out", train.out, "Bundle path");

  RunArgs run;
  auto* run_cmd = app.add_subcommand("run", "Process flows with host telemetry and the configured provider");
  add_pipeline_options(run_cmd, run.common);
  run_cmd->add_option("--input", run.input, "Flow CSV, or - for stdin");

  ReplayArgs replay;
  auto* replay_cmd = app.add_subcommand("replay", "Replay recorded flows with scripted telemetry");
  add_pipeline_options(replay_cmd, replay.common);
  replay_cmd->add_option("--flows", replay.flows, "Flow CSV")->required()->check(CLI::ExistingFile);
  replay_cmd->add_option("--scores", replay.scores, "Scripted model scores (JSON)")
      ->check(CLI::ExistingFile);
  replay_cmd->add_option("--telemetry", replay.telemetry, "Scripted telemetry timeline (JSON)")
      ->check(CLI::ExistingFile);

  ReportArgs report;
  auto* report_cmd = app.add_subcommand("report", "ANOVA / Tukey report from a trials CSV");
  report_cmd->add_option("--trials", report.trials, "Trials CSV from `bench`")
      ->required()
      ->check(CLI::ExistingFile);
  report_cmd->add_option("--out", report.out, "Text report (default stdout)");
  report_cmd->add_option("--json", report.json, "JSON report");

  BenchArgs bench;
  auto* bench_cmd = app.add_subcommand("bench", "Multi-trial scenario replay and report");
  bench_cmd->add_option("--dataset", bench.dataset, "Labelled flow CSV (synthetic when omitted)")
      ->check(CLI::ExistingFile);
  bench_cmd->add_option("--fraction", bench.fraction, "Stratified subsample fraction")
      ->check(CLI::Range(0.0, 1.0));
  bench_cmd->add_option("--scenario", bench.scenarios,
                        "dos, ddos, brute-force, port-scan, other or all")
      ->delimiter(',');
  bench_cmd->add_option("--trials", bench.trials, "Trials per reasoning mode")
      ->check(CLI::Range(std::size_t{2}, std::size_t{100000}));
  bench_cmd->add_option("--windows", bench.windows, "Windows per trial");
  bench_cmd->add_option("--seed", bench.seed);
  bench_cmd->add_option("--provider", bench.provider)->check(CLI::IsMember({"mock", "http"}));
  bench_cmd->add_option("--out", bench.out, "Output directory");
  bench_cmd->add_option("--config", bench.config, "Gateway INI file")->check(CLI::ExistingFile);
  bench_cmd->add_option("--models", bench.models, "Model bundle instead of training")
      ->check(CLI::ExistingFile);
  bench_cmd->add_option("--workers", bench.workers, "Parallel trial workers (0 = all cores)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*train_cmd) return cmd_train(train);
    if (*run_cmd) return cmd_run(run);
    if (*replay_cmd) return cmd_replay(replay);
    if (*report_cmd) return cmd_report(report);
    if (*bench_cmd) return cmd_bench(bench);
  } catch (const Error& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return 1;
  }
  return 1;
}
