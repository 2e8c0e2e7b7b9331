#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "edgeids/detection.hpp"
#include "edgeids/features.hpp"
#include "edgeids/flow_csv.hpp"
#include "edgeids/llm_client.hpp"
#include "edgeids/model_io.hpp"
#include "edgeids/pipeline.hpp"
#include "edgeids/random.hpp"
#include "edgeids/stats.hpp"

namespace edgeids {

// Fine dataset label -> coarse class. Matching ignores case and collapses
// punctuation, so "Web Attack \x96 Brute Force" and "Web Attack & Brute
// Force" are the same key. Coarse class names are accepted as well.
class LabelMap {
 public:
  static LabelMap cicids2017();

  std::optional<ClassLabel> lookup(std::string_view fine) const;
  void set(std::string_view fine, ClassLabel coarse);
  const std::map<std::string, ClassLabel>& entries() const noexcept { return entries_; }

  static std::string key(std::string_view fine);

 private:
  std::map<std::string, ClassLabel> entries_;
};

struct Dataset {
  std::vector<FlowRecord> records;
  std::vector<ClassLabel> labels;  // coarse, aligned with records

  std::size_t size() const noexcept { return records.size(); }
  std::vector<LabeledVector> vectors() const;
  std::array<std::size_t, kClassCount> class_counts() const;
};

struct IngestResult {
  Dataset data;
  std::map<std::string, std::size_t> fine_counts;  // before subsampling
  CsvDialect dialect = CsvDialect::Native;
};

// Per coarse class keeps round(count * fraction) rows chosen by a seeded
// shuffle, preserving file order. fraction must lie in (0, 1].
// Throws Error(MissingLabelColumn), Error(UnknownLabel) listing every
// unmapped label, or the reader's errors.
IngestResult ingest_dataset(std::istream& in, const LabelMap& map, double fraction,
                            std::uint64_t seed);
IngestResult ingest_dataset(const std::filesystem::path& path, const LabelMap& map,
                            double fraction, std::uint64_t seed);

// Stratified subsample of an in-memory dataset (same rule as ingest).
Dataset stratified_subsample(const Dataset& data, double fraction, std::uint64_t seed);

// Deterministic split: per class, a seeded shuffle sends round(n * test_fraction)
// rows to the test side.
std::pair<Dataset, Dataset> stratified_split(const Dataset& data, double test_fraction,
                                             std::uint64_t seed);

// Gaussian clusters around per-class flow prototypes. Windows are 5 s apart
// starting at start_ms; each carries explicit window counts.
FlowRecord synthesize_flow(ClassLabel label, Rng& rng, std::int64_t timestamp_ms,
                           std::string session_id);
Dataset synthesize_dataset(std::span<const ClassLabel> labels, std::size_t per_class,
                           std::uint64_t seed, std::int64_t start_ms = 1'750'000'000'000);

// The brute-force flow behind the runtime-log example; its feature vector is
// [0.88, 16, 4.2, 0, 3389, 22, 0.61, 0.97, 230, 18, 0.07, 0.54] at 2 decimals.
FlowRecord canned_runtime_record();

// DT (depth 8), RF (25 trees) and KNN (k = 5), normalized on the benign rows.
ModelBundle train_default_models(const Dataset& train, std::uint64_t seed);

// Macro averages over classes present in truth or predictions.
struct ClassificationMetrics {
  double accuracy = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

// Throws Error(LengthMismatch) or Error(EmptyList).
ClassificationMetrics classification_metrics(std::span<const ClassLabel> predicted,
                                             std::span<const ClassLabel> truth);
double macro_f1(std::span<const ClassLabel> predicted, std::span<const ClassLabel> truth);
// macro_f1(after) - macro_f1(before).
double compute_delta_f1(std::span<const ClassLabel> before, std::span<const ClassLabel> after,
                        std::span<const ClassLabel> truth);

struct ScenarioSpec {
  ClassLabel attack = ClassLabel::BruteForce;
  std::size_t trial_count = 62;
  std::size_t windows_per_trial = 40;
  double attack_fraction = 0.5;
  std::uint64_t seed = 1;
  std::vector<ReasoningMode> modes{ReasoningMode::ZeroShot, ReasoningMode::FewShot,
                                   ReasoningMode::CoT};
  // Windows are drawn from this pool when set, otherwise synthesized.
  const Dataset* pool = nullptr;
  // Replaces the mock's canned reply; receives the window's ground truth.
  std::function<LlmResponse(ClassLabel predicted, ReasoningMode mode, ClassLabel truth,
                            std::size_t window)>
      responder;
  // Parallel trial workers; 0 picks the hardware concurrency.
  std::size_t workers = 0;

  // Throws Error(InvalidArgument) / Error(EmptyTrial).
  void validate() const;
};

std::string_view scenario_name(ClassLabel attack) noexcept;
std::optional<ClassLabel> parse_scenario(std::string_view text);

struct TrialRow {
  std::string scenario;
  std::string mode;
  std::size_t trial = 0;
  std::size_t windows = 0;
  std::size_t alerts = 0;
  std::size_t llm_calls = 0;
  ClassificationMetrics ml;
  ClassificationMetrics llm;
  double delta_f1 = 0.0;
  double mean_latency_s = 0.0;
  double total_energy_j = 0.0;
  std::size_t bandwidth_bytes = 0;
  std::size_t max_prompt_bytes = 0;
  double cpu_percent = 0.0;
  double memory_mb = 0.0;
  double compliance_rate = 1.0;
};

// One row per (mode, trial), ordered by mode then trial. With the mock
// provider every run with the same inputs yields identical rows.
// Throws Error(EmptyTrial) for zero windows; other errors carry the trial index.
std::vector<TrialRow> run_scenario(const ScenarioSpec& spec, const PipelineConfig& base,
                                   const ModelBundle& models);

// Scripted gateway readings for one trial: one timeline entry per window.
std::vector<ScriptedMetricsSource::Entry> scenario_telemetry(ClassLabel attack, std::span<const FlowRecord> windows,
                                         std::uint64_t seed, const PowerModel& power);

void write_trials_csv(std::ostream& out, std::span<const TrialRow> rows);
std::vector<TrialRow> read_trials_csv(std::istream& in);

struct ReportRow {
  std::string metric;
  AnovaResult anova;
  std::string tukey;
  std::vector<double> group_means;
};

struct ReportSection {
  std::string scenario;
  std::vector<std::string> groups;  // reasoning modes
  std::vector<ReportRow> rows;
  std::vector<double> compliance_rate;  // mean per group
  std::vector<double> mean_delta_f1;    // mean per group
};

struct Report {
  std::vector<ReportSection> sections;

  std::string to_text() const;
  std::string to_json() const;
};

// Per scenario, one-way ANOVA / eta^2 / Tukey over the reasoning-mode groups
// for memory, bandwidth, CPU, energy, latency and F1. Throws
// Error(DegenerateGroups) when a scenario has fewer than two groups.
Report emit_report(std::span<const TrialRow> rows);

// "<0.0001" below 1e-4, otherwise 4 decimals.
std::string format_p_value(double p);

}  // namespace edgeids
