#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <mutex>
#include <shared_mutex>
#include <string_view>
#include <vector>

namespace edgeids {

inline constexpr std::size_t kTelemetryDims = 5;
inline constexpr std::array<std::string_view, kTelemetryDims> kTelemetryNames = {
    "cpu", "memory", "latency", "energy", "anomaly_score"};

struct TelemetrySnapshot {
  double cpu_percent = 0.0;
  double memory_mb = 0.0;
  double latency_ms = 0.0;
  double energy_j = 0.0;
  double anomaly_score = 0.0;
  std::int64_t timestamp_ms = 0;

  std::array<double, kTelemetryDims> as_array() const {
    return {cpu_percent, memory_mb, latency_ms, energy_j, anomaly_score};
  }
};

// Per-device divisors for [cpu %, memory MB, latency ms, energy J, score].
struct BaselineCapacity {
  std::array<double, kTelemetryDims> values{100.0, 2048.0, 50.0, 300.0, 1.0};

  // Throws Error(InvalidArgument) unless every entry is finite and > 0.
  void validate() const;
};

struct NormalizedTelemetry {
  std::array<double, kTelemetryDims> values{};
  std::array<bool, kTelemetryDims> saturated{};
};

// Element-wise raw / baseline, clamped to 1 with the saturation flag set.
NormalizedTelemetry normalize_telemetry(const TelemetrySnapshot& snapshot,
                                        const BaselineCapacity& baseline);

struct MetricsReading {
  double cpu_percent = 0.0;
  double memory_mb = 0.0;
  double latency_ms = 0.0;
  double energy_j = 0.0;
};

// Source of system metrics and instantaneous power. Implementations must
// tolerate one writer updating readings while many threads read.
class MetricsSource {
 public:
  virtual ~MetricsSource() = default;
  // Throws Error(SamplerUnavailable) when no reading can be produced.
  virtual MetricsReading read(std::int64_t at_ms) = 0;
  virtual double power_watts(std::int64_t at_ms) = 0;
};

// Snapshot of the source plus the detection score. Throws
// Error(ValueOutOfRange) if the source reports CPU outside [0, 100], a
// negative or non-finite metric, or the score lies outside [0, 1].
TelemetrySnapshot capture(MetricsSource& source, double anomaly_score, std::int64_t at_ms);

// Linear CPU-proportional power estimate: idle + (max - idle) * cpu / 100.
struct PowerModel {
  double idle_w = 2.7;
  double max_w = 6.4;
  double watts(double cpu_percent) const { return idle_w + (max_w - idle_w) * cpu_percent / 100.0; }
};

// Deterministic replay source: a step-function timeline keyed by epoch ms.
// JSON layout: {"timeline": [{"t_ms": 0, "cpu_percent": 47.6, "memory_mb": 372,
//   "latency_ms": 48.2, "energy_j": 21.7, "power_w": 18.1}, ...]}
// The entry in force at time t is the last one with t_ms <= t (the first
// entry before the timeline starts). power_w defaults to the power model.
class ScriptedMetricsSource final : public MetricsSource {
 public:
  struct Entry {
    std::int64_t t_ms = 0;
    MetricsReading reading;
    double power_w = 0.0;
  };

  ScriptedMetricsSource() = default;
  explicit ScriptedMetricsSource(std::vector<Entry> timeline);

  static ScriptedMetricsSource from_json(std::string_view text, const PowerModel& model = {});
  static ScriptedMetricsSource load(const std::filesystem::path& path,
                                    const PowerModel& model = {});

  MetricsReading read(std::int64_t at_ms) override;
  double power_watts(std::int64_t at_ms) override;

  // Replaces the timeline (the single writer).
  void set_timeline(std::vector<Entry> timeline);
  std::size_t size() const;

 private:
  const Entry& at(std::int64_t t_ms) const;

  mutable std::shared_mutex mutex_;
  std::vector<Entry> timeline_;
};

// Host-backed source: CPU utilisation from /proc/stat deltas, resident memory
// from /proc/self/status, latency and energy as last recorded by the pipeline,
// power from the CPU-proportional model.
class HostMetricsSource final : public MetricsSource {
 public:
  explicit HostMetricsSource(PowerModel model = {});

  MetricsReading read(std::int64_t at_ms) override;
  double power_watts(std::int64_t at_ms) override;

  void record_latency_ms(double latency_ms);
  void record_energy_j(double energy_j);

 private:
  double sample_cpu_percent();

  PowerModel model_;
  mutable std::mutex mutex_;
  std::uint64_t last_busy_ = 0;
  std::uint64_t last_total_ = 0;
  double last_cpu_ = 0.0;
  double latency_ms_ = 0.0;
  double energy_j_ = 0.0;
};

}  // namespace edgeids
