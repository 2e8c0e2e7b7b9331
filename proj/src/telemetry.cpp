#include "edgeids/telemetry.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <string>

#include "json.hpp"

#include "edgeids/error.hpp"

namespace edgeids {

void BaselineCapacity::validate() const {
  for (double v : values) {
    if (!std::isfinite(v) || !(v > 0.0)) {
      throw Error(Errc::InvalidArgument, "baseline capacities must be finite and positive");
    }
  }
}

NormalizedTelemetry normalize_telemetry(const TelemetrySnapshot& snapshot,
                                        const BaselineCapacity& baseline) {
  baseline.validate();
  NormalizedTelemetry out;
  const auto raw = snapshot.as_array();
  for (std::size_t i = 0; i < kTelemetryDims; ++i) {
    const double ratio = raw[i] / baseline.values[i];
    out.saturated[i] = ratio > 1.0;
    out.values[i] = std::clamp(ratio, 0.0, 1.0);
  }
  return out;
}

TelemetrySnapshot capture(MetricsSource& source, double anomaly_score, std::int64_t at_ms) {
  const MetricsReading r = source.read(at_ms);
  auto check = [](double v, const char* what) {
    if (!std::isfinite(v) || v < 0.0) {
      throw Error(Errc::ValueOutOfRange, std::string(what) + " must be finite and non-negative");
    }
  };
  check(r.cpu_percent, "cpu_percent");
  check(r.memory_mb, "memory_mb");
  check(r.latency_ms, "latency_ms");
  check(r.energy_j, "energy_j");
  if (r.cpu_percent > 100.0) throw Error(Errc::ValueOutOfRange, "cpu_percent above 100");
  if (!(anomaly_score >= 0.0 && anomaly_score <= 1.0)) {
    throw Error(Errc::ValueOutOfRange, "anomaly score outside [0, 1]");
  }
  return TelemetrySnapshot{r.cpu_percent, r.memory_mb, r.latency_ms, r.energy_j, anomaly_score,
                           at_ms};
}

// ---------------------------------------------------------------------------

ScriptedMetricsSource::ScriptedMetricsSource(std::vector<Entry> timeline) {
  set_timeline(std::move(timeline));
}

void ScriptedMetricsSource::set_timeline(std::vector<Entry> timeline) {
  std::stable_sort(timeline.begin(), timeline.end(),
                   [](const Entry& a, const Entry& b) { return a.t_ms < b.t_ms; });
  std::unique_lock lock(mutex_);
  timeline_ = std::move(timeline);
}

std::size_t ScriptedMetricsSource::size() const {
  std::shared_lock lock(mutex_);
  return timeline_.size();
}

const ScriptedMetricsSource::Entry& ScriptedMetricsSource::at(std::int64_t t_ms) const {
  if (timeline_.empty()) throw Error(Errc::SamplerUnavailable, "scripted timeline is empty");
  auto it = std::upper_bound(timeline_.begin(), timeline_.end(), t_ms,
                             [](std::int64_t t, const Entry& e) { return t < e.t_ms; });
  return it == timeline_.begin() ? *it : *std::prev(it);
}

MetricsReading ScriptedMetricsSource::read(std::int64_t at_ms) {
  std::shared_lock lock(mutex_);
  return at(at_ms).reading;
}

double ScriptedMetricsSource::power_watts(std::int64_t at_ms) {
  std::shared_lock lock(mutex_);
  return at(at_ms).power_w;
}

ScriptedMetricsSource ScriptedMetricsSource::from_json(std::string_view text,
                                                       const PowerModel& model) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::ParseError, std::string("telemetry timeline: ") + e.what());
  }
  if (!doc.contains("timeline") || !doc["timeline"].is_array()) {
    throw Error(Errc::ParseError, "telemetry timeline: missing 'timeline' array");
  }
  std::vector<Entry> entries;
  std::size_t i = 0;
  for (const auto& item : doc["timeline"]) {
    auto number = [&](const char* key) -> double {
      if (!item.contains(key) || !item[key].is_number()) {
        throw Error(Errc::ParseError,
                    "telemetry timeline entry " + std::to_string(i) + ": missing number '" + key + "'");
      }
      return item[key].get<double>();
    };
    Entry e;
    e.t_ms = item.contains("t_ms") ? item["t_ms"].get<std::int64_t>() : 0;
    e.reading = {number("cpu_percent"), number("memory_mb"), number("latency_ms"),
                 number("energy_j")};
    e.power_w = item.contains("power_w") ? number("power_w") : model.watts(e.reading.cpu_percent);
    entries.push_back(e);
    ++i;
  }
  return ScriptedMetricsSource(std::move(entries));
}

ScriptedMetricsSource ScriptedMetricsSource::load(const std::filesystem::path& path,
                                                  const PowerModel& model) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::IoError, "cannot open " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return from_json(buf.str(), model);
}

// ---------------------------------------------------------------------------

HostMetricsSource::HostMetricsSource(PowerModel model) : model_(model) {
  std::lock_guard lock(mutex_);
  sample_cpu_percent();
}

double HostMetricsSource::sample_cpu_percent() {
  std::ifstream stat("/proc/stat");
  std::string cpu;
  std::uint64_t user = 0, nice = 0, system = 0, idle = 0, iowait = 0, irq = 0, softirq = 0,
                steal = 0;
  if (!(stat >> cpu >> user >> nice >> system >> idle >> iowait >> irq >> softirq >> steal) ||
      cpu != "cpu") {
    throw Error(Errc::SamplerUnavailable, "/proc/stat unreadable");
  }
  const std::uint64_t idle_all = idle + iowait;
  const std::uint64_t total = user + nice + system + idle + iowait + irq + softirq + steal;
  const std::uint64_t busy = total - idle_all;
  if (total > last_total_ && last_total_ != 0) {
    last_cpu_ = 100.0 * static_cast<double>(busy - last_busy_) /
                static_cast<double>(total - last_total_);
    last_cpu_ = std::clamp(last_cpu_, 0.0, 100.0);
  }
  last_busy_ = busy;
  last_total_ = total;
  return last_cpu_;
}

MetricsReading HostMetricsSource::read(std::int64_t) {
  std::lock_guard lock(mutex_);
  MetricsReading r;
  r.cpu_percent = sample_cpu_percent();
  std::ifstream status("/proc/self/status");
  std::string line;
  bool found = false;
  while (std::getline(status, line)) {
    if (line.rfind("VmRSS:", 0) == 0) {
      std::istringstream fields(line.substr(6));
      double kb = 0.0;
      fields >> kb;
      r.memory_mb = kb / 1024.0;
      found = true;
      break;
    }
  }
  if (!found) throw Error(Errc::SamplerUnavailable, "/proc/self/status has no VmRSS");
  r.latency_ms = latency_ms_;
  r.energy_j = energy_j_;
  return r;
}

double HostMetricsSource::power_watts(std::int64_t) {
  std::lock_guard lock(mutex_);
  return model_.watts(last_cpu_);
}

void HostMetricsSource::record_latency_ms(double latency_ms) {
  std::lock_guard lock(mutex_);
  latency_ms_ = latency_ms;
}

void HostMetricsSource::record_energy_j(double energy_j) {
  std::lock_guard lock(mutex_);
  energy_j_ = energy_j;
}

}  // namespace edgeids
