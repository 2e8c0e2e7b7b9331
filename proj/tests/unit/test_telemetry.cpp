#include "doctest.h"

#include <atomic>
#include <thread>
#include <vector>

#include <fmt/format.h>

#include "edgeids/error.hpp"
#include "edgeids/telemetry.hpp"
#include "support.hpp"

using namespace edgeids;

namespace {

ScriptedMetricsSource fixed(double cpu, double mem, double lat, double energy) {
  ScriptedMetricsSource::Entry e;
  e.reading = {cpu, mem, lat, energy};
  e.power_w = 3.0;
  return ScriptedMetricsSource({e});
}

Errc code_of(const auto& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an Error");
  return Errc::InvalidArgument;
}

}  // namespace

TEST_CASE("capture") {
  SUBCASE("runtime-log readings") {
    auto src = fixed(47.6, 372, 48.2, 21.7);
    const auto s = capture(src, 0.93, 1000);
    CHECK(s.cpu_percent == 47.6);
    CHECK(s.memory_mb == 372);
    CHECK(s.latency_ms == 48.2);
    CHECK(s.energy_j == 21.7);
    CHECK(s.anomaly_score == 0.93);
    CHECK(s.timestamp_ms == 1000);
  }
  SUBCASE("zero readings") {
    auto src = fixed(0, 0, 0, 0);
    const auto s = capture(src, 0.0, 0);
    CHECK(s.as_array() == std::array<double, 5>{});
  }
  SUBCASE("CPU 150 is out of range") {
    auto src = fixed(150, 0, 0, 0);
    CHECK(code_of([&] { capture(src, 0.5, 0); }) == Errc::ValueOutOfRange);
  }
  SUBCASE("score outside [0, 1] is out of range") {
    auto src = fixed(10, 0, 0, 0);
    CHECK(code_of([&] { capture(src, 1.5, 0); }) == Errc::ValueOutOfRange);
  }
  SUBCASE("empty timeline is unavailable") {
    ScriptedMetricsSource src;
    CHECK(code_of([&] { capture(src, 0.5, 0); }) == Errc::SamplerUnavailable);
  }
}

TEST_CASE("normalize_telemetry") {
  const BaselineCapacity baseline;
  SUBCASE("runtime-log vector") {
    TelemetrySnapshot s{47.6, 372, 48.2, 21.7, 0.93, 0};
    const auto n = normalize_telemetry(s, baseline);
    std::vector<std::string> shown;
    for (double v : n.values) shown.push_back(fmt::format("{:.3f}", v));
    CHECK(shown == std::vector<std::string>{"0.476", "0.182", "0.964", "0.072", "0.930"});
    for (bool f : n.saturated) CHECK_FALSE(f);
  }
  SUBCASE("80% CPU maps to 0.80") {
    TelemetrySnapshot s;
    s.cpu_percent = 80;
    CHECK(normalize_telemetry(s, baseline).values[0] == 0.80);
  }
  SUBCASE("latency above baseline saturates") {
    TelemetrySnapshot s;
    s.latency_ms = 100;
    const auto n = normalize_telemetry(s, baseline);
    CHECK(n.values[2] == 1.0);
    CHECK(n.saturated[2]);
    s.latency_ms = 50;
    CHECK_FALSE(normalize_telemetry(s, baseline).saturated[2]);
  }
  SUBCASE("non-positive baseline is rejected") {
    BaselineCapacity bad;
    bad.values[1] = 0;
    CHECK_THROWS_AS(bad.validate(), Error);
  }
}

TEST_CASE("property: normalized telemetry stays in the unit hypercube") {
  Rng rng(31);
  for (int i = 0; i < 10000; ++i) {
    TelemetrySnapshot s{rng.uniform(0, 100), rng.uniform(0, 10000), rng.uniform(0, 5000),
                        rng.uniform(0, 1000), rng.uniform01(), 0};
    BaselineCapacity b;
    for (auto& v : b.values) v = rng.uniform(1e-3, 5000);
    const auto n = normalize_telemetry(s, b);
    const auto raw = s.as_array();
    for (std::size_t d = 0; d < kTelemetryDims; ++d) {
      CHECK(n.values[d] >= 0.0);
      CHECK(n.values[d] <= 1.0);
      CHECK(n.saturated[d] == (raw[d] / b.values[d] > 1.0));
    }
  }
}

TEST_CASE("property: homogeneity below saturation and device-agnostic equality") {
  Rng rng(32);
  for (int i = 0; i < 2000; ++i) {
    const BaselineCapacity b;
    TelemetrySnapshot s{rng.uniform(0, 100), rng.uniform(0, 2048), rng.uniform(0, 50),
                        rng.uniform(0, 300), rng.uniform01(), 0};
    const double alpha = rng.uniform(1e-3, 1.0);
    TelemetrySnapshot scaled = s;
    scaled.cpu_percent *= alpha;
    scaled.memory_mb *= alpha;
    const auto n = normalize_telemetry(s, b);
    const auto m = normalize_telemetry(scaled, b);
    CHECK(std::abs(m.values[0] - alpha * n.values[0]) <= 1e-12);
    CHECK(std::abs(m.values[1] - alpha * n.values[1]) <= 1e-12);

    // A device with k times the capacity under k times the load.
    const double k = rng.uniform(0.5, 8.0);
    BaselineCapacity big = b;
    TelemetrySnapshot loaded = s;
    big.values[1] *= k;
    loaded.memory_mb *= k;
    CHECK(std::abs(normalize_telemetry(loaded, big).values[1] - n.values[1]) <= 1e-12);
  }
}

TEST_CASE("scripted timeline is a step function") {
  auto s = ScriptedMetricsSource::from_json(R"({"timeline": [
      {"t_ms": 1000, "cpu_percent": 10, "memory_mb": 100, "latency_ms": 1, "energy_j": 2},
      {"t_ms": 2000, "cpu_percent": 50, "memory_mb": 200, "latency_ms": 3, "energy_j": 4,
       "power_w": 9.5}]})");
  CHECK(s.size() == 2);
  CHECK(s.read(0).cpu_percent == 10);      // before the first entry
  CHECK(s.read(1999).cpu_percent == 10);
  CHECK(s.read(2000).cpu_percent == 50);
  CHECK(s.power_watts(2500) == 9.5);
  const PowerModel model;
  CHECK(s.power_watts(1500) == doctest::Approx(model.watts(10)));
  CHECK_THROWS_AS(ScriptedMetricsSource::from_json(R"({"timeline": [{"t_ms": 0}]})"), Error);
}

TEST_CASE("scripted source tolerates a writer while readers run") {
  ScriptedMetricsSource src = [] {
    ScriptedMetricsSource::Entry e;
    e.reading.cpu_percent = 1;
    return ScriptedMetricsSource({e});
  }();
  std::atomic<bool> done{false};
  std::thread writer([&] {
    for (int i = 0; i < 2000; ++i) {
      ScriptedMetricsSource::Entry e;
      e.reading.cpu_percent = static_cast<double>(i % 100);
      src.set_timeline({e});
    }
    done = true;
  });
  std::vector<std::thread> readers;
  std::atomic<int> bad{0};
  for (int r = 0; r < 3; ++r) {
    readers.emplace_back([&] {
      while (!done) {
        const double cpu = src.read(0).cpu_percent;
        if (cpu < 0 || cpu > 100) ++bad;
      }
    });
  }
  writer.join();
  for (auto& t : readers) t.join();
  CHECK(bad == 0);
}

TEST_CASE("host source reports plausible readings") {
  HostMetricsSource host;
  const auto r1 = host.read(0);
  volatile double sink = 0;
  for (int i = 0; i < 2'000'000; ++i) sink = sink + i;
  const auto r2 = host.read(0);
  for (const auto& r : {r1, r2}) {
    CHECK(r.cpu_percent >= 0.0);
    CHECK(r.cpu_percent <= 100.0);
    CHECK(r.memory_mb > 0.0);
  }
  host.record_latency_ms(12.5);
  host.record_energy_j(3.0);
  CHECK(host.read(0).latency_ms == 12.5);
  CHECK(host.read(0).energy_j == 3.0);
  CHECK(host.power_watts(0) >= PowerModel{}.idle_w);
}
