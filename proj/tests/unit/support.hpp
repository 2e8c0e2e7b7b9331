#pragma once
// Shared helpers for the unit tests: hand-rolled generators and small oracles.

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "edgeids/detection.hpp"
#include "edgeids/features.hpp"
#include "edgeids/random.hpp"

namespace edgeids::test {

inline FeatureVector constant_vector(double v) {
  FeatureVector::Values values;
  values.fill(v);
  return FeatureVector(values);
}

inline FeatureVector random_vector(Rng& rng, double lo = -10.0, double hi = 10.0) {
  FeatureVector::Values values;
  for (auto& v : values) v = rng.uniform(lo, hi);
  return FeatureVector(values);
}

inline FeatureVector axis_vector(double x0, double x1 = 0.0) {
  FeatureVector::Values values{};
  values[0] = x0;
  values[1] = x1;
  return FeatureVector(values);
}

inline FlowRecord random_record(Rng& rng) {
  FlowRecord r;
  r.session_id = std::to_string(rng.uniform_index(100000));
  r.timestamp_ms = 1'700'000'000'000 + static_cast<std::int64_t>(rng.uniform_index(1'000'000));
  r.src_addr = "10.0.0." + std::to_string(1 + rng.uniform_index(250));
  r.dst_addr = "10.0.1.1";
  r.duration_s = rng.uniform(0.0, 20.0);
  r.fwd_packet_count = rng.uniform_index(500);
  r.bwd_packet_count = rng.uniform_index(500);
  r.mean_packet_size = rng.uniform(0.0, 9000.0);
  r.packet_size_variance = rng.uniform(0.0, 1e6);
  r.inter_arrival_mean_ms = rng.uniform(0.0, 5000.0);
  r.src_port = static_cast<int>(rng.uniform_index(65536));
  r.dst_port = static_cast<int>(rng.uniform_index(65536));
  r.protocol = static_cast<Protocol>(rng.uniform_index(4));
  for (const char* flag : {"SYN", "ACK", "FIN", "RST", "PSH"}) {
    if (rng.uniform01() < 0.6) r.tcp_flag_counts[flag] = rng.uniform_index(50);
  }
  r.has_window_counts = true;
  r.connections_in_window = rng.uniform_index(1000);
  r.distinct_dst_ports_in_window = rng.uniform_index(100);
  r.failed_auth_count_in_window = rng.uniform_index(30);
  for (Protocol p : {Protocol::TCP, Protocol::UDP, Protocol::ICMP}) {
    if (rng.uniform01() < 0.7) r.protocol_counts_in_window[p] = rng.uniform_index(40);
  }
  return r;
}

inline Posteriors random_posteriors(Rng& rng) {
  Posteriors p{};
  double total = 0.0;
  for (auto& v : p) {
    v = rng.uniform01();
    total += v;
  }
  for (auto& v : p) v /= total;
  return p;
}

}  // namespace edgeids::test
