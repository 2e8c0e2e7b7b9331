#include "edgeids/features.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <set>
#include <tuple>

#include "edgeids/error.hpp"
#include "edgeids/kernels/kernels.hpp"

namespace edgeids {

std::string_view to_string(Protocol p) noexcept {
  switch (p) {
    case Protocol::TCP: return "TCP";
    case Protocol::UDP: return "UDP";
    case Protocol::ICMP: return "ICMP";
    case Protocol::Other: return "OTHER";
  }
  return "OTHER";
}

std::optional<Protocol> parse_protocol(std::string_view text) {
  std::string upper(text);
  for (char& c : upper) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  if (upper == "TCP" || upper == "6") return Protocol::TCP;
  if (upper == "UDP" || upper == "17") return Protocol::UDP;
  if (upper == "ICMP" || upper == "1") return Protocol::ICMP;
  if (upper == "OTHER" || upper == "0") return Protocol::Other;
  return std::nullopt;
}

void validate(const FlowRecord& r) {
  auto fail = [](const char* field) {
    throw Error(Errc::InvalidRecord, std::string("field ") + field + " out of range");
  };
  if (!std::isfinite(r.duration_s) || r.duration_s < 0) fail("duration");
  if (!std::isfinite(r.mean_packet_size) || r.mean_packet_size < 0) fail("mean_packet_size");
  if (!std::isfinite(r.packet_size_variance) || r.packet_size_variance < 0) {
    fail("packet_size_variance");
  }
  if (!std::isfinite(r.inter_arrival_mean_ms) || r.inter_arrival_mean_ms < 0) {
    fail("inter_arrival_mean_ms");
  }
  if (r.src_port < 0 || r.src_port > 65535) fail("src_port");
  if (r.dst_port < 0 || r.dst_port > 65535) fail("dst_port");
}

FeatureVector::FeatureVector(const Values& values) : values_(values) {
  for (double v : values_) {
    if (!std::isfinite(v)) throw Error(Errc::InvalidArgument, "feature vector entry is not finite");
  }
}

FeatureVector FeatureVector::from_span(std::span<const double> values) {
  if (values.size() != kFeatureCount) {
    throw Error(Errc::InvalidArgument, "feature vector needs exactly 12 entries, got " +
                                           std::to_string(values.size()));
  }
  Values v{};
  std::copy(values.begin(), values.end(), v.begin());
  return FeatureVector(v);
}

double shannon_entropy(std::span<const std::uint64_t> counts) {
  std::uint64_t total = 0;
  for (auto c : counts) total += c;
  if (total == 0) throw Error(Errc::EmptyDistribution, "all category counts are zero");
  double h = 0.0;
  const double n = static_cast<double>(total);
  for (auto c : counts) {
    if (c == 0) continue;
    const double p = static_cast<double>(c) / n;
    h -= p * std::log2(p);
  }
  // A single category yields -1*log2(1) = -0.0; report +0.
  return h <= 0.0 ? 0.0 : h;
}

namespace {

template <typename Key>
double entropy_or_zero(const std::map<Key, std::uint64_t>& counts) {
  for (const auto& [key, count] : counts) {
    if (count > 0) return shannon_entropy(counts);
  }
  return 0.0;
}

}  // namespace

// Dimension formulas (see docs/FEATURES.md):
//  0 duration_norm_rate      min(duration / 5 s window, 1)
//  1 fwd_packets             forward packet count
//  2 mean_pkt_size_kB        mean packet size / 1000
//  3 bwd_fwd_ratio           bwd / fwd packets (0 without forward packets)
//  4 dst_port                destination port
//  5 src_port                source port (port-reuse proxy)
//  6 inter_arrival_score     min(mean inter-arrival ms / 1000, 1)
//  7 flag_entropy            entropy of TCP flag counts, bits
//  8 connections_per_window  connections from the source in its window
//  9 distinct_ports          distinct destination ports in the window
// 10 variance_score          packet size coefficient of variation
// 11 protocol_diversity      entropy of protocol counts in the window, bits
FeatureVector extract_features(const FlowRecord& r) {
  FeatureVector::Values v{};
  v[0] = std::min(r.duration_s / kWindowSeconds, 1.0);
  v[1] = static_cast<double>(r.fwd_packet_count);
  v[2] = r.mean_packet_size / 1000.0;
  v[3] = r.fwd_packet_count == 0
             ? 0.0
             : static_cast<double>(r.bwd_packet_count) / static_cast<double>(r.fwd_packet_count);
  v[4] = static_cast<double>(r.dst_port);
  v[5] = static_cast<double>(r.src_port);
  v[6] = std::min(r.inter_arrival_mean_ms / 1000.0, 1.0);
  v[7] = entropy_or_zero(r.tcp_flag_counts);
  v[8] = static_cast<double>(r.connections_in_window);
  v[9] = static_cast<double>(r.distinct_dst_ports_in_window);
  v[10] = r.mean_packet_size > 0.0 ? std::sqrt(r.packet_size_variance) / r.mean_packet_size : 0.0;
  v[11] = entropy_or_zero(r.protocol_counts_in_window);
  return FeatureVector(v);
}

NormalizationStats fit_normalization(std::span<const FeatureVector> benign, double sigma_floor) {
  if (benign.size() < 2) {
    throw Error(Errc::InsufficientData, "normalization needs at least 2 vectors, got " +
                                            std::to_string(benign.size()));
  }
  if (!(sigma_floor > 0.0)) throw Error(Errc::InvalidArgument, "sigma_floor must be positive");

  NormalizationStats stats;
  stats.sample_count = benign.size();
  stats.sigma_floor = sigma_floor;
  const double n = static_cast<double>(benign.size());
  std::vector<double> column(benign.size());
  for (std::size_t d = 0; d < kFeatureCount; ++d) {
    for (std::size_t t = 0; t < benign.size(); ++t) column[t] = benign[t][d];
    const double mean = kernels::sum(column) / n;
    const double sd = std::sqrt(kernels::sum_squared_deviations(column, mean) / n);
    stats.mean[d] = mean;
    stats.stddev[d] = sd < sigma_floor ? sigma_floor : sd;
  }
  return stats;
}

FeatureVector normalize(const FeatureVector& x, const NormalizationStats& stats) {
  FeatureVector::Values out{};
  kernels::standardize(x.span(), stats.mean, stats.stddev, out);
  return FeatureVector(out);
}

void annotate_windows(std::vector<FlowRecord>& records, double window_s) {
  const auto window_ms = static_cast<std::int64_t>(std::llround(window_s * 1000.0));
  struct Window {
    std::uint64_t connections = 0;
    std::set<int> ports;
    std::map<Protocol, std::uint64_t> protocols;
  };
  std::map<std::tuple<std::string, std::int64_t>, Window> windows;
  auto key_of = [&](const FlowRecord& r) {
    std::int64_t bucket = r.timestamp_ms / window_ms;
    if (r.timestamp_ms < 0 && r.timestamp_ms % window_ms != 0) --bucket;
    return std::make_tuple(r.src_addr, bucket);
  };
  for (const auto& r : records) {
    auto& w = windows[key_of(r)];
    ++w.connections;
    w.ports.insert(r.dst_port);
    ++w.protocols[r.protocol];
  }
  for (auto& r : records) {
    if (r.has_window_counts) continue;
    const auto& w = windows.at(key_of(r));
    r.connections_in_window = w.connections;
    r.distinct_dst_ports_in_window = w.ports.size();
    r.protocol_counts_in_window = w.protocols;
    r.has_window_counts = true;
  }
}

}  // namespace edgeids
