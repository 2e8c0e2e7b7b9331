#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace edgeids {

enum class Protocol : unsigned char { TCP = 0, UDP, ICMP, Other };

std::string_view to_string(Protocol p) noexcept;
std::optional<Protocol> parse_protocol(std::string_view text);

// One flow observation as seen by the gateway. Per-window counters describe
// the 5 s tumbling window of the flow's source address; when a source did not
// provide them, annotate_windows() derives them from neighbouring records.
struct FlowRecord {
  std::string session_id;
  std::int64_t timestamp_ms = 0;
  std::string src_addr;
  std::string dst_addr;
  double duration_s = 0.0;
  std::uint64_t fwd_packet_count = 0;
  std::uint64_t bwd_packet_count = 0;
  double mean_packet_size = 0.0;      // bytes
  double packet_size_variance = 0.0;  // bytes^2
  double inter_arrival_mean_ms = 0.0;
  int src_port = 0;
  int dst_port = 0;
  Protocol protocol = Protocol::TCP;
  std::map<std::string, std::uint64_t> tcp_flag_counts;
  bool has_window_counts = false;
  std::uint64_t connections_in_window = 0;
  std::uint64_t distinct_dst_ports_in_window = 0;
  std::uint64_t failed_auth_count_in_window = 0;
  std::map<Protocol, std::uint64_t> protocol_counts_in_window;
  std::optional<std::string> label;  // fine-grained dataset label, training only
};

// Throws Error(InvalidRecord) naming the first violated field.
void validate(const FlowRecord& record);

inline constexpr std::size_t kFeatureCount = 12;

inline constexpr std::array<std::string_view, kFeatureCount> kFeatureNames = {
    "duration_norm_rate", "fwd_packets",     "mean_pkt_size_kB",       "bwd_fwd_ratio",
    "dst_port",           "src_port",        "inter_arrival_score",    "flag_entropy",
    "connections_per_window", "distinct_ports", "variance_score",      "protocol_diversity"};

inline constexpr double kWindowSeconds = 5.0;

// Fixed-dimension, finite feature vector.
class FeatureVector {
 public:
  using Values = std::array<double, kFeatureCount>;

  FeatureVector() { values_.fill(0.0); }
  // Throws Error(InvalidArgument) on non-finite entries.
  explicit FeatureVector(const Values& values);
  // Throws Error(InvalidArgument) unless values.size() == kFeatureCount.
  static FeatureVector from_span(std::span<const double> values);

  double operator[](std::size_t i) const { return values_[i]; }
  const Values& values() const noexcept { return values_; }
  std::span<const double, kFeatureCount> span() const noexcept { return values_; }

  friend bool operator==(const FeatureVector&, const FeatureVector&) = default;

 private:
  Values values_;
};

struct NormalizationStats {
  FeatureVector::Values mean{};
  FeatureVector::Values stddev{};
  std::size_t sample_count = 0;
  double sigma_floor = 1e-6;
};

inline constexpr double kDefaultSigmaFloor = 1e-6;

FeatureVector extract_features(const FlowRecord& record);

// Population mean/stddev per dimension; stddev floored at sigma_floor.
// Throws Error(InsufficientData) for fewer than two vectors.
NormalizationStats fit_normalization(std::span<const FeatureVector> benign,
                                     double sigma_floor = kDefaultSigmaFloor);

FeatureVector normalize(const FeatureVector& x, const NormalizationStats& stats);

// Shannon entropy in bits over the positive counts.
// Throws Error(EmptyDistribution) when every count is zero (or there are none).
double shannon_entropy(std::span<const std::uint64_t> counts);

template <typename Key>
double shannon_entropy(const std::map<Key, std::uint64_t>& counts) {
  std::vector<std::uint64_t> flat;
  flat.reserve(counts.size());
  for (const auto& [key, count] : counts) flat.push_back(count);
  return shannon_entropy(flat);
}

// Fills connection / distinct-port / protocol counters for records that lack
// them, grouping by (src_addr, timestamp / window) tumbling windows.
void annotate_windows(std::vector<FlowRecord>& records, double window_s = kWindowSeconds);

}  // namespace edgeids
