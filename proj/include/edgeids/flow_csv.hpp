#pragma once

#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "edgeids/features.hpp"

namespace edgeids {

// Native schema (one FlowRecord per row, columns matched by header name):
//   session_id, timestamp_ms, src_addr, dst_addr, duration_s, fwd_packets,
//   bwd_packets, mean_packet_size, packet_size_variance, inter_arrival_mean_ms,
//   src_port, dst_port, protocol, tcp_flags, connections_in_window,
//   distinct_dst_ports_in_window, failed_auth_count_in_window,
//   protocol_counts, label
// tcp_flags / protocol_counts are "KEY:count;KEY:count". Empty window columns
// mean "derive from the window" (see annotate_windows).
//
// A header containing "Flow Duration" selects the CICIDS2017 projection
// documented in docs/FEATURES.md.
enum class CsvDialect { Native, Cicids2017 };

struct FlowTable {
  std::vector<FlowRecord> records;
  CsvDialect dialect = CsvDialect::Native;
  bool has_label_column = false;
};

// Throws Error(ParseError) naming the offending line number and column.
FlowTable read_flow_csv(std::istream& in);
FlowTable read_flow_csv_file(const std::filesystem::path& path);

void write_flow_csv(std::ostream& out, std::span<const FlowRecord> records);

// RFC 4180-style field splitting (double quotes, "" escapes).
std::vector<std::string> split_csv_line(std::string_view line);
std::string csv_escape(std::string_view field);

}  // namespace edgeids
