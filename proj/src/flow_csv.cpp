#include "edgeids/flow_csv.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <istream>
#include <optional>
#include <ostream>
#include <unordered_map>

#include <fmt/format.h>

#include "edgeids/error.hpp"

namespace edgeids {

std::vector<std::string> split_csv_line(std::string_view line) {
  std::vector<std::string> fields;
  std::string current;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          current.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        current.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(current));
      current.clear();
    } else if (c != '\r') {
      current.push_back(c);
    }
  }
  fields.push_back(std::move(current));
  return fields;
}

std::string csv_escape(std::string_view field) {
  if (field.find_first_of(",\"\n") == std::string_view::npos) return std::string(field);
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += "\"\"";
    else out.push_back(c);
  }
  out.push_back('"');
  return out;
}

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t");
  return std::string(s.substr(b, e - b + 1));
}

class RowReader {
 public:
  RowReader(const std::unordered_map<std::string, std::size_t>& columns,
            const std::vector<std::string>& fields, std::size_t line)
      : columns_(columns), fields_(fields), line_(line) {}

  std::optional<std::string> text(const std::string& column) const {
    auto it = columns_.find(column);
    if (it == columns_.end() || it->second >= fields_.size()) return std::nullopt;
    return trim(fields_[it->second]);
  }

  std::string required_text(const std::string& column) const {
    auto value = text(column);
    if (!value) fail(column, "missing");
    return *value;
  }

  double real(const std::string& column) const {
    const std::string s = required_text(column);
    return parse_real(column, s);
  }

  std::optional<double> optional_real(const std::string& column) const {
    auto s = text(column);
    if (!s || s->empty()) return std::nullopt;
    return parse_real(column, *s);
  }

  std::uint64_t count(const std::string& column) const {
    const double v = real(column);
    if (v < 0 || v != std::floor(v)) fail(column, "not a non-negative integer");
    return static_cast<std::uint64_t>(v);
  }

  std::optional<std::uint64_t> optional_count(const std::string& column) const {
    auto v = optional_real(column);
    if (!v) return std::nullopt;
    if (*v < 0 || *v != std::floor(*v)) fail(column, "not a non-negative integer");
    return static_cast<std::uint64_t>(*v);
  }

  [[noreturn]] void fail(const std::string& column, const std::string& why) const {
    throw Error(Errc::ParseError, fmt::format("line {}: column '{}': {}", line_, column, why));
  }

  std::size_t line() const { return line_; }

 private:
  double parse_real(const std::string& column, const std::string& s) const {
    double v = 0.0;
    const char* end = s.data() + s.size();
    auto [ptr, ec] = std::from_chars(s.data(), end, v);
    if (ec != std::errc() || ptr != end || !std::isfinite(v)) {
      fail(column, "bad number '" + s + "'");
    }
    return v;
  }

  const std::unordered_map<std::string, std::size_t>& columns_;
  const std::vector<std::string>& fields_;
  std::size_t line_;
};

template <typename Key, typename ParseKey>
std::map<Key, std::uint64_t> parse_count_map(const RowReader& row, const std::string& column,
                                             const std::string& text, ParseKey parse_key) {
  std::map<Key, std::uint64_t> out;
  std::size_t start = 0;
  while (start < text.size()) {
    auto end = text.find(';', start);
    if (end == std::string::npos) end = text.size();
    const std::string item = trim(std::string_view(text).substr(start, end - start));
    start = end + 1;
    if (item.empty()) continue;
    const auto colon = item.find(':');
    if (colon == std::string::npos) row.fail(column, "expected KEY:count in '" + item + "'");
    auto key = parse_key(trim(item.substr(0, colon)));
    if (!key) row.fail(column, "unknown key in '" + item + "'");
    std::uint64_t n = 0;
    const std::string count = trim(item.substr(colon + 1));
    auto [ptr, ec] = std::from_chars(count.data(), count.data() + count.size(), n);
    if (ec != std::errc() || ptr != count.data() + count.size()) {
      row.fail(column, "bad count in '" + item + "'");
    }
    out[*key] += n;
  }
  return out;
}

FlowRecord parse_native(const RowReader& row) {
  FlowRecord r;
  r.session_id = row.required_text("session_id");
  r.timestamp_ms = static_cast<std::int64_t>(row.real("timestamp_ms"));
  r.src_addr = row.text("src_addr").value_or("");
  r.dst_addr = row.text("dst_addr").value_or("");
  r.duration_s = row.real("duration_s");
  r.fwd_packet_count = row.count("fwd_packets");
  r.bwd_packet_count = row.count("bwd_packets");
  r.mean_packet_size = row.real("mean_packet_size");
  r.packet_size_variance = row.real("packet_size_variance");
  r.inter_arrival_mean_ms = row.real("inter_arrival_mean_ms");
  r.src_port = static_cast<int>(row.count("src_port"));
  r.dst_port = static_cast<int>(row.count("dst_port"));
  const std::string proto = row.required_text("protocol");
  auto p = parse_protocol(proto);
  if (!p) row.fail("protocol", "unknown protocol '" + proto + "'");
  r.protocol = *p;
  if (auto flags = row.text("tcp_flags")) {
    r.tcp_flag_counts = parse_count_map<std::string>(
        row, "tcp_flags", *flags, [](std::string k) { return std::optional<std::string>(k); });
  }
  auto connections = row.optional_count("connections_in_window");
  auto ports = row.optional_count("distinct_dst_ports_in_window");
  r.failed_auth_count_in_window = row.optional_count("failed_auth_count_in_window").value_or(0);
  if (auto protos = row.text("protocol_counts"); protos && !protos->empty()) {
    r.protocol_counts_in_window = parse_count_map<Protocol>(
        row, "protocol_counts", *protos, [](const std::string& k) { return parse_protocol(k); });
  }
  if (connections && ports) {
    r.has_window_counts = true;
    r.connections_in_window = *connections;
    r.distinct_dst_ports_in_window = *ports;
    if (r.protocol_counts_in_window.empty()) r.protocol_counts_in_window[r.protocol] = 1;
  }
  if (auto label = row.text("label"); label && !label->empty()) r.label = *label;
  return r;
}

// CICIDS2017 timestamps look like "7/7/2017 3:30" or "03/07/2017 08:55:58"
// (day/month/year). Only used to place flows into windows.
std::optional<std::int64_t> parse_cicids_time(const std::string& s) {
  int d = 0, mo = 0, y = 0, h = 0, mi = 0, sec = 0;
  const int n = std::sscanf(s.c_str(), "%d/%d/%d %d:%d:%d", &d, &mo, &y, &h, &mi, &sec);
  if (n < 5) return std::nullopt;
  std::tm tm{};
  tm.tm_year = y - 1900;
  tm.tm_mon = mo - 1;
  tm.tm_mday = d;
  tm.tm_hour = h;
  tm.tm_min = mi;
  tm.tm_sec = n == 6 ? sec : 0;
  return static_cast<std::int64_t>(timegm(&tm)) * 1000;
}

FlowRecord parse_cicids(const RowReader& row) {
  FlowRecord r;
  r.session_id = row.text("Flow ID").value_or(std::to_string(row.line()));
  if (auto ts = row.text("Timestamp")) {
    r.timestamp_ms = parse_cicids_time(*ts).value_or(0);
  }
  r.src_addr = row.text("Source IP").value_or("");
  r.dst_addr = row.text("Destination IP").value_or("");
  r.duration_s = row.real("Flow Duration") / 1e6;
  r.fwd_packet_count = row.count("Total Fwd Packets");
  r.bwd_packet_count = row.count("Total Backward Packets");
  r.mean_packet_size = row.real("Packet Length Mean");
  r.packet_size_variance = row.real("Packet Length Variance");
  r.inter_arrival_mean_ms = row.real("Flow IAT Mean") / 1000.0;
  r.dst_port = static_cast<int>(row.count("Destination Port"));
  r.src_port = static_cast<int>(row.optional_count("Source Port").value_or(0));
  if (auto proto = row.text("Protocol"); proto && !proto->empty()) {
    auto p = parse_protocol(*proto);
    r.protocol = p.value_or(Protocol::Other);
  }
  static const std::pair<const char*, const char*> kFlags[] = {
      {"FIN Flag Count", "FIN"}, {"SYN Flag Count", "SYN"}, {"RST Flag Count", "RST"},
      {"PSH Flag Count", "PSH"}, {"ACK Flag Count", "ACK"}, {"URG Flag Count", "URG"},
      {"CWE Flag Count", "CWR"}, {"ECE Flag Count", "ECE"}};
  for (const auto& [column, flag] : kFlags) {
    if (auto n = row.optional_count(column); n && *n > 0) r.tcp_flag_counts[flag] = *n;
  }
  if (auto label = row.text("Label"); label && !label->empty()) r.label = *label;
  return r;
}

}  // namespace

FlowTable read_flow_csv(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!trim(line).empty()) break;
  }
  if (trim(line).empty()) throw Error(Errc::ParseError, "empty CSV: no header row");

  std::unordered_map<std::string, std::size_t> columns;
  const auto header = split_csv_line(line);
  for (std::size_t i = 0; i < header.size(); ++i) columns.emplace(trim(header[i]), i);

  FlowTable table;
  table.dialect = columns.count("Flow Duration") ? CsvDialect::Cicids2017 : CsvDialect::Native;
  table.has_label_column =
      columns.count(table.dialect == CsvDialect::Native ? "label" : "Label") > 0;

  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto fields = split_csv_line(line);
    RowReader row(columns, fields, line_no);
    FlowRecord r =
        table.dialect == CsvDialect::Native ? parse_native(row) : parse_cicids(row);
    try {
      validate(r);
    } catch (const Error& e) {
      throw Error(Errc::ParseError, fmt::format("line {}: {}", line_no, e.what()));
    }
    table.records.push_back(std::move(r));
  }
  annotate_windows(table.records);
  return table;
}

FlowTable read_flow_csv_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::IoError, "cannot open " + path.string());
  return read_flow_csv(in);
}

namespace {
template <typename Map, typename KeyName>
std::string format_count_map(const Map& m, KeyName key_name) {
  std::string out;
  for (const auto& [key, count] : m) {
    if (!out.empty()) out.push_back(';');
    out += fmt::format("{}:{}", key_name(key), count);
  }
  return out;
}
}  // namespace

void write_flow_csv(std::ostream& out, std::span<const FlowRecord> records) {
  out << "session_id,timestamp_ms,src_addr,dst_addr,duration_s,fwd_packets,bwd_packets,"
         "mean_packet_size,packet_size_variance,inter_arrival_mean_ms,src_port,dst_port,"
         "protocol,tcp_flags,connections_in_window,distinct_dst_ports_in_window,"
         "failed_auth_count_in_window,protocol_counts,label\n";
  for (const auto& r : records) {
    const std::string flags =
        format_count_map(r.tcp_flag_counts, [](const std::string& k) { return k; });
    const std::string protos =
        format_count_map(r.protocol_counts_in_window, [](Protocol p) { return to_string(p); });
    out << fmt::format("{},{},{},{},{},{},{},{},{},{},{},{},{},{},", csv_escape(r.session_id),
                       r.timestamp_ms, csv_escape(r.src_addr), csv_escape(r.dst_addr),
                       r.duration_s, r.fwd_packet_count, r.bwd_packet_count, r.mean_packet_size,
                       r.packet_size_variance, r.inter_arrival_mean_ms, r.src_port, r.dst_port,
                       to_string(r.protocol), flags);
    if (r.has_window_counts) {
      out << fmt::format("{},{},", r.connections_in_window, r.distinct_dst_ports_in_window);
    } else {
      out << ",,";
    }
    out << fmt::format("{},{},{}\n", r.failed_auth_count_in_window, protos,
                       csv_escape(r.label.value_or("")));
  }
}

}  // namespace edgeids
