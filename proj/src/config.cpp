#include "edgeids/config.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <fmt/format.h>

#include "edgeids/error.hpp"

namespace edgeids {

namespace pt = boost::property_tree;

namespace {

template <typename T>
void read(const pt::ptree& tree, const std::string& key, T& target) {
  const auto node = tree.get_child_optional(pt::ptree::path_type(key, '.'));
  if (!node) return;
  const auto value = node->get_value_optional<T>();
  if (!value) {
    throw Error(Errc::ParseError,
                fmt::format("config key '{}': cannot parse '{}'", key, node->data()));
  }
  target = *value;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return {};
  return s.substr(b, s.find_last_not_of(" \t") - b + 1);
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& value) {
  if (value.empty()) return {};
  std::filesystem::path p(value);
  return p.is_relative() && !base.empty() ? base / p : p;
}

constexpr std::string_view kKnownKeys[] = {
    "gateway.node_name", "gateway.tau_alert", "gateway.reasoning_mode", "gateway.few_shot_k",
    "gateway.memory_capacity", "gateway.queue_capacity", "gateway.mitigation_sink",
    "gateway.external_models", "constraints.t_max_s", "constraints.e_budget_j",
    "constraints.gamma_min", "baseline.cpu_percent", "baseline.memory_mb", "baseline.latency_ms",
    "baseline.energy_j", "baseline.anomaly_score", "power.idle_w", "power.max_w",
    "link.uplink_bps", "link.rtt_s", "provider.id", "provider.display_name", "provider.endpoint",
    "provider.api_key_env", "provider.timeout_ms", "provider.max_retries",
    "provider.rate_capacity", "provider.rate_refill_per_s", "provider.mock_latency_s",
    "assets.knowledge_base", "assets.templates_dir", "replay.ids_seconds",
};

// A misspelt key would otherwise silently fall back to its default.
void reject_unknown_keys(const pt::ptree& tree) {
  for (const auto& [section, keys] : tree) {
    if (keys.empty()) {
      throw Error(Errc::ParseError, fmt::format("config key '{}' is outside a section", section));
    }
    for (const auto& entry : keys) {
      const std::string key = section + "." + entry.first;
      if (std::find(std::begin(kKnownKeys), std::end(kKnownKeys), key) == std::end(kKnownKeys)) {
        throw Error(Errc::ParseError, fmt::format("config key '{}' is not recognised", key));
      }
    }
  }
}

}  // namespace

PipelineConfig parse_config(std::istream& in, const std::filesystem::path& base_dir) {
  pt::ptree tree;
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw Error(Errc::ParseError, fmt::format("config line {}: {}", e.line(), e.message()));
  }

  reject_unknown_keys(tree);

  PipelineConfig c;
  read(tree, "gateway.node_name", c.node_name);
  read(tree, "gateway.tau_alert", c.tau_alert);
  std::string mode;
  read(tree, "gateway.reasoning_mode", mode);
  if (!mode.empty()) {
    const auto parsed = parse_mode(mode);
    if (!parsed) throw Error(Errc::ParseError, "config key 'gateway.reasoning_mode': " + mode);
    c.reasoning_mode = *parsed;
  }
  read(tree, "gateway.few_shot_k", c.few_shot_k);
  read(tree, "gateway.memory_capacity", c.memory_capacity);
  read(tree, "gateway.queue_capacity", c.queue_capacity);
  std::string sink;
  read(tree, "gateway.mitigation_sink", sink);
  if (sink == "command") {
    c.mitigation_sink = SinkKind::Command;
  } else if (!sink.empty() && sink != "log") {
    throw Error(Errc::ParseError, "config key 'gateway.mitigation_sink': " + sink);
  }
  std::string externals;
  read(tree, "gateway.external_models", externals);
  c.external_models = split_list(externals);

  read(tree, "constraints.t_max_s", c.constraints.t_max_s);
  read(tree, "constraints.e_budget_j", c.constraints.e_budget_j);
  read(tree, "constraints.gamma_min", c.constraints.gamma_min);

  read(tree, "baseline.cpu_percent", c.baseline.values[0]);
  read(tree, "baseline.memory_mb", c.baseline.values[1]);
  read(tree, "baseline.latency_ms", c.baseline.values[2]);
  read(tree, "baseline.energy_j", c.baseline.values[3]);
  read(tree, "baseline.anomaly_score", c.baseline.values[4]);

  read(tree, "power.idle_w", c.power.idle_w);
  read(tree, "power.max_w", c.power.max_w);

  read(tree, "link.uplink_bps", c.uplink_bps);
  read(tree, "link.rtt_s", c.rtt_s);

  read(tree, "provider.id", c.provider.provider_id);
  read(tree, "provider.display_name", c.provider.display_name);
  read(tree, "provider.endpoint", c.provider.endpoint);
  read(tree, "provider.api_key_env", c.provider.api_key_env);
  read(tree, "provider.timeout_ms", c.provider.timeout_ms);
  read(tree, "provider.max_retries", c.provider.max_retries);
  read(tree, "provider.rate_capacity", c.provider.rate_capacity);
  read(tree, "provider.rate_refill_per_s", c.provider.rate_refill_per_s);
  read(tree, "provider.mock_latency_s", c.mock_latency_s);

  std::string kb, templates;
  read(tree, "assets.knowledge_base", kb);
  read(tree, "assets.templates_dir", templates);
  c.knowledge_base_path = resolve(base_dir, kb);
  c.templates_dir = resolve(base_dir, templates);

  read(tree, "replay.ids_seconds", c.replay_ids_s);

  c.validate();
  return c;
}

PipelineConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::IoError, "cannot open " + path.string());
  return parse_config(in, path.parent_path());
}

std::string dump_config(const PipelineConfig& c) {
  std::string externals;
  for (std::size_t i = 0; i < c.external_models.size(); ++i) {
    externals += (i ? ", " : "") + c.external_models[i];
  }
  return fmt::format(
      "[gateway]\nnode_name = {}\ntau_alert = {}\nreasoning_mode = {}\nfew_shot_k = {}\n"
      "memory_capacity = {}\nqueue_capacity = {}\nmitigation_sink = {}\nexternal_models = {}\n\n"
      "[constraints]\nt_max_s = {}\ne_budget_j = {}\ngamma_min = {}\n\n"
      "[baseline]\ncpu_percent = {}\nmemory_mb = {}\nlatency_ms = {}\nenergy_j = {}\n"
      "anomaly_score = {}\n\n"
      "[power]\nidle_w = {}\nmax_w = {}\n\n"
      "[link]\nuplink_bps = {}\nrtt_s = {}\n\n"
      "[provider]\nid = {}\ndisplay_name = {}\nendpoint = {}\napi_key_env = {}\n"
      "timeout_ms = {}\nmax_retries = {}\nrate_capacity = {}\nrate_refill_per_s = {}\n"
      "mock_latency_s = {}\n\n"
      "[assets]\nknowledge_base = {}\ntemplates_dir = {}\n\n"
      "[replay]\nids_seconds = {}\n",
      c.node_name, c.tau_alert, to_string(c.reasoning_mode), c.few_shot_k, c.memory_capacity,
      c.queue_capacity, c.mitigation_sink == SinkKind::Command ? "command" : "log", externals,
      c.constraints.t_max_s, c.constraints.e_budget_j, c.constraints.gamma_min,
      c.baseline.values[0], c.baseline.values[1], c.baseline.values[2], c.baseline.values[3],
      c.baseline.values[4], c.power.idle_w, c.power.max_w, c.uplink_bps, c.rtt_s,
      c.provider.provider_id, c.provider.display_name, c.provider.endpoint,
      c.provider.api_key_env, c.provider.timeout_ms, c.provider.max_retries,
      c.provider.rate_capacity, c.provider.rate_refill_per_s, c.mock_latency_s,
      c.knowledge_base_path.string(), c.templates_dir.string(), c.replay_ids_s);
}

}  // namespace edgeids
