#include "edgeids/bench.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cmath>
#include <exception>
#include <fstream>
#include <istream>
#include <mutex>
#include <numeric>
#include <ostream>
#include <set>
#include <sstream>
#include <thread>

#include <fmt/format.h>

#include "json.hpp"

#include "edgeids/error.hpp"

namespace edgeids {

// ---------------------------------------------------------------------------
// Labels

std::string LabelMap::key(std::string_view fine) {
  std::string out;
  bool pending_space = false;
  for (char ch : fine) {
    const auto c = static_cast<unsigned char>(ch);
    if (std::isalnum(c)) {
      if (pending_space && !out.empty()) out.push_back(' ');
      pending_space = false;
      out.push_back(static_cast<char>(std::tolower(c)));
    } else {
      pending_space = true;
    }
  }
  return out;
}

LabelMap LabelMap::cicids2017() {
  LabelMap m;
  m.set("BENIGN", ClassLabel::Benign);
  for (const char* dos : {"DoS Hulk", "DoS GoldenEye", "DoS Slowloris", "DoS Slowhttptest"}) {
    m.set(dos, ClassLabel::DoS);
  }
  m.set("DDoS", ClassLabel::DDoS);
  for (const char* bf : {"FTP-Patator", "SSH-Patator", "Web Attack & Brute Force"}) {
    m.set(bf, ClassLabel::BruteForce);
  }
  m.set("Port Scan", ClassLabel::PortScan);
  m.set("PortScan", ClassLabel::PortScan);
  for (const char* other : {"Bot", "Web Attack & XSS", "Infiltration", "Web Attack & SQL Injection",
                            "Heartbleed"}) {
    m.set(other, ClassLabel::Other);
  }
  return m;
}

void LabelMap::set(std::string_view fine, ClassLabel coarse) { entries_[key(fine)] = coarse; }

std::optional<ClassLabel> LabelMap::lookup(std::string_view fine) const {
  const auto it = entries_.find(key(fine));
  if (it != entries_.end()) return it->second;
  return parse_label(fine);
}

// ---------------------------------------------------------------------------
// Datasets

std::vector<LabeledVector> Dataset::vectors() const {
  std::vector<LabeledVector> out;
  out.reserve(records.size());
  for (std::size_t i = 0; i < records.size(); ++i) {
    out.push_back(LabeledVector{extract_features(records[i]), labels[i]});
  }
  return out;
}

std::array<std::size_t, kClassCount> Dataset::class_counts() const {
  std::array<std::size_t, kClassCount> counts{};
  for (auto label : labels) ++counts[index_of(label)];
  return counts;
}

namespace {

std::array<std::vector<std::size_t>, kClassCount> indices_by_class(const Dataset& data) {
  std::array<std::vector<std::size_t>, kClassCount> by_class;
  for (std::size_t i = 0; i < data.size(); ++i) by_class[index_of(data.labels[i])].push_back(i);
  return by_class;
}

void shuffle(std::vector<std::size_t>& v, Rng& rng) {
  for (std::size_t i = v.size(); i > 1; --i) {
    std::swap(v[i - 1], v[rng.uniform_index(i)]);
  }
}

Dataset take(const Dataset& data, const std::vector<bool>& keep, bool value) {
  Dataset out;
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (keep[i] != value) continue;
    out.records.push_back(data.records[i]);
    out.labels.push_back(data.labels[i]);
  }
  return out;
}

// Marks round(n * fraction) rows of each class, chosen by a per-class shuffle.
std::vector<bool> stratified_mask(const Dataset& data, double fraction, std::uint64_t seed) {
  std::vector<bool> mask(data.size(), false);
  const auto by_class = indices_by_class(data);
  for (std::size_t c = 0; c < kClassCount; ++c) {
    auto idx = by_class[c];
    const auto m = static_cast<std::size_t>(std::llround(static_cast<double>(idx.size()) * fraction));
    Rng rng(mix_seed(seed, c));
    shuffle(idx, rng);
    for (std::size_t i = 0; i < std::min(m, idx.size()); ++i) mask[idx[i]] = true;
  }
  return mask;
}

}  // namespace

Dataset stratified_subsample(const Dataset& data, double fraction, std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction <= 1.0)) {
    throw Error(Errc::InvalidArgument, "subsample fraction must lie in (0, 1]");
  }
  if (fraction == 1.0) return data;
  return take(data, stratified_mask(data, fraction, seed), true);
}

std::pair<Dataset, Dataset> stratified_split(const Dataset& data, double test_fraction,
                                             std::uint64_t seed) {
  if (!(test_fraction >= 0.0 && test_fraction < 1.0)) {
    throw Error(Errc::InvalidArgument, "test fraction must lie in [0, 1)");
  }
  const auto test = stratified_mask(data, test_fraction, seed);
  return {take(data, test, false), take(data, test, true)};
}

IngestResult ingest_dataset(std::istream& in, const LabelMap& map, double fraction,
                            std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction <= 1.0)) {
    throw Error(Errc::InvalidArgument, "subsample fraction must lie in (0, 1]");
  }
  FlowTable table = read_flow_csv(in);
  if (!table.has_label_column) throw Error(Errc::MissingLabelColumn, "dataset has no label column");

  IngestResult result;
  result.dialect = table.dialect;
  std::set<std::string> unknown;
  Dataset all;
  for (auto& record : table.records) {
    const std::string fine = record.label.value_or("");
    ++result.fine_counts[fine];
    const auto coarse = map.lookup(fine);
    if (!coarse) {
      unknown.insert(fine.empty() ? "<empty>" : fine);
      continue;
    }
    all.labels.push_back(*coarse);
    all.records.push_back(std::move(record));
  }
  if (!unknown.empty()) {
    std::string list;
    for (const auto& u : unknown) list += (list.empty() ? "" : ", ") + ("'" + u + "'");
    throw Error(Errc::UnknownLabel, "unmapped labels: " + list);
  }
  result.data = stratified_subsample(all, fraction, seed);
  return result;
}

IngestResult ingest_dataset(const std::filesystem::path& path, const LabelMap& map,
                            double fraction, std::uint64_t seed) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::IoError, "cannot open " + path.string());
  return ingest_dataset(in, map, fraction, seed);
}

// ---------------------------------------------------------------------------
// Synthetic flows

namespace {

struct Prototype {
  double duration_s;
  double fwd;
  double bwd;
  double mean_size;
  double size_cv;  // stddev / mean of packet sizes
  double iat_ms;
  std::vector<int> dst_ports;  // empty: uniform in [1, 1024]
  std::map<std::string, double> flags;
  double connections;
  double distinct_ports;
  std::map<Protocol, double> protocols;
  double failed_auth;
};

const Prototype& prototype(ClassLabel label) {
  static const std::array<Prototype, kClassCount> kPrototypes = {{
      // Benign
      {2.0, 8, 7, 600, 0.35, 180, {443, 80, 53, 8883}, {{"SYN", 1}, {"ACK", 6}, {"PSH", 2}, {"FIN", 1}},
       12, 3, {{Protocol::TCP, 8}, {Protocol::UDP, 3}}, 0},
      // DoS
      {4.9, 120, 2, 1200, 0.05, 20, {80}, {{"SYN", 40}, {"ACK", 60}}, 180, 1,
       {{Protocol::TCP, 30}}, 0},
      // DDoS
      {1.0, 300, 0, 80, 0.02, 3, {80}, {{"SYN", 300}}, 900, 1,
       {{Protocol::TCP, 50}, {Protocol::UDP, 50}}, 0},
      // BruteForce
      {4.4, 16, 0, 4200, 0.07, 610, {22, 3389, 21}, {{"SYN", 2}, {"ACK", 3}}, 230, 18,
       {{Protocol::TCP, 7}, {Protocol::UDP, 1}}, 25},
      // PortScan
      {0.05, 2, 1, 60, 0.01, 5, {}, {{"SYN", 1}, {"RST", 1}}, 400, 350, {{Protocol::TCP, 40}}, 0},
      // Other
      {3.0, 30, 25, 900, 0.3, 90, {8080, 6667}, {{"ACK", 10}, {"PSH", 5}, {"URG", 1}}, 40, 5,
       {{Protocol::TCP, 9}, {Protocol::ICMP, 2}}, 0},
  }};
  return kPrototypes[index_of(label)];
}

double noisy(Rng& rng, double value, double relative) {
  return std::max(0.0, value * (1.0 + relative * rng.normal()));
}

std::uint64_t noisy_count(Rng& rng, double value, double relative) {
  return static_cast<std::uint64_t>(std::llround(noisy(rng, value, relative)));
}

}  // namespace

FlowRecord synthesize_flow(ClassLabel label, Rng& rng, std::int64_t timestamp_ms,
                           std::string session_id) {
  const Prototype& p = prototype(label);
  constexpr double kNoise = 0.10;
  FlowRecord r;
  r.session_id = std::move(session_id);
  r.timestamp_ms = timestamp_ms;
  r.src_addr = label == ClassLabel::Benign
                   ? fmt::format("10.0.0.{}", 2 + rng.uniform_index(200))
                   : fmt::format("203.0.113.{}", 1 + rng.uniform_index(250));
  r.dst_addr = "10.0.0.1";
  r.duration_s = noisy(rng, p.duration_s, kNoise);
  r.fwd_packet_count = std::max<std::uint64_t>(1, noisy_count(rng, p.fwd, kNoise));
  r.bwd_packet_count = noisy_count(rng, p.bwd, kNoise);
  r.mean_packet_size = noisy(rng, p.mean_size, kNoise);
  const double sd = r.mean_packet_size * p.size_cv * (1.0 + kNoise * rng.normal());
  r.packet_size_variance = sd * sd;
  r.inter_arrival_mean_ms = noisy(rng, p.iat_ms, kNoise);
  r.src_port = static_cast<int>(1024 + rng.uniform_index(64512));
  r.dst_port = p.dst_ports.empty()
                   ? static_cast<int>(1 + rng.uniform_index(1024))
                   : p.dst_ports[rng.uniform_index(p.dst_ports.size())];
  r.protocol = Protocol::TCP;
  for (const auto& [flag, count] : p.flags) {
    const auto n = noisy_count(rng, count, kNoise);
    if (n > 0) r.tcp_flag_counts[flag] = n;
  }
  r.has_window_counts = true;
  r.connections_in_window = noisy_count(rng, p.connections, kNoise);
  r.distinct_dst_ports_in_window =
      std::max<std::uint64_t>(1, noisy_count(rng, p.distinct_ports, kNoise));
  r.failed_auth_count_in_window = noisy_count(rng, p.failed_auth, kNoise);
  for (const auto& [proto, count] : p.protocols) {
    const auto n = noisy_count(rng, count, kNoise);
    if (n > 0) r.protocol_counts_in_window[proto] = n;
  }
  r.label = std::string(display_name(label));
  return r;
}

Dataset synthesize_dataset(std::span<const ClassLabel> labels, std::size_t per_class,
                           std::uint64_t seed, std::int64_t start_ms) {
  Dataset out;
  Rng rng(seed);
  std::size_t seq = 0;
  for (std::size_t i = 0; i < per_class; ++i) {
    for (ClassLabel label : labels) {
      out.records.push_back(synthesize_flow(label, rng,
                                            start_ms + static_cast<std::int64_t>(seq) * 5000,
                                            fmt::format("syn-{}", seq)));
      out.labels.push_back(label);
      ++seq;
    }
  }
  return out;
}

FlowRecord canned_runtime_record() {
  FlowRecord r;
  r.session_id = "7492";
  r.timestamp_ms = 1'750'860'526'000;  // 2025-06-25 14:08:46 UTC
  r.src_addr = "203.0.113.45";
  r.dst_addr = "192.168.1.10";
  r.duration_s = 4.4;
  r.fwd_packet_count = 16;
  r.bwd_packet_count = 0;
  r.mean_packet_size = 4200.0;
  r.packet_size_variance = 86436.0;  // stddev 294
  r.inter_arrival_mean_ms = 610.0;
  r.src_port = 22;
  r.dst_port = 3389;
  r.protocol = Protocol::TCP;
  r.tcp_flag_counts = {{"SYN", 2}, {"ACK", 3}};
  r.has_window_counts = true;
  r.connections_in_window = 230;
  r.distinct_dst_ports_in_window = 18;
  r.failed_auth_count_in_window = 16;
  r.protocol_counts_in_window = {{Protocol::TCP, 7}, {Protocol::UDP, 1}};
  r.label = "SSH-Patator";
  return r;
}

ModelBundle train_default_models(const Dataset& train, std::uint64_t seed) {
  const auto raw = train.vectors();
  std::vector<FeatureVector> benign;
  for (const auto& lv : raw) {
    if (lv.y == ClassLabel::Benign) benign.push_back(lv.x);
  }
  if (benign.size() < 2) {
    benign.clear();
    for (const auto& lv : raw) benign.push_back(lv.x);
  }
  ModelBundle bundle;
  bundle.stats = fit_normalization(benign);
  std::vector<LabeledVector> z;
  z.reserve(raw.size());
  for (const auto& lv : raw) z.push_back({normalize(lv.x, bundle.stats), lv.y});

  ForestOptions forest;
  forest.seed = seed;
  bundle.models.push_back(train_decision_tree(z, 8, 1, "DT"));
  bundle.models.push_back(make_knn(z, std::min<std::size_t>(5, z.size()), "KNN"));
  bundle.models.push_back(train_random_forest(z, forest, "RF"));
  return bundle;
}

// ---------------------------------------------------------------------------
// Metrics

ClassificationMetrics classification_metrics(std::span<const ClassLabel> predicted,
                                             std::span<const ClassLabel> truth) {
  if (predicted.size() != truth.size()) {
    throw Error(Errc::LengthMismatch, fmt::format("{} predictions for {} labels", predicted.size(),
                                                  truth.size()));
  }
  if (truth.empty()) throw Error(Errc::EmptyList, "no labels");
  std::array<std::size_t, kClassCount> tp{}, fp{}, fn{};
  std::size_t correct = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const auto p = index_of(predicted[i]);
    const auto t = index_of(truth[i]);
    if (p == t) {
      ++tp[t];
      ++correct;
    } else {
      ++fp[p];
      ++fn[t];
    }
  }
  ClassificationMetrics m;
  m.accuracy = static_cast<double>(correct) / static_cast<double>(truth.size());
  std::size_t classes = 0;
  for (std::size_t c = 0; c < kClassCount; ++c) {
    if (tp[c] + fp[c] + fn[c] == 0) continue;
    ++classes;
    const double t = static_cast<double>(tp[c]);
    if (tp[c] + fp[c] > 0) m.precision += t / static_cast<double>(tp[c] + fp[c]);
    if (tp[c] + fn[c] > 0) m.recall += t / static_cast<double>(tp[c] + fn[c]);
    m.f1 += 2.0 * t / static_cast<double>(2 * tp[c] + fp[c] + fn[c]);
  }
  m.precision /= static_cast<double>(classes);
  m.recall /= static_cast<double>(classes);
  m.f1 /= static_cast<double>(classes);
  return m;
}

double macro_f1(std::span<const ClassLabel> predicted, std::span<const ClassLabel> truth) {
  return classification_metrics(predicted, truth).f1;
}

double compute_delta_f1(std::span<const ClassLabel> before, std::span<const ClassLabel> after,
                        std::span<const ClassLabel> truth) {
  if (before.size() != after.size()) {
    throw Error(Errc::LengthMismatch, "before and after sequences differ in length");
  }
  return macro_f1(after, truth) - macro_f1(before, truth);
}

// ---------------------------------------------------------------------------
// Scenarios

std::string_view scenario_name(ClassLabel attack) noexcept {
  switch (attack) {
    case ClassLabel::DoS: return "dos";
    case ClassLabel::DDoS: return "ddos";
    case ClassLabel::BruteForce: return "brute-force";
    case ClassLabel::PortScan: return "port-scan";
    case ClassLabel::Other: return "other";
    case ClassLabel::Benign: break;
  }
  return "benign";
}

std::optional<ClassLabel> parse_scenario(std::string_view text) {
  const auto label = parse_label(text);
  if (!label || *label == ClassLabel::Benign) return std::nullopt;
  return label;
}

void ScenarioSpec::validate() const {
  if (attack == ClassLabel::Benign) throw Error(Errc::InvalidArgument, "scenario needs an attack");
  if (trial_count < 2) throw Error(Errc::InvalidArgument, "trial_count must be >= 2");
  if (windows_per_trial == 0) throw Error(Errc::EmptyTrial, "a trial needs at least one window");
  if (!(attack_fraction >= 0.0 && attack_fraction <= 1.0)) {
    throw Error(Errc::InvalidArgument, "attack_fraction must lie in [0, 1]");
  }
  if (modes.empty()) throw Error(Errc::InvalidArgument, "no reasoning modes");
}

std::vector<ScriptedMetricsSource::Entry> scenario_telemetry(ClassLabel attack,
                                                             std::span<const FlowRecord> windows,
                                                             std::uint64_t seed,
                                                             const PowerModel& power) {
  // Gateway load while the attack runs: CPU %, memory MB, latency ms, energy J.
  struct Load {
    double cpu, memory, latency, energy;
  };
  static const std::array<Load, kClassCount> kLoad = {{
      {22.0, 340.0, 18.0, 9.0},   // Benign
      {62.0, 395.0, 49.0, 27.0},  // DoS
      {71.0, 410.0, 52.0, 31.0},  // DDoS
      {47.6, 372.0, 48.2, 21.7},  // BruteForce
      {39.0, 360.0, 31.0, 16.0},  // PortScan
      {44.0, 365.0, 35.0, 19.0},  // Other
  }};
  const Load& load = kLoad[index_of(attack)];
  Rng rng(mix_seed(seed, 0x7e1e));
  std::vector<ScriptedMetricsSource::Entry> timeline;
  timeline.reserve(windows.size());
  for (const auto& w : windows) {
    ScriptedMetricsSource::Entry e;
    e.t_ms = w.timestamp_ms;
    e.reading.cpu_percent = std::clamp(load.cpu + 2.0 * rng.normal(), 0.0, 100.0);
    e.reading.memory_mb = std::max(0.0, load.memory + 6.0 * rng.normal());
    e.reading.latency_ms = std::max(0.0, load.latency + 3.0 * rng.normal());
    e.reading.energy_j = std::max(0.0, load.energy + 1.0 * rng.normal());
    e.power_w = power.watts(e.reading.cpu_percent);
    timeline.push_back(e);
  }
  return timeline;
}

namespace {

constexpr std::int64_t kTrialStartMs = 1'750'000'000'000;

std::vector<std::pair<FlowRecord, ClassLabel>> trial_windows(const ScenarioSpec& spec,
                                                             std::size_t trial) {
  Rng rng(mix_seed(spec.seed, trial, 0x5eed));
  std::array<std::vector<std::size_t>, kClassCount> pool_index;
  if (spec.pool) pool_index = indices_by_class(*spec.pool);

  std::vector<std::pair<FlowRecord, ClassLabel>> windows;
  windows.reserve(spec.windows_per_trial);
  for (std::size_t w = 0; w < spec.windows_per_trial; ++w) {
    const ClassLabel truth =
        rng.uniform01() < spec.attack_fraction ? spec.attack : ClassLabel::Benign;
    const auto ts = kTrialStartMs + static_cast<std::int64_t>(w) * 5000;
    std::string session = fmt::format("t{}-w{}", trial, w);
    FlowRecord record;
    const auto& candidates = pool_index[index_of(truth)];
    if (spec.pool && !candidates.empty()) {
      record = spec.pool->records[candidates[rng.uniform_index(candidates.size())]];
      record.timestamp_ms = ts;
      record.session_id = std::move(session);
    } else {
      record = synthesize_flow(truth, rng, ts, std::move(session));
    }
    windows.emplace_back(std::move(record), truth);
  }
  return windows;
}

TrialRow run_trial(const ScenarioSpec& spec, const PipelineConfig& base,
                   const ModelBundle& models, ReasoningMode mode, std::size_t trial) {
  const auto windows = trial_windows(spec, trial);
  std::vector<FlowRecord> records;
  records.reserve(windows.size());
  for (const auto& w : windows) records.push_back(w.first);

  const std::uint64_t trial_seed = mix_seed(spec.seed, trial);
  ScriptedMetricsSource metrics(scenario_telemetry(spec.attack, records, trial_seed, base.power));

  PipelineConfig cfg = base;
  cfg.reasoning_mode = mode;
  if (cfg.replay_ids_s < 0.0) cfg.replay_ids_s = 0.012;

  ManualClock replay_clock;
  SteadyClock steady;
  RateLimiter limiter(cfg.provider.rate_capacity, cfg.provider.rate_refill_per_s, replay_clock);

  ClassLabel current_truth = ClassLabel::Benign;
  std::size_t current_window = 0;
  std::unique_ptr<Provider> provider;
  MockProvider* mock = nullptr;
  if (cfg.provider.provider_id == "http") {
    provider = std::make_unique<HttpProvider>(cfg.provider);
  } else {
    MockProvider::Options options;
    options.latency_s = {cfg.mock_latency_s, cfg.mock_latency_s * 1.10,
                         cfg.mock_latency_s * 1.25};
    options.jitter_s = 0.05;
    options.jitter_seed = mix_seed(trial_seed, static_cast<std::uint64_t>(mode));
    auto owned = std::make_unique<MockProvider>(&replay_clock, options);
    mock = owned.get();
    if (spec.responder) {
      mock->set_responder([&](ClassLabel predicted, ReasoningMode m) {
        return spec.responder(predicted, m, current_truth, current_window);
      });
    }
    provider = std::move(owned);
  }

  PipelineServices services;
  services.metrics = &metrics;
  services.provider = provider.get();
  services.limiter = &limiter;
  services.replay_clock = &replay_clock;
  services.llm_clock = mock ? static_cast<const Clock*>(&replay_clock) : &steady;
  Pipeline pipeline(cfg, models, services);

  TrialRow row;
  row.scenario = std::string(scenario_name(spec.attack));
  row.mode = std::string(to_string(mode));
  row.trial = trial;
  row.windows = windows.size();

  std::vector<ClassLabel> truth, before, after;
  double latency_sum = 0.0, cpu_sum = 0.0, memory_sum = 0.0;
  std::size_t compliant = 0;
  for (std::size_t i = 0; i < windows.size(); ++i) {
    current_truth = windows[i].second;
    current_window = i;
    const WindowOutcome outcome = pipeline.process_window(windows[i].first);
    truth.push_back(current_truth);
    if (const auto* benign = std::get_if<BenignLogged>(&outcome)) {
      before.push_back(benign->consensus.label);
      after.push_back(benign->consensus.label);
      continue;
    }
    const auto& alert = std::get<AlertRecord>(outcome);
    before.push_back(alert.consensus.label);
    after.push_back(alert.final.label);
    ++row.alerts;
    if (!alert.prompt_digest.empty() && alert.latency.t_tx_s > 0.0) {
      ++row.llm_calls;
      row.bandwidth_bytes += alert.prompt_bytes;
      row.max_prompt_bytes = std::max(row.max_prompt_bytes, alert.prompt_bytes);
    }
    latency_sum += alert.latency.t_total_s;
    row.total_energy_j += alert.energy_j;
    cpu_sum += alert.telemetry.cpu_percent;
    memory_sum += alert.telemetry.memory_mb;
    if (alert.verdict.compliant()) ++compliant;
  }
  row.ml = classification_metrics(before, truth);
  row.llm = classification_metrics(after, truth);
  row.delta_f1 = row.llm.f1 - row.ml.f1;
  if (row.alerts > 0) {
    const double n = static_cast<double>(row.alerts);
    row.mean_latency_s = latency_sum / n;
    row.cpu_percent = cpu_sum / n;
    row.memory_mb = memory_sum / n;
    row.compliance_rate = static_cast<double>(compliant) / n;
  }
  if (mock) row.llm_calls = mock->calls();
  return row;
}

}  // namespace

std::vector<TrialRow> run_scenario(const ScenarioSpec& spec, const PipelineConfig& base,
                                   const ModelBundle& models) {
  spec.validate();
  const std::size_t total = spec.modes.size() * spec.trial_count;
  std::vector<TrialRow> rows(total);
  std::vector<std::exception_ptr> errors(total);

  std::size_t workers = spec.workers ? spec.workers : std::thread::hardware_concurrency();
  workers = std::clamp<std::size_t>(workers, 1, total);
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i = next++; i < total; i = next++) {
      const ReasoningMode mode = spec.modes[i / spec.trial_count];
      const std::size_t trial = i % spec.trial_count;
      try {
        rows[i] = run_trial(spec, base, models, mode, trial);
      } catch (const Error& e) {
        errors[i] = std::make_exception_ptr(
            Error(e.code(), fmt::format("trial {} ({}): {}", trial, to_string(mode), e.detail())));
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return rows;
}

// ---------------------------------------------------------------------------
// Trials CSV

namespace {

constexpr std::string_view kTrialHeader =
    "scenario,mode,trial,windows,alerts,llm_calls,accuracy_ml,precision_ml,recall_ml,f1_ml,"
    "accuracy_llm,precision_llm,recall_llm,f1_llm,delta_f1,mean_latency_s,total_energy_j,"
    "bandwidth_bytes,max_prompt_bytes,cpu_percent,memory_mb,compliance_rate";

}  // namespace

void write_trials_csv(std::ostream& out, std::span<const TrialRow> rows) {
  out << kTrialHeader << '\n';
  for (const auto& r : rows) {
    out << fmt::format("{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
                       csv_escape(r.scenario), csv_escape(r.mode), r.trial, r.windows, r.alerts,
                       r.llm_calls, r.ml.accuracy, r.ml.precision, r.ml.recall, r.ml.f1,
                       r.llm.accuracy, r.llm.precision, r.llm.recall, r.llm.f1, r.delta_f1,
                       r.mean_latency_s, r.total_energy_j, r.bandwidth_bytes, r.max_prompt_bytes,
                       r.cpu_percent, r.memory_mb, r.compliance_rate);
  }
}

std::vector<TrialRow> read_trials_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw Error(Errc::ParseError, "trials CSV is empty");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kTrialHeader) throw Error(Errc::ParseError, "line 1: unexpected trials header");

  std::vector<TrialRow> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const auto f = split_csv_line(line);
    if (f.size() != 22) {
      throw Error(Errc::ParseError, fmt::format("line {}: expected 22 fields, got {}", line_no,
                                                f.size()));
    }
    std::size_t col = 0;
    auto num = [&](std::size_t i) {
      col = i;
      std::size_t used = 0;
      const double v = std::stod(f[i], &used);
      if (used != f[i].size()) throw std::invalid_argument(f[i]);
      return v;
    };
    auto count = [&](std::size_t i) {
      const double v = num(i);
      if (v < 0 || v != std::floor(v)) throw std::invalid_argument(f[i]);
      return static_cast<std::size_t>(v);
    };
    TrialRow r;
    try {
      r.scenario = f[0];
      r.mode = f[1];
      r.trial = count(2);
      r.windows = count(3);
      r.alerts = count(4);
      r.llm_calls = count(5);
      r.ml = {num(6), num(7), num(8), num(9)};
      r.llm = {num(10), num(11), num(12), num(13)};
      r.delta_f1 = num(14);
      r.mean_latency_s = num(15);
      r.total_energy_j = num(16);
      r.bandwidth_bytes = count(17);
      r.max_prompt_bytes = count(18);
      r.cpu_percent = num(19);
      r.memory_mb = num(20);
      r.compliance_rate = num(21);
    } catch (const std::exception&) {
      throw Error(Errc::ParseError, fmt::format("line {}: column {}: cannot parse '{}'", line_no,
                                                col + 1, f[col]));
    }
    rows.push_back(std::move(r));
  }
  return rows;
}

// ---------------------------------------------------------------------------
// Report

std::string format_p_value(double p) {
  if (p < 1e-4) return "<0.0001";
  return fmt::format("{:.4f}", p);
}

Report emit_report(std::span<const TrialRow> rows) {
  if (rows.empty()) throw Error(Errc::DegenerateGroups, "no trials to report");
  struct Metric {
    const char* name;
    double (*get)(const TrialRow&);
  };
  static const std::array<Metric, 6> kMetrics = {{
      {"Memory", [](const TrialRow& r) { return r.memory_mb; }},
      {"Bandwidth", [](const TrialRow& r) { return static_cast<double>(r.bandwidth_bytes); }},
      {"CPU", [](const TrialRow& r) { return r.cpu_percent; }},
      {"Energy", [](const TrialRow& r) { return r.total_energy_j; }},
      {"Latency", [](const TrialRow& r) { return r.mean_latency_s; }},
      {"F1", [](const TrialRow& r) { return r.llm.f1; }},
  }};

  std::vector<std::string> scenarios;
  for (const auto& r : rows) {
    if (std::find(scenarios.begin(), scenarios.end(), r.scenario) == scenarios.end()) {
      scenarios.push_back(r.scenario);
    }
  }

  Report report;
  for (const auto& scenario : scenarios) {
    ReportSection section;
    section.scenario = scenario;
    std::vector<std::vector<const TrialRow*>> grouped;
    for (const auto& r : rows) {
      if (r.scenario != scenario) continue;
      auto it = std::find(section.groups.begin(), section.groups.end(), r.mode);
      if (it == section.groups.end()) {
        section.groups.push_back(r.mode);
        grouped.emplace_back();
        it = section.groups.end() - 1;
      }
      grouped[static_cast<std::size_t>(it - section.groups.begin())].push_back(&r);
    }
    if (section.groups.size() < 2) {
      throw Error(Errc::DegenerateGroups,
                  "scenario '" + scenario + "' has a single group; the report needs two or more");
    }
    for (const auto& metric : kMetrics) {
      GroupSamples samples;
      samples.labels = section.groups;
      for (const auto& group : grouped) {
        std::vector<double> xs;
        for (const auto* r : group) xs.push_back(metric.get(*r));
        samples.samples.push_back(std::move(xs));
      }
      ReportRow row;
      row.metric = metric.name;
      row.anova = one_way_anova(samples);
      const TukeyResult tukey = tukey_hsd(samples);
      row.tukey = summarize_tukey(tukey, samples);
      for (const auto& xs : samples.samples) row.group_means.push_back(mean(xs));
      section.rows.push_back(std::move(row));
    }
    for (const auto& group : grouped) {
      double compliance = 0.0, delta = 0.0;
      for (const auto* r : group) {
        compliance += r->compliance_rate;
        delta += r->delta_f1;
      }
      section.compliance_rate.push_back(compliance / static_cast<double>(group.size()));
      section.mean_delta_f1.push_back(delta / static_cast<double>(group.size()));
    }
    report.sections.push_back(std::move(section));
  }
  return report;
}

std::string Report::to_text() const {
  std::string out;
  for (const auto& s : sections) {
    out += fmt::format("Scenario: {} (groups: ", s.scenario);
    for (std::size_t i = 0; i < s.groups.size(); ++i) out += (i ? ", " : "") + s.groups[i];
    out += ")\n";
    out += fmt::format("{:<10} | {:>12} | {:>8} | {:>16} | {}\n", "Metric", "ANOVA F", "p-value",
                       "Effect Size (η²)", "Tukey Result");
    out += std::string(80, '-') + "\n";
    for (const auto& r : s.rows) {
      out += fmt::format("{:<10} | {:>12.3f} | {:>8} | {:>15.4f} | {}\n", r.metric, r.anova.f_stat,
                         format_p_value(r.anova.p_value), r.anova.eta_squared, r.tukey);
    }
    out += "Constraint compliance:";
    for (std::size_t i = 0; i < s.groups.size(); ++i) {
      out += fmt::format("{} {} {:.1f}%", i ? "," : "", s.groups[i], 100.0 * s.compliance_rate[i]);
    }
    out += "\nMean delta F1:";
    for (std::size_t i = 0; i < s.groups.size(); ++i) {
      out += fmt::format("{} {} {:+.4f}", i ? "," : "", s.groups[i], s.mean_delta_f1[i]);
    }
    out += "\n\n";
  }
  return out;
}

std::string Report::to_json() const {
  nlohmann::ordered_json doc;
  doc["scenarios"] = nlohmann::ordered_json::array();
  auto number = [](double v) -> nlohmann::ordered_json {
    if (std::isfinite(v)) return v;
    return v > 0 ? "inf" : "-inf";
  };
  for (const auto& s : sections) {
    nlohmann::ordered_json js;
    js["scenario"] = s.scenario;
    js["groups"] = s.groups;
    js["metrics"] = nlohmann::ordered_json::array();
    for (const auto& r : s.rows) {
      js["metrics"].push_back({{"metric", r.metric},
                               {"anova_f", number(r.anova.f_stat)},
                               {"p_value", r.anova.p_value},
                               {"df_between", r.anova.df_between},
                               {"df_within", r.anova.df_within},
                               {"eta_squared", r.anova.eta_squared},
                               {"tukey", r.tukey},
                               {"group_means", r.group_means}});
    }
    js["compliance_rate"] = s.compliance_rate;
    js["mean_delta_f1"] = s.mean_delta_f1;
    doc["scenarios"].push_back(std::move(js));
  }
  return doc.dump(2);
}

}  // namespace edgeids
