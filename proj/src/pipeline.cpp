#include "edgeids/pipeline.hpp"

#include <cmath>
#include <ctime>
#include <exception>
#include <fstream>
#include <ostream>
#include <sstream>
#include <thread>

#include <fmt/format.h>

#include "json.hpp"

#include "edgeids/error.hpp"

namespace edgeids {

using ordered_json = nlohmann::ordered_json;

void PipelineConfig::validate() const {
  if (!(tau_alert > 0.0 && tau_alert < 1.0)) {
    throw Error(Errc::InvalidArgument, "tau_alert must lie in (0, 1)");
  }
  constraints.validate();
  provider.validate();
  baseline.validate();
  if (!(uplink_bps > 0.0) || !(rtt_s >= 0.0)) {
    throw Error(Errc::InvalidArgument, "uplink_bps must be > 0 and rtt_s >= 0");
  }
  if (memory_capacity == 0) throw Error(Errc::InvalidArgument, "memory capacity must be > 0");
  if (!(mock_latency_s >= 0.0)) throw Error(Errc::InvalidArgument, "mock latency must be >= 0");
}

// ---------------------------------------------------------------------------

const ScoreScript::Window* ScoreScript::find(const std::string& session_id) const {
  const auto it = sessions.find(session_id);
  return it == sessions.end() ? nullptr : &it->second;
}

const ScoreScript::ModelScore* ScoreScript::find(const std::string& session_id,
                                                 const std::string& model) const {
  const Window* w = find(session_id);
  if (!w) return nullptr;
  for (const auto& [name, score] : w->models) {
    if (name == model) return &score;
  }
  return nullptr;
}

ScoreScript ScoreScript::from_json(std::string_view text) {
  ScoreScript script;
  try {
    const auto doc = ordered_json::parse(text);
    for (const auto& [session, entry] : doc.at("sessions").items()) {
      Window w;
      for (const auto& [name, m] : entry.at("models").items()) {
        const auto label = parse_label(m.at("label").get<std::string>());
        if (!label) {
          throw Error(Errc::ParseError, "session " + session + ": unknown label for " + name);
        }
        const double score = m.at("score").get<double>();
        if (!(score >= 0.0 && score <= 1.0)) {
          throw Error(Errc::ParseError, "session " + session + ": score outside [0, 1]");
        }
        w.models.emplace_back(name, ModelScore{*label, score});
        if (std::find(script.model_order.begin(), script.model_order.end(), name) ==
            script.model_order.end()) {
          script.model_order.push_back(name);
        }
      }
      if (entry.contains("t_ids_s")) w.t_ids_s = entry["t_ids_s"].get<double>();
      if (entry.contains("t_tx_s")) w.t_tx_s = entry["t_tx_s"].get<double>();
      script.sessions[session] = std::move(w);
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::ParseError, std::string("score script: ") + e.what());
  }
  return script;
}

ScoreScript ScoreScript::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::IoError, "cannot open " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return from_json(buf.str());
}

std::string ScoreScript::to_json() const {
  ordered_json doc;
  doc["sessions"] = ordered_json::object();
  for (const auto& [session, w] : sessions) {
    ordered_json entry;
    entry["models"] = ordered_json::object();
    for (const auto& [name, m] : w.models) {
      entry["models"][name] = {{"label", std::string(display_name(m.label))}, {"score", m.score}};
    }
    if (w.t_ids_s) entry["t_ids_s"] = *w.t_ids_s;
    if (w.t_tx_s) entry["t_tx_s"] = *w.t_tx_s;
    doc["sessions"][session] = std::move(entry);
  }
  return doc.dump(2);
}

// ---------------------------------------------------------------------------

std::string format_timestamp(std::int64_t epoch_ms) {
  const std::time_t secs = static_cast<std::time_t>(epoch_ms / 1000 - (epoch_ms % 1000 < 0));
  std::tm tm{};
  gmtime_r(&secs, &tm);
  return fmt::format("{:04}-{:02}-{:02} {:02}:{:02}:{:02}", tm.tm_year + 1900, tm.tm_mon + 1,
                     tm.tm_mday, tm.tm_hour, tm.tm_min, tm.tm_sec);
}

namespace {

constexpr std::size_t kRuleWidth = 66;
constexpr std::size_t kWrapWidth = 70;

// Rounded to `decimals`, shortest form ("16", "0.88", "4.2").
std::string compact(double v, int decimals) {
  const double scale = std::pow(10.0, decimals);
  double r = std::round(v * scale) / scale;
  if (r == 0.0) r = 0.0;  // no "-0"
  return fmt::format("{}", r);
}

std::string header_line(const std::string& node, std::int64_t ts) {
  return fmt::format("[Edge Node: {}]  Timestamp: {}", node, format_timestamp(ts));
}

// Greedy word wrap of a quoted paragraph: first line "   \"", then "    ".
void wrap_quoted(std::string& out, std::string_view text) {
  std::istringstream in{"\"" + std::string(text) + "\""};
  std::string word;
  std::string line = "   ";
  bool first_word = true;
  while (in >> word) {
    if (!first_word && line.size() + 1 + word.size() > kWrapWidth) {
      out += line + "\n";
      line = "    " + word;
    } else {
      if (!first_word) line += ' ';
      line += word;
    }
    first_word = false;
  }
  out += line + "\n";
}

std::string join(const std::vector<std::string>& items, std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i) out += sep;
    out += items[i];
  }
  return out;
}

ordered_json mitigations_json(std::span<const MitigationAction> actions) {
  ordered_json arr = ordered_json::array();
  for (const auto& a : actions) {
    ordered_json m;
    m["action"] = std::string(to_string(a.kind));
    if (!a.address.empty()) m["address"] = a.address;
    m["text"] = a.text;
    arr.push_back(std::move(m));
  }
  return arr;
}

}  // namespace

std::string render_log(const AlertRecord& rec) {
  const std::string rule(kRuleWidth, '=');
  std::string out;
  out += header_line(rec.node_name, rec.timestamp_ms) + "\n";
  out += rule + "\n";
  out += fmt::format("-> New traffic window detected [session_id: {}]\n", rec.session_id);
  out += "-> Feature vector extracted:\n";
  {
    std::vector<std::string> parts;
    for (double v : rec.features.values()) parts.push_back(compact(v, 2));
    out += "   x_t = [" + join(parts, ", ") + "]\n";
  }
  out += "\n-> Running predictions across ML-based IDS models...\n\n";
  for (const auto& m : rec.models) {
    out += fmt::format("[*] {:<27}-> Label: {:<13} | Score: {:.2f}\n", m.name,
                       display_name(m.label), m.score);
  }
  out += "\n";
  out += fmt::format("-> Consensus: {}/{} models classify as \"{}\"\n", rec.consensus.agreeing,
                     rec.consensus.total, display_name(rec.consensus.label));
  out += fmt::format("-> Aggregated anomaly score s_t = {:.2f} >= tau_alert = {:.2f} -> ALERT "
                     "triggered\n\n",
                     rec.anomaly_score, rec.tau_alert);

  const auto& t = rec.telemetry;
  out += "-> System metrics captured:\n";
  out += fmt::format("   CPU = {}%, Memory = {} MB, Latency = {} ms, Energy = {} J\n",
                     compact(t.cpu_percent, 1), compact(t.memory_mb, 1),
                     compact(t.latency_ms, 1), compact(t.energy_j, 1));
  out += "   Normalized telemetry vector:\n";
  {
    std::vector<std::string> parts;
    for (double v : rec.normalized.values) parts.push_back(fmt::format("{:.3f}", v));
    out += "   m_t = [" + join(parts, ", ") + "]\n\n";
  }

  out += fmt::format("-> Retrieved context for class \"{}\":\n", display_name(rec.context.label));
  wrap_quoted(out, rec.context.description);
  out += "\n-> Constructing LLM prompt with telemetry and context...\n";
  out += fmt::format("-> Sending prompt to external LLM: {}\n\n", rec.provider_name);

  if (rec.response) {
    out += fmt::format("=> LLM Response [elapsed: {:.2f} sec]\n", rec.response->elapsed_s);
    out += response_json(*rec.response, 2) + "\n";
    if (rec.validation && !rec.validation->accepted) {
      out += "-> " + rec.validation->describe() + "\n";
    }
  } else {
    out += fmt::format("=> LLM unavailable [elapsed: {:.2f} sec]: {}\n", rec.latency.t_llm_s,
                       rec.failure);
  }
  out += "\n";

  const auto& f = rec.final;
  out += "-> Final enriched classification:\n";
  out += fmt::format("   - Class      : {}\n", display_name(f.label));
  out += fmt::format("   - Confidence : {:.0f}%\n", f.confidence * 100.0);
  out += fmt::format("   - Severity   : {}\n", to_string(f.severity));
  out += fmt::format("   - Mitigation : {}\n", summarize(f.mitigations));
  if (!rec.flags.empty()) out += fmt::format("   - Flags      : {}\n", join(rec.flags, ", "));
  out += "\n";

  out += fmt::format("-> Total round-trip latency: {:.2f} s\n", rec.latency.t_total_s);
  out += fmt::format("-> Total energy consumption: {:.1f} J\n", rec.energy_j);
  if (!rec.verdict.compliant()) {
    out += "-> Constraint violations: " + join(rec.verdict.violations, ", ") + "\n";
  }
  if (rec.dispatched > 0) {
    out += "-> Mitigation instructions have been dispatched to the local firewall.\n";
  } else if (!rec.dispatch_error.empty()) {
    out += "-> Mitigation dispatch failed: " + rec.dispatch_error + "\n";
  } else if (f.mitigations.empty()) {
    out += "-> No mitigation instructions to dispatch.\n";
  } else {
    out += "-> Mitigation instructions recorded; nothing new to dispatch.\n";
  }
  out += rule + "\n";
  return out;
}

std::string render_log(const BenignLogged& rec) {
  return fmt::format("{}  session_id: {}  s_t = {:.2f} < tau_alert = {:.2f} -> benign ({}/{} "
                     "\"{}\")\n",
                     header_line(rec.node_name, rec.timestamp_ms), rec.session_id,
                     rec.anomaly_score, rec.tau_alert, rec.consensus.agreeing,
                     rec.consensus.total, display_name(rec.consensus.label));
}

std::string render_log(const WindowOutcome& outcome) {
  return std::visit([](const auto& rec) { return render_log(rec); }, outcome);
}

std::string to_json_line(const WindowOutcome& outcome) {
  ordered_json doc;
  if (const auto* b = std::get_if<BenignLogged>(&outcome)) {
    doc["event"] = "benign";
    doc["node"] = b->node_name;
    doc["session_id"] = b->session_id;
    doc["timestamp_ms"] = b->timestamp_ms;
    doc["anomaly_score"] = b->anomaly_score;
    doc["tau_alert"] = b->tau_alert;
    doc["consensus"] = {{"label", std::string(display_name(b->consensus.label))},
                        {"agreeing", b->consensus.agreeing},
                        {"total", b->consensus.total}};
    doc["t_ids_s"] = b->t_ids_s;
    return doc.dump(-1, ' ', false, nlohmann::json::error_handler_t::replace);
  }
  const auto& a = std::get<AlertRecord>(outcome);
  doc["event"] = "alert";
  doc["node"] = a.node_name;
  doc["alert_id"] = a.alert_id();
  doc["session_id"] = a.session_id;
  doc["timestamp_ms"] = a.timestamp_ms;
  doc["src_addr"] = a.src_addr;
  doc["features"] = a.features.values();
  doc["models"] = ordered_json::array();
  for (const auto& m : a.models) {
    doc["models"].push_back(
        {{"name", m.name}, {"label", std::string(display_name(m.label))}, {"score", m.score}});
  }
  doc["consensus"] = {{"label", std::string(display_name(a.consensus.label))},
                      {"agreeing", a.consensus.agreeing},
                      {"total", a.consensus.total}};
  doc["anomaly_score"] = a.anomaly_score;
  doc["tau_alert"] = a.tau_alert;
  doc["telemetry"] = {{"cpu_percent", a.telemetry.cpu_percent},
                      {"memory_mb", a.telemetry.memory_mb},
                      {"latency_ms", a.telemetry.latency_ms},
                      {"energy_j", a.telemetry.energy_j},
                      {"anomaly_score", a.telemetry.anomaly_score}};
  doc["normalized_telemetry"] = a.normalized.values;
  doc["saturated"] = a.normalized.saturated;
  doc["context"] = {{"label", std::string(display_name(a.context.label))},
                    {"description", a.context.description}};
  doc["prompt"] = {{"digest", a.prompt_digest},
                   {"bytes", a.prompt_bytes},
                   {"mode", std::string(to_string(a.mode))},
                   {"exemplars", a.exemplars_used}};
  doc["provider"] = a.provider_name;
  if (a.response) {
    doc["response"] = ordered_json::parse(response_json(*a.response, -1));
    doc["response"]["elapsed_s"] = a.response->elapsed_s;
  } else {
    doc["response"] = nullptr;
  }
  if (a.validation) doc["validation"] = a.validation->describe();
  if (!a.failure.empty()) doc["failure"] = a.failure;
  doc["final"] = {{"label", std::string(display_name(a.final.label))},
                  {"confidence", a.final.confidence},
                  {"severity", std::string(to_string(a.final.severity))},
                  {"mitigations", mitigations_json(a.final.mitigations)}};
  doc["flags"] = a.flags;
  doc["latency"] = {{"t_ids_s", a.latency.t_ids_s},
                    {"t_tx_s", a.latency.t_tx_s},
                    {"t_llm_s", a.latency.t_llm_s},
                    {"t_total_s", a.latency.t_total_s}};
  doc["energy_j"] = a.energy_j;
  doc["violations"] = a.verdict.violations;
  doc["dispatched"] = a.dispatched;
  if (!a.dispatch_error.empty()) doc["dispatch_error"] = a.dispatch_error;
  return doc.dump(-1, ' ', false, nlohmann::json::error_handler_t::replace);
}

// ---------------------------------------------------------------------------

void LogSink::emit(const std::string& alert_id, const MitigationAction& action) {
  ordered_json doc;
  doc["alert"] = alert_id;
  doc["action"] = std::string(to_string(action.kind));
  if (!action.address.empty()) doc["address"] = action.address;
  doc["text"] = action.text;
  out_ << doc.dump(-1, ' ', false, nlohmann::json::error_handler_t::replace) << '\n';
  if (!out_) throw Error(Errc::SinkUnavailable, "mitigation log stream failed");
}

void CommandSink::emit(const std::string& alert_id, const MitigationAction& action) {
  out_ << "# alert " << alert_id << '\n' << to_command(action) << '\n';
  if (!out_) throw Error(Errc::SinkUnavailable, "mitigation command stream failed");
}

std::size_t MitigationDispatcher::dispatch(const std::string& alert_id,
                                           std::span<const MitigationAction> actions) {
  std::lock_guard lock(mutex_);
  std::size_t emitted = 0;
  for (std::size_t i = 0; i < actions.size(); ++i) {
    const auto key = std::make_pair(alert_id, i);
    if (sent_.count(key)) continue;
    sink_.emit(alert_id, actions[i]);
    sent_.insert(key);
    ++emitted;
  }
  return emitted;
}

std::size_t dispatch_mitigations(const std::string& alert_id,
                                 std::span<const MitigationAction> actions,
                                 MitigationDispatcher& dispatcher) {
  return dispatcher.dispatch(alert_id, actions);
}

void EventLog::write(const WindowOutcome& outcome) {
  std::lock_guard lock(mutex_);
  if (text_) {
    *text_ << render_log(outcome);
    text_->flush();
  }
  if (jsonl_) {
    *jsonl_ << to_json_line(outcome) << '\n';
    jsonl_->flush();
  }
}

// ---------------------------------------------------------------------------

Pipeline::Pipeline(PipelineConfig config, ModelBundle bundle, PipelineServices services)
    : config_(std::move(config)),
      stats_(bundle.stats),
      has_stats_(bundle.stats.sample_count >= 2),
      models_(std::move(bundle.models)),
      services_(services),
      knowledge_(config_.knowledge_base_path.empty() ? KnowledgeBase::builtin()
                                                     : KnowledgeBase::load(config_.knowledge_base_path)),
      templates_(config_.templates_dir.empty() ? PromptTemplates::builtin()
                                               : PromptTemplates::load(config_.templates_dir)),
      memory_(config_.memory_capacity) {
  config_.validate();
  if (!services_.metrics || !services_.provider || !services_.limiter || !services_.llm_clock) {
    throw Error(Errc::InvalidArgument, "pipeline needs metrics, provider, limiter and clock");
  }
  for (const auto& name : config_.external_models) models_.push_back(make_external(name, name));
  if (models_.empty() && services_.scores) {
    for (const auto& name : services_.scores->model_order) {
      models_.push_back(make_external(name, name));
    }
  }
  if (models_.empty()) throw Error(Errc::InvalidArgument, "pipeline has no models");
}

ClassifiedWindow Pipeline::classify(const FlowRecord& record) const {
  const SteadyClock steady;
  const double start = steady.now_s();

  ClassifiedWindow w;
  w.record = record;
  w.features = extract_features(record);
  const ScoreScript::Window* scripted =
      services_.scores ? services_.scores->find(record.session_id) : nullptr;

  std::optional<FeatureVector> z;
  std::vector<double> scores;
  for (const auto& model : models_) {
    const ScoreScript::ModelScore* s =
        services_.scores ? services_.scores->find(record.session_id, model.name()) : nullptr;
    Prediction p;
    double score = 0.0;
    if (s) {
      p = make_prediction(posteriors_from_score(s->label, s->score));
      score = s->score;
    } else {
      if (model.kind() == ModelKind::External) {
        throw Error(Errc::UntrainedModel, "no scripted score for external model '" +
                                              model.name() + "' in session " + record.session_id);
      }
      if (!z) {
        if (!has_stats_) {
          throw Error(Errc::UntrainedModel, "model bundle carries no normalization statistics");
        }
        z = normalize(w.features, stats_);
      }
      p = predict(model, *z);
      score = p.anomaly_score;
    }
    scores.push_back(score);
    w.models.push_back(ModelResult{model.name(), p.label, score});
    w.predictions.push_back(std::move(p));
  }
  w.consensus = consensus(w.predictions);
  w.anomaly_score = aggregate_scores(scores);

  if (scripted && scripted->t_ids_s) {
    w.t_ids_s = *scripted->t_ids_s;
  } else if (config_.replay_ids_s >= 0.0) {
    w.t_ids_s = config_.replay_ids_s;
  } else {
    w.t_ids_s = steady.now_s() - start;
  }
  if (scripted && scripted->t_tx_s) w.scripted_t_tx_s = *scripted->t_tx_s;
  return w;
}

WindowOutcome Pipeline::finalize(ClassifiedWindow window) {
  if (services_.replay_clock) {
    // Relative to the first window so the clock keeps sub-microsecond precision.
    if (!replay_origin_ms_) replay_origin_ms_ = window.record.timestamp_ms;
    const double t = static_cast<double>(window.record.timestamp_ms - *replay_origin_ms_) / 1000.0;
    if (t > services_.replay_clock->now_s()) services_.replay_clock->set(t);
  }
  WindowOutcome outcome;
  if (window.anomaly_score < config_.tau_alert) {
    outcome = BenignLogged{config_.node_name,     window.record.session_id,
                           window.record.timestamp_ms, window.consensus,
                           window.anomaly_score,  config_.tau_alert,
                           window.t_ids_s};
  } else {
    outcome = build_alert(window);
  }
  if (services_.log) services_.log->write(outcome);
  return outcome;
}

WindowOutcome Pipeline::process_window(const FlowRecord& record) {
  return finalize(classify(record));
}

AlertRecord Pipeline::build_alert(ClassifiedWindow& w) {
  AlertRecord rec;
  rec.node_name = config_.node_name;
  rec.session_id = w.record.session_id;
  rec.timestamp_ms = w.record.timestamp_ms;
  rec.src_addr = w.record.src_addr;
  rec.features = w.features;
  rec.models = w.models;
  rec.consensus = w.consensus;
  rec.anomaly_score = w.anomaly_score;
  rec.tau_alert = config_.tau_alert;
  rec.mode = config_.reasoning_mode;
  rec.provider_name = config_.provider.display_name;

  // The snapshot records the score at its reported two-decimal precision.
  const double reported_score = std::round(w.anomaly_score * 100.0) / 100.0;
  try {
    rec.telemetry = capture(*services_.metrics, reported_score, w.record.timestamp_ms);
  } catch (const Error& e) {
    rec.telemetry = TelemetrySnapshot{};
    rec.telemetry.anomaly_score = reported_score;
    rec.telemetry.timestamp_ms = w.record.timestamp_ms;
    rec.flags.push_back("telemetry_unavailable");
  }
  rec.normalized = normalize_telemetry(rec.telemetry, config_.baseline);
  rec.context = knowledge_.lookup(suspected_attack(w.predictions));

  const Clock& clock = *services_.llm_clock;
  const double llm_start = clock.now_s();
  bool sent = false;
  try {
    std::vector<Prompt> exemplars;
    if (config_.reasoning_mode == ReasoningMode::FewShot) {
      const Prompt query =
          encode_prompt(rec.normalized, rec.context, ReasoningMode::ZeroShot, {}, templates_);
      exemplars = retrieve_similar(memory_, query, config_.few_shot_k);
    }
    const Prompt prompt = encode_prompt(rec.normalized, rec.context, config_.reasoning_mode,
                                        exemplars, templates_);
    rec.mode = prompt.mode;
    rec.prompt_digest = prompt.digest;
    rec.prompt_bytes = prompt.byte_len;
    rec.exemplars_used = prompt.exemplars_used;
    if (prompt.context_truncated) rec.flags.push_back("context_truncated");
    try {
      sent = true;
      rec.response = submit(prompt, config_.provider, *services_.limiter, *services_.provider,
                            clock);
    } catch (const Error& e) {
      if (e.code() == Errc::RateLimited) sent = false;
      throw;
    }
    memory_.add(prompt, w.record.timestamp_ms);
  } catch (const Error& e) {
    rec.failure = e.what();
    rec.flags.push_back("llm_unavailable");
  }

  const double t_llm =
      rec.response ? rec.response->elapsed_s : std::max(0.0, clock.now_s() - llm_start);
  double t_tx = 0.0;
  if (w.scripted_t_tx_s) {
    t_tx = *w.scripted_t_tx_s;
  } else if (sent) {
    t_tx = static_cast<double>(rec.prompt_bytes) * 8.0 / config_.uplink_bps + config_.rtt_s;
  }
  rec.latency = make_breakdown(w.t_ids_s, t_tx, t_llm);

  if (rec.response) {
    rec.validation = validate_response(*rec.response, config_.constraints.gamma_min);
    if (rec.validation->accepted) {
      rec.final = FinalClassification{rec.response->revised_label, rec.response->confidence,
                                      rec.response->severity,
                                      bind_offender(rec.response->mitigations, rec.src_addr)};
    } else {
      rec.flags.push_back("llm_rejected");
    }
  }
  if (!rec.validation || !rec.validation->accepted) {
    rec.final = FinalClassification{
        w.consensus.label, w.anomaly_score, Severity::Warning,
        bind_offender(default_mitigations(w.consensus.label), rec.src_addr)};
  }

  const std::size_t n = energy_sample_count(rec.latency.t_total_s);
  std::vector<double> trace(n);
  for (std::size_t i = 0; i < n; ++i) {
    trace[i] = services_.metrics->power_watts(w.record.timestamp_ms +
                                              static_cast<std::int64_t>(i) * 10);
  }
  rec.energy_j = integrate_energy(trace);

  std::optional<double> gamma;
  if (rec.response) gamma = rec.response->confidence;
  rec.verdict = check_constraints(rec.latency.t_total_s, rec.energy_j, gamma, config_.constraints);

  constexpr std::size_t kDrainWindow = 100;
  if (energy_history_.size() >= 10 && detect_energy_drain(energy_history_, rec.energy_j)) {
    rec.flags.push_back("energy_drain");
  }
  energy_history_.push_back(rec.energy_j);
  if (energy_history_.size() > kDrainWindow) energy_history_.erase(energy_history_.begin());

  if (services_.dispatcher && !rec.final.mitigations.empty()) {
    try {
      rec.dispatched = dispatch_mitigations(rec.alert_id(), rec.final.mitigations,
                                            *services_.dispatcher);
    } catch (const Error& e) {
      rec.dispatch_error = e.what();
    }
  }
  return rec;
}

// ---------------------------------------------------------------------------

std::vector<WindowOutcome> run_streaming(Pipeline& pipeline, std::span<const FlowRecord> records,
                                         std::size_t queue_capacity,
                                         const std::function<void(const WindowOutcome&)>& on_outcome) {
  using Item = std::variant<ClassifiedWindow, std::exception_ptr>;
  BoundedQueue<Item> queue(queue_capacity);
  std::atomic<bool> stop{false};

  std::thread producer([&] {
    for (const auto& record : records) {
      if (stop.load()) break;
      try {
        queue.push(pipeline.classify(record));
      } catch (...) {
        queue.push(std::current_exception());
        break;
      }
    }
    queue.close();
  });

  std::vector<WindowOutcome> outcomes;
  std::exception_ptr failure;
  while (auto item = queue.pop()) {
    if (failure) continue;  // drain so the producer can finish
    try {
      if (auto* err = std::get_if<std::exception_ptr>(&*item)) std::rethrow_exception(*err);
      outcomes.push_back(pipeline.finalize(std::move(std::get<ClassifiedWindow>(*item))));
      if (on_outcome) on_outcome(outcomes.back());
    } catch (...) {
      failure = std::current_exception();
      stop.store(true);
    }
  }
  producer.join();
  if (failure) std::rethrow_exception(failure);
  return outcomes;
}

}  // namespace edgeids
