#include "doctest.h"

#include <sstream>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "json.hpp"

#include "edgeids/bench.hpp"
#include "edgeids/error.hpp"
#include "edgeids/pipeline.hpp"
#include "golden.hpp"

using namespace edgeids;

namespace {

const std::vector<std::string> kModels = {"A", "B", "C"};

// Three externally scored models, one session per entry.
ScoreScript script(const std::vector<std::pair<std::string, std::vector<double>>>& sessions,
                   const std::string& label = "brute force") {
  nlohmann::json doc;
  for (const auto& [id, scores] : sessions) {
    for (std::size_t m = 0; m < scores.size(); ++m) {
      doc["sessions"][id]["models"][kModels[m]] = {{"label", label}, {"score", scores[m]}};
    }
    doc["sessions"][id]["t_ids_s"] = 0.01;
  }
  return ScoreScript::from_json(doc.dump());
}

FlowRecord record(const std::string& session, std::int64_t offset_ms = 0) {
  FlowRecord r = canned_runtime_record();
  r.session_id = session;
  r.timestamp_ms += offset_ms;
  return r;
}

class FailingSink final : public MitigationSink {
 public:
  void emit(const std::string&, const MitigationAction&) override {
    throw Error(Errc::SinkUnavailable, "firewall socket closed");
  }
};

class RecordingSink final : public MitigationSink {
 public:
  void emit(const std::string& alert, const MitigationAction& action) override {
    emitted.emplace_back(alert, action);
  }
  std::vector<std::pair<std::string, MitigationAction>> emitted;
};

struct Harness {
  explicit Harness(ScoreScript s) : scores(std::move(s)) {
    ScriptedMetricsSource::Entry e;
    e.reading = {47.6, 372, 48.2, 21.7};
    e.power_w = 18.1;
    metrics.set_timeline({e});
  }

  Pipeline make(MitigationSink* sink_override = nullptr) {
    dispatcher = std::make_unique<MitigationDispatcher>(sink_override ? *sink_override : sink);
    PipelineServices s;
    s.metrics = &metrics;
    s.provider = &mock;
    s.limiter = &limiter;
    s.llm_clock = &clock;
    s.dispatcher = dispatcher.get();
    s.scores = &scores;
    return Pipeline(cfg, ModelBundle{}, s);
  }

  PipelineConfig cfg;
  ScoreScript scores;
  ManualClock clock;
  ScriptedMetricsSource metrics;
  MockProvider mock{&clock};
  RateLimiter limiter{1e6, 1e6, clock};
  RecordingSink sink;
  std::unique_ptr<MitigationDispatcher> dispatcher;
};

const AlertRecord& as_alert(const WindowOutcome& o) {
  REQUIRE(std::holds_alternative<AlertRecord>(o));
  return std::get<AlertRecord>(o);
}

void check_consistency(const AlertRecord& a, MetricsSource& metrics) {
  const auto& l = a.latency;
  CHECK(std::abs(l.t_total_s - (l.t_ids_s + l.t_tx_s + l.t_llm_s)) <= 1e-9);
  std::vector<double> trace(energy_sample_count(l.t_total_s));
  for (std::size_t i = 0; i < trace.size(); ++i) {
    trace[i] = metrics.power_watts(a.timestamp_ms + static_cast<std::int64_t>(i) * 10);
  }
  CHECK(std::abs(a.energy_j - integrate_energy(trace)) <= 1e-9);
  if (a.validation && a.validation->accepted) CHECK(a.response->confidence >= 0.60);
}

}  // namespace

TEST_CASE("golden runtime-log window") {
  const ReplayInputs in = test::golden_inputs();
  std::ostringstream text, jsonl, sink;
  const auto result = run_replay(in, {&text, &jsonl, &sink});
  CHECK(text.str() == test::read_text(test::golden_dir() / "expected.log"));
  CHECK(result.llm_calls == 1);
  REQUIRE(result.outcomes.size() == 1);

  const AlertRecord& a = as_alert(result.outcomes[0]);
  CHECK(a.session_id == "7492");
  CHECK(a.consensus.agreeing == 6);
  CHECK(a.consensus.total == 6);
  CHECK(a.consensus.label == ClassLabel::BruteForce);
  CHECK(fmt::format("{:.2f}", a.anomaly_score) == "0.93");
  CHECK(a.final.label == ClassLabel::BruteForce);
  CHECK(a.final.confidence == 0.95);
  CHECK(a.final.severity == Severity::Critical);
  REQUIRE(a.final.mitigations.size() == 3);
  CHECK(a.final.mitigations[0].kind == MitigationKind::BlockIp);
  CHECK(a.final.mitigations[0].address == "203.0.113.45");
  CHECK(a.final.mitigations[1].kind == MitigationKind::RateLimitAuth);
  CHECK(a.final.mitigations[2].kind == MitigationKind::EnforceMfa);
  CHECK(a.latency.t_total_s == doctest::Approx(1.32).epsilon(1e-9));
  CHECK(fmt::format("{:.1f}", a.energy_j) == "23.9");
  CHECK(a.verdict.compliant());
  CHECK(a.flags.empty());
  CHECK(a.dispatched == 3);
  CHECK(a.prompt_bytes <= kPromptByteBudget);

  // Sink output: three actions in response order.
  std::istringstream lines(sink.str());
  std::vector<std::string> actions;
  for (std::string line; std::getline(lines, line);) {
    actions.push_back(nlohmann::json::parse(line).at("action").get<std::string>());
  }
  CHECK(actions == std::vector<std::string>{"block_ip", "rate_limit_auth", "enforce_mfa"});

  const auto doc = nlohmann::json::parse(jsonl.str());
  CHECK(doc.at("session_id") == "7492");
  CHECK(doc.at("prompt").at("digest").get<std::string>().size() == 64);

  // Identical inputs render identically.
  std::ostringstream again;
  run_replay(in, {&again});
  CHECK(again.str() == text.str());
}

TEST_CASE("threshold gate") {
  Harness h(script({{"low", {0.10, 0.10, 0.10}}, {"edge", {0.70, 0.70, 0.70}},
                    {"below", {0.69, 0.70, 0.70}}}));
  Pipeline p = h.make();
  const auto low = p.process_window(record("low"));
  CHECK(std::holds_alternative<BenignLogged>(low));
  CHECK(h.mock.calls() == 0);
  CHECK(render_log(low).find("-> benign") != std::string::npos);
  CHECK(render_log(low).find('\n') == render_log(low).size() - 1);

  CHECK(std::holds_alternative<AlertRecord>(p.process_window(record("edge"))));
  CHECK(h.mock.calls() == 1);
  CHECK(std::holds_alternative<BenignLogged>(p.process_window(record("below"))));
  CHECK(h.mock.calls() == 1);
}

TEST_CASE("degraded mode on provider timeout") {
  Harness h(script({{"s", {0.9, 0.9, 0.9}}}));
  h.cfg.provider.timeout_ms = 500;  // mock answers in 0.84 s
  Pipeline p = h.make();
  const AlertRecord a = as_alert(p.process_window(record("s")));
  CHECK_FALSE(a.response.has_value());
  CHECK(a.flags == std::vector<std::string>{"llm_unavailable"});
  CHECK(a.failure.rfind("Timeout", 0) == 0);
  CHECK(a.final.label == ClassLabel::BruteForce);
  CHECK(a.final.severity == Severity::Warning);
  CHECK(a.final.confidence == doctest::Approx(0.9));
  CHECK_FALSE(a.final.mitigations.empty());
  CHECK(a.latency.t_llm_s == doctest::Approx(1.0));  // two 0.5 s attempts
  check_consistency(a, h.metrics);
  CHECK(render_log(WindowOutcome{a}).find("=> LLM unavailable") != std::string::npos);
}

TEST_CASE("rejected response") {
  Harness h(script({{"s", {0.9, 0.9, 0.9}}}));
  h.mock.set_responder([](ClassLabel label, ReasoningMode) {
    LlmResponse r = MockProvider::canned(label, ReasoningMode::ZeroShot);
    r.confidence = 0.55;
    return r;
  });
  Pipeline p = h.make();
  const AlertRecord a = as_alert(p.process_window(record("s")));
  REQUIRE(a.validation.has_value());
  CHECK_FALSE(a.validation->accepted);
  CHECK(a.final.severity == Severity::Warning);
  CHECK(a.final.confidence == doctest::Approx(0.9));
  CHECK(a.verdict.violations == std::vector<std::string>{"confidence"});
  const std::string log = render_log(WindowOutcome{a});
  CHECK(log.find("-> Rejected (confidence 0.55 < 0.60)\n") != std::string::npos);
  CHECK(log.find("llm_rejected") != std::string::npos);
}

TEST_CASE("mitigation dispatch") {
  RecordingSink sink;
  MitigationDispatcher d(sink);
  const auto actions = bind_offender(default_mitigations(ClassLabel::BruteForce), "203.0.113.45");
  CHECK(dispatch_mitigations("a@1", {}, d) == 0);
  CHECK(dispatch_mitigations("a@1", actions, d) == 2);
  CHECK(dispatch_mitigations("a@1", actions, d) == 0);
  CHECK(dispatch_mitigations("b@2", actions, d) == 2);
  REQUIRE(sink.emitted.size() == 4);
  CHECK(sink.emitted[0].second.kind == MitigationKind::BlockIp);
  CHECK(sink.emitted[1].second.kind == MitigationKind::RateLimitAuth);

  std::ostringstream out;
  CommandSink cmd(out);
  cmd.emit("a@1", actions[0]);
  CHECK(out.str() == "# alert a@1\niptables -I INPUT -s 203.0.113.45 -j DROP\n");
}

TEST_CASE("sink failure keeps the actions") {
  Harness h(script({{"s", {0.9, 0.9, 0.9}}}));
  FailingSink failing;
  Pipeline p = h.make(&failing);
  const AlertRecord a = as_alert(p.process_window(record("s")));
  CHECK(a.dispatched == 0);
  CHECK(a.dispatch_error.find("SinkUnavailable") != std::string::npos);
  CHECK(a.final.mitigations.size() == 3);
  CHECK(render_log(WindowOutcome{a}).find("-> Mitigation dispatch failed") != std::string::npos);
}

TEST_CASE("property: selective invocation, ordering and accounting over a stream") {
  Rng rng(71);
  std::vector<std::pair<std::string, std::vector<double>>> sessions;
  std::vector<FlowRecord> records;
  std::size_t expected_alerts = 0;
  for (int i = 0; i < 120; ++i) {
    const std::string id = "w" + std::to_string(i);
    std::vector<double> s{rng.uniform01(), rng.uniform01(), rng.uniform01()};
    const std::vector<double> scores = s;
    if (aggregate_scores(scores) >= kDefaultTauAlert) ++expected_alerts;
    sessions.emplace_back(id, s);
    records.push_back(record(id, i * 1000));
  }
  Harness h(script(sessions));
  Pipeline p = h.make();
  std::vector<std::string> seen;
  const auto outcomes = run_streaming(p, records, 2, [&](const WindowOutcome& o) {
    seen.push_back(std::visit([](const auto& r) { return r.session_id; }, o));
  });
  REQUIRE(outcomes.size() == records.size());
  std::size_t alerts = 0;
  for (std::size_t i = 0; i < outcomes.size(); ++i) {
    CHECK(seen[i] == records[i].session_id);
    if (const auto* a = std::get_if<AlertRecord>(&outcomes[i])) {
      ++alerts;
      check_consistency(*a, h.metrics);
    }
  }
  CHECK(alerts == expected_alerts);
  CHECK(h.mock.calls() == expected_alerts);

  // The streamed run renders exactly like a sequential one.
  Harness seq(script(sessions));
  Pipeline q = seq.make();
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto o = q.process_window(records[i]);
    std::string a = render_log(o), b = render_log(outcomes[i]);
    CHECK(a == b);
  }
}

TEST_CASE("errors in the ML stage propagate") {
  Harness h(script({{"known", {0.9, 0.9, 0.9}}}));
  Pipeline p = h.make();
  const std::vector<FlowRecord> records{record("known"), record("unknown")};
  try {
    run_streaming(p, records, 1);
    FAIL("expected UntrainedModel");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::UntrainedModel);
  }
}

TEST_CASE("config and service validation") {
  Harness h(script({{"s", {0.9}}}));
  h.cfg.tau_alert = 1.0;
  CHECK_THROWS_AS(h.make(), Error);
  h.cfg.tau_alert = 0.7;
  PipelineServices none;
  CHECK_THROWS_AS(Pipeline(h.cfg, ModelBundle{}, none), Error);
}

TEST_CASE("timestamps") {
  CHECK(format_timestamp(1750860526000) == "2025-06-25 14:08:46");
  CHECK(format_timestamp(0) == "1970-01-01 00:00:00");
}

TEST_CASE("score script round trip") {
  const auto s = ScoreScript::load(test::golden_dir() / "scores.json");
  const auto back = ScoreScript::from_json(s.to_json());
  CHECK(back.model_order == s.model_order);
  CHECK(back.to_json() == s.to_json());
  REQUIRE(s.find("7492", "RF") != nullptr);
  CHECK(s.find("7492", "RF")->score == 0.94);
  CHECK(s.find("7492", "missing") == nullptr);
  CHECK(s.find("0") == nullptr);
}
