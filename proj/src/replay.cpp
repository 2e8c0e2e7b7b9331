#include "edgeids/replay.hpp"

#include <memory>
#include <ostream>
#include <sstream>

namespace edgeids {

ReplayResult run_replay(const ReplayInputs& in, const ReplayStreams& streams) {
  const PipelineConfig& cfg = in.config;
  cfg.validate();

  std::vector<ScriptedMetricsSource::Entry> timeline = in.telemetry;
  if (timeline.empty()) timeline.push_back(in.default_reading);
  ScriptedMetricsSource metrics(std::move(timeline));

  ManualClock replay_clock;
  SteadyClock steady;
  RateLimiter limiter(cfg.provider.rate_capacity, cfg.provider.rate_refill_per_s, replay_clock);

  std::unique_ptr<Provider> provider;
  MockProvider* mock = nullptr;
  if (cfg.provider.provider_id == "http") {
    provider = std::make_unique<HttpProvider>(cfg.provider);
  } else {
    MockProvider::Options options;
    options.latency_s = {cfg.mock_latency_s, cfg.mock_latency_s, cfg.mock_latency_s};
    auto owned = std::make_unique<MockProvider>(&replay_clock, options);
    if (in.responder) owned->set_responder(in.responder);
    if (in.tamper) owned->set_tamper(in.tamper);
    mock = owned.get();
    provider = std::move(owned);
  }

  std::ostringstream discarded;
  std::ostream& sink_stream = streams.mitigations ? *streams.mitigations : discarded;
  std::unique_ptr<MitigationSink> sink;
  if (cfg.mitigation_sink == SinkKind::Command) {
    sink = std::make_unique<CommandSink>(sink_stream);
  } else {
    sink = std::make_unique<LogSink>(sink_stream);
  }
  MitigationDispatcher dispatcher(*sink);
  EventLog log(streams.text, streams.jsonl);

  PipelineServices services;
  services.metrics = &metrics;
  services.provider = provider.get();
  services.limiter = &limiter;
  services.llm_clock = mock ? static_cast<const Clock*>(&replay_clock) : &steady;
  services.replay_clock = &replay_clock;
  services.dispatcher = &dispatcher;
  services.scores = in.scores ? &*in.scores : nullptr;
  services.log = &log;

  Pipeline pipeline(cfg, in.bundle, services);
  ReplayResult result;
  result.outcomes = run_streaming(pipeline, in.flows, cfg.queue_capacity);
  for (const auto& o : result.outcomes) {
    if (std::holds_alternative<AlertRecord>(o)) ++result.alerts;
  }
  if (mock) result.llm_calls = mock->calls();
  return result;
}

}  // namespace edgeids
