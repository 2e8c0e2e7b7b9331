#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <vector>

#include "edgeids/llm_client.hpp"
#include "edgeids/pipeline.hpp"
#include "edgeids/telemetry.hpp"

namespace edgeids {

struct ReplayInputs {
  PipelineConfig config;
  std::vector<FlowRecord> flows;
  std::optional<ScoreScript> scores;
  ScriptedMetricsSource::Entry default_reading;  // used when no timeline is given
  std::vector<ScriptedMetricsSource::Entry> telemetry;
  ModelBundle bundle;  // may be empty when scores name every model
  // Mock only: overrides the canned reply / mutates the echo.
  MockProvider::Responder responder;
  MockProvider::Tamper tamper;
};

struct ReplayStreams {
  std::ostream* text = nullptr;         // human-readable log
  std::ostream* jsonl = nullptr;        // one JSON object per window
  std::ostream* mitigations = nullptr;  // sink output; discarded when null
};

struct ReplayResult {
  std::vector<WindowOutcome> outcomes;
  std::uint64_t llm_calls = 0;  // mock provider only
  std::size_t alerts = 0;
};

// Replays recorded flows through the pipeline on a manual clock that follows
// the record timestamps. With the mock provider the run is deterministic
// given deterministic t_ids (scripted or config.replay_ids_s >= 0).
ReplayResult run_replay(const ReplayInputs& inputs, const ReplayStreams& streams = {});

}  // namespace edgeids
