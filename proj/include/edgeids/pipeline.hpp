#pragma once

#include <condition_variable>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "edgeids/budget.hpp"
#include "edgeids/clock.hpp"
#include "edgeids/detection.hpp"
#include "edgeids/features.hpp"
#include "edgeids/llm_client.hpp"
#include "edgeids/mitigation.hpp"
#include "edgeids/model_io.hpp"
#include "edgeids/prompt.hpp"
#include "edgeids/telemetry.hpp"

namespace edgeids {

inline constexpr double kDefaultTauAlert = 0.70;

enum class SinkKind { Log, Command };

struct PipelineConfig {
  std::string node_name = "edge-gateway";
  double tau_alert = kDefaultTauAlert;
  Constraints constraints;
  ReasoningMode reasoning_mode = ReasoningMode::ZeroShot;
  std::size_t few_shot_k = 3;
  std::size_t memory_capacity = 256;
  ProviderConfig provider;
  double mock_latency_s = 0.84;
  SinkKind mitigation_sink = SinkKind::Log;
  BaselineCapacity baseline;
  PowerModel power;
  // Uplink model for T_tx when no timing is scripted.
  double uplink_bps = 1'000'000.0;
  double rtt_s = 0.05;
  // Simulated ML-stage time used in replays when no timing is scripted; a
  // negative value means "measure with a steady clock".
  double replay_ids_s = -1.0;
  std::size_t queue_capacity = 8;
  // Names of externally scored models appended after the bundle's models.
  std::vector<std::string> external_models;
  std::filesystem::path knowledge_base_path;
  std::filesystem::path templates_dir;

  // Throws Error(InvalidArgument).
  void validate() const;
};

// Per-window scripted classifier output and stage timings, keyed by session.
// JSON: {"sessions": {"7492": {"models": {"DT": {"label": "brute force",
//   "score": 0.91}, ...}, "t_ids_s": 0.012, "t_tx_s": 0.468}}}
// Model order follows the first session that lists them.
struct ScoreScript {
  struct ModelScore {
    ClassLabel label = ClassLabel::Other;
    double score = 0.0;
  };
  struct Window {
    std::vector<std::pair<std::string, ModelScore>> models;
    std::optional<double> t_ids_s;
    std::optional<double> t_tx_s;
  };

  std::map<std::string, Window> sessions;
  std::vector<std::string> model_order;

  const Window* find(const std::string& session_id) const;
  const ModelScore* find(const std::string& session_id, const std::string& model) const;

  static ScoreScript from_json(std::string_view text);
  static ScoreScript load(const std::filesystem::path& path);
  std::string to_json() const;
};

struct ModelResult {
  std::string name;
  ClassLabel label = ClassLabel::Benign;
  double score = 0.0;
};

// Output of the ML stage for one window.
struct ClassifiedWindow {
  FlowRecord record;
  FeatureVector features;
  std::vector<Prediction> predictions;
  std::vector<ModelResult> models;
  Consensus consensus;
  double anomaly_score = 0.0;
  double t_ids_s = 0.0;
  std::optional<double> scripted_t_tx_s;
};

struct FinalClassification {
  ClassLabel label = ClassLabel::Benign;
  double confidence = 0.0;
  Severity severity = Severity::Warning;
  std::vector<MitigationAction> mitigations;
};

struct AlertRecord {
  std::string node_name;
  std::string session_id;
  std::int64_t timestamp_ms = 0;
  std::string src_addr;
  FeatureVector features;
  std::vector<ModelResult> models;
  Consensus consensus;
  double anomaly_score = 0.0;
  double tau_alert = kDefaultTauAlert;
  TelemetrySnapshot telemetry;
  NormalizedTelemetry normalized;
  AttackContext context;
  std::string prompt_digest;
  std::size_t prompt_bytes = 0;
  std::size_t exemplars_used = 0;
  ReasoningMode mode = ReasoningMode::ZeroShot;
  std::string provider_name;
  std::optional<LlmResponse> response;
  std::optional<Validation> validation;
  std::string failure;  // set when no response was obtained
  FinalClassification final;
  std::vector<std::string> flags;
  LatencyBreakdown latency;
  double energy_j = 0.0;
  Verdict verdict;
  std::size_t dispatched = 0;
  std::string dispatch_error;

  std::string alert_id() const { return session_id + "@" + std::to_string(timestamp_ms); }
};

struct BenignLogged {
  std::string node_name;
  std::string session_id;
  std::int64_t timestamp_ms = 0;
  Consensus consensus;
  double anomaly_score = 0.0;
  double tau_alert = kDefaultTauAlert;
  double t_ids_s = 0.0;
};

using WindowOutcome = std::variant<BenignLogged, AlertRecord>;

// "YYYY-MM-DD HH:MM:SS" in UTC.
std::string format_timestamp(std::int64_t epoch_ms);

std::string render_log(const AlertRecord& record);
std::string render_log(const BenignLogged& record);
std::string render_log(const WindowOutcome& outcome);
// One JSON object, no trailing newline.
std::string to_json_line(const WindowOutcome& outcome);

// Destination for mitigation actions. Throws Error(SinkUnavailable).
class MitigationSink {
 public:
  virtual ~MitigationSink() = default;
  virtual void emit(const std::string& alert_id, const MitigationAction& action) = 0;
};

// JSON line per action: {"alert": ..., "action": ..., "address": ..., "text": ...}.
class LogSink final : public MitigationSink {
 public:
  explicit LogSink(std::ostream& out) : out_(out) {}
  void emit(const std::string& alert_id, const MitigationAction& action) override;

 private:
  std::ostream& out_;
};

// One firewall command per action.
class CommandSink final : public MitigationSink {
 public:
  explicit CommandSink(std::ostream& out) : out_(out) {}
  void emit(const std::string& alert_id, const MitigationAction& action) override;

 private:
  std::ostream& out_;
};

// Emits each (alert, action) pair at most once.
class MitigationDispatcher {
 public:
  explicit MitigationDispatcher(MitigationSink& sink) : sink_(sink) {}
  // Returns the number of new emissions.
  std::size_t dispatch(const std::string& alert_id, std::span<const MitigationAction> actions);

 private:
  MitigationSink& sink_;
  std::mutex mutex_;
  std::set<std::pair<std::string, std::size_t>> sent_;
};

std::size_t dispatch_mitigations(const std::string& alert_id,
                                 std::span<const MitigationAction> actions,
                                 MitigationDispatcher& dispatcher);

// Serialized writer for the human-readable and JSON-lines logs.
class EventLog {
 public:
  EventLog(std::ostream* text, std::ostream* jsonl) : text_(text), jsonl_(jsonl) {}
  void write(const WindowOutcome& outcome);

 private:
  std::mutex mutex_;
  std::ostream* text_;
  std::ostream* jsonl_;
};

// External collaborators of a pipeline. `replay_clock`, when set, follows the
// record timestamps (relative to the first window) and is the clock the mock
// provider advances.
struct PipelineServices {
  MetricsSource* metrics = nullptr;
  Provider* provider = nullptr;
  RateLimiter* limiter = nullptr;
  const Clock* llm_clock = nullptr;
  ManualClock* replay_clock = nullptr;
  MitigationDispatcher* dispatcher = nullptr;
  const ScoreScript* scores = nullptr;
  EventLog* log = nullptr;
};

class Pipeline {
 public:
  // Throws Error(InvalidArgument) for missing services or an invalid config.
  Pipeline(PipelineConfig config, ModelBundle bundle, PipelineServices services);

  // ML stage: extract, normalize, predict, aggregate. Safe to call from a
  // different thread than finalize().
  ClassifiedWindow classify(const FlowRecord& record) const;
  // Alert stage for one classified window; single caller at a time.
  WindowOutcome finalize(ClassifiedWindow window);
  WindowOutcome process_window(const FlowRecord& record);

  const PipelineConfig& config() const noexcept { return config_; }
  const std::vector<ClassifierModel>& models() const noexcept { return models_; }
  const std::vector<double>& energy_history() const noexcept { return energy_history_; }

 private:
  AlertRecord build_alert(ClassifiedWindow& window);

  PipelineConfig config_;
  NormalizationStats stats_;
  bool has_stats_ = false;
  std::vector<ClassifierModel> models_;
  PipelineServices services_;
  KnowledgeBase knowledge_;
  PromptTemplates templates_;
  PromptMemory memory_;
  std::vector<double> energy_history_;
  std::optional<std::int64_t> replay_origin_ms_;
};

// ML stage and alert stage on separate threads joined by a bounded queue, so
// the next window is classified while the current one waits on the provider.
// Outcomes are delivered in input order.
std::vector<WindowOutcome> run_streaming(Pipeline& pipeline, std::span<const FlowRecord> records,
                                         std::size_t queue_capacity,
                                         const std::function<void(const WindowOutcome&)>& on_outcome = {});

// Fixed-capacity blocking FIFO.
template <typename T>
class BoundedQueue {
 public:
  explicit BoundedQueue(std::size_t capacity) : capacity_(capacity == 0 ? 1 : capacity) {}

  void push(T value) {
    std::unique_lock lock(mutex_);
    not_full_.wait(lock, [&] { return items_.size() < capacity_; });
    items_.push_back(std::move(value));
    not_empty_.notify_one();
  }

  // Empty optional once closed and drained.
  std::optional<T> pop() {
    std::unique_lock lock(mutex_);
    not_empty_.wait(lock, [&] { return !items_.empty() || closed_; });
    if (items_.empty()) return std::nullopt;
    T value = std::move(items_.front());
    items_.pop_front();
    not_full_.notify_one();
    return value;
  }

  void close() {
    std::lock_guard lock(mutex_);
    closed_ = true;
    not_empty_.notify_all();
  }

 private:
  std::size_t capacity_;
  std::mutex mutex_;
  std::condition_variable not_full_;
  std::condition_variable not_empty_;
  std::deque<T> items_;
  bool closed_ = false;
};

}  // namespace edgeids
