#pragma once

#include <atomic>
#include <cstdint>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "edgeids/clock.hpp"
#include "edgeids/labels.hpp"
#include "edgeids/mitigation.hpp"
#include "edgeids/prompt.hpp"

namespace edgeids {

enum class Severity { Normal, Warning, Critical };

std::string_view to_string(Severity severity) noexcept;
// Exact, case-sensitive match of "Normal" / "Warning" / "Critical".
std::optional<Severity> parse_severity(std::string_view text) noexcept;

struct LlmResponse {
  ClassLabel revised_label = ClassLabel::Benign;
  double confidence = 0.0;
  Severity severity = Severity::Normal;
  std::vector<MitigationAction> mitigations;
  double elapsed_s = 0.0;
};

// Strict schema: an object with exactly revised_label, confidence, severity
// and mitigation. Throws Error(MalformedResponse) naming the offending field.
LlmResponse parse_response(std::string_view body);

// The four response keys in wire order, pretty-printed with `indent` spaces
// (or compact with indent < 0).
std::string response_json(const LlmResponse& response, int indent = 2);

struct Validation {
  bool accepted = false;
  double confidence = 0.0;
  double gamma_min = 0.0;

  // "Rejected (confidence 0.55 < 0.60)" or "Accepted".
  std::string describe() const;
};

inline constexpr double kDefaultGammaMin = 0.60;

// Accepted iff confidence >= gamma_min.
Validation validate_response(const LlmResponse& response, double gamma_min = kDefaultGammaMin);

struct ProviderConfig {
  std::string provider_id = "mock";
  std::string display_name = "GPT-4 Turbo";
  std::string endpoint;
  std::string api_key_env = "EDGEIDS_LLM_API_KEY";
  int timeout_ms = 5000;
  int max_retries = 1;
  double rate_capacity = 5.0;
  double rate_refill_per_s = 1.0;

  // Throws Error(InvalidArgument).
  void validate() const;
};

// Token bucket shared by all workers of a gateway.
class RateLimiter {
 public:
  RateLimiter(double capacity, double refill_per_s, const Clock& clock);

  bool try_acquire();
  double tokens() const;
  double capacity() const noexcept { return capacity_; }

 private:
  void refill_locked() const;

  double capacity_;
  double refill_per_s_;
  const Clock& clock_;
  mutable std::mutex mutex_;
  mutable double tokens_;
  mutable double last_s_;
};

struct WireRequest {
  std::string prompt;
  std::string digest;
  std::string mode;

  std::string to_json() const;
  static WireRequest from_json(std::string_view body);
};

// Transport to a reasoning service. exchange() returns the raw reply body,
// which must carry the four response keys plus "echo" and "echo_digest".
// Throws Error(Timeout) or Error(TransportError).
class Provider {
 public:
  virtual ~Provider() = default;
  virtual std::string exchange(const WireRequest& request, int timeout_ms) = 0;
};

// Builds a reply body: the response keys followed by the echo fields.
std::string make_reply(const LlmResponse& response, std::string_view echo);

// Deterministic stand-in for a remote model. The reply depends only on the
// predicted class found in the prompt and the reasoning mode; simulated
// latency advances the supplied ManualClock.
class MockProvider final : public Provider {
 public:
  struct Options {
    // Per-mode latency in seconds, indexed by ReasoningMode.
    std::array<double, 3> latency_s{0.84, 0.84, 0.84};
    // Uniform +/- jitter, drawn from a stream seeded by jitter_seed.
    double jitter_s = 0.0;
    std::uint64_t jitter_seed = 0;
  };

  // Overrides the canned response. Receives the parsed label and mode.
  using Responder = std::function<LlmResponse(ClassLabel label, ReasoningMode mode)>;
  // Mutates the echo before it is serialized.
  using Tamper = std::function<void(std::string& echo)>;

  explicit MockProvider(ManualClock* clock = nullptr);
  MockProvider(ManualClock* clock, Options options);

  std::string exchange(const WireRequest& request, int timeout_ms) override;

  void set_responder(Responder responder) { responder_ = std::move(responder); }
  void set_tamper(Tamper tamper) { tamper_ = std::move(tamper); }
  std::uint64_t calls() const noexcept { return calls_.load(); }

  // The canned response for (label, mode).
  static LlmResponse canned(ClassLabel label, ReasoningMode mode);

 private:
  ManualClock* clock_;
  Options options_;
  Responder responder_;
  Tamper tamper_;
  std::atomic<std::uint64_t> calls_{0};
};

// JSON over HTTP(S) POST to cfg.endpoint, Bearer key from cfg.api_key_env.
class HttpProvider final : public Provider {
 public:
  explicit HttpProvider(ProviderConfig config);
  std::string exchange(const WireRequest& request, int timeout_ms) override;

 private:
  ProviderConfig config_;
  std::string base_;
  std::string path_;
};

std::unique_ptr<Provider> make_provider(const ProviderConfig& config, ManualClock* clock);

// Sends the prompt, verifies the echoed prompt hashes to the sent digest and
// parses the reply. elapsed_s is measured on `clock`. Transport failures are
// retried up to cfg.max_retries times.
// Throws Error(RateLimited) before any transport activity when the bucket is
// empty, Error(IntegrityMismatch), Error(Timeout), Error(TransportError) or
// Error(MalformedResponse).
LlmResponse submit(const Prompt& prompt, const ProviderConfig& cfg, RateLimiter& limiter,
                   Provider& provider, const Clock& clock);

}  // namespace edgeids
