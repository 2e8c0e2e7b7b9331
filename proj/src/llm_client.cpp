#include "edgeids/llm_client.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <regex>

#define CPPHTTPLIB_OPENSSL_SUPPORT
#include "httplib.h"
#include "json.hpp"

#include <fmt/format.h>

#include "edgeids/error.hpp"
#include "edgeids/random.hpp"
#include "edgeids/sha256.hpp"

namespace edgeids {

using ordered_json = nlohmann::ordered_json;

std::string_view to_string(Severity severity) noexcept {
  switch (severity) {
    case Severity::Normal: return "Normal";
    case Severity::Warning: return "Warning";
    case Severity::Critical: return "Critical";
  }
  return "Normal";
}

std::optional<Severity> parse_severity(std::string_view text) noexcept {
  if (text == "Normal") return Severity::Normal;
  if (text == "Warning") return Severity::Warning;
  if (text == "Critical") return Severity::Critical;
  return std::nullopt;
}

namespace {

[[noreturn]] void malformed(std::string_view field, std::string_view why) {
  throw Error(Errc::MalformedResponse, fmt::format("{}: {}", field, why));
}

constexpr std::array<std::string_view, 4> kResponseKeys = {"revised_label", "confidence",
                                                           "severity", "mitigation"};

LlmResponse parse_response_object(const ordered_json& doc) {
  if (!doc.is_object()) malformed("$", "expected a JSON object");
  for (const auto& key : kResponseKeys) {
    if (!doc.contains(std::string(key))) malformed(key, "missing");
  }
  for (const auto& item : doc.items()) {
    if (std::find(kResponseKeys.begin(), kResponseKeys.end(), item.key()) == kResponseKeys.end()) {
      malformed(item.key(), "unexpected key");
    }
  }

  LlmResponse r;
  const auto& label = doc.at("revised_label");
  if (!label.is_string()) malformed("revised_label", "expected a string");
  const auto parsed = parse_label(label.get<std::string>());
  if (!parsed) malformed("revised_label", "unknown class '" + label.get<std::string>() + "'");
  r.revised_label = *parsed;

  const auto& confidence = doc.at("confidence");
  if (!confidence.is_number()) malformed("confidence", "expected a number");
  r.confidence = confidence.get<double>();
  if (!std::isfinite(r.confidence) || r.confidence < 0.0 || r.confidence > 1.0) {
    malformed("confidence", "outside [0, 1]");
  }

  const auto& severity = doc.at("severity");
  if (!severity.is_string()) malformed("severity", "expected a string");
  const auto sev = parse_severity(severity.get<std::string>());
  if (!sev) malformed("severity", "expected Normal, Warning or Critical");
  r.severity = *sev;

  const auto& mitigation = doc.at("mitigation");
  if (!mitigation.is_array()) malformed("mitigation", "expected an array");
  for (std::size_t i = 0; i < mitigation.size(); ++i) {
    if (!mitigation[i].is_string()) {
      malformed(fmt::format("mitigation[{}]", i), "expected a string");
    }
    r.mitigations.push_back(parse_mitigation(mitigation[i].get<std::string>()));
  }
  if (r.mitigations.empty() && r.severity != Severity::Normal) {
    malformed("mitigation", "empty list requires severity Normal");
  }
  return r;
}

ordered_json response_object(const LlmResponse& response) {
  ordered_json doc;
  doc["revised_label"] = std::string(display_name(response.revised_label));
  doc["confidence"] = response.confidence;
  doc["severity"] = std::string(to_string(response.severity));
  doc["mitigation"] = ordered_json::array();
  for (const auto& m : response.mitigations) doc["mitigation"].push_back(m.text);
  return doc;
}

std::string dump(const ordered_json& doc, int indent = -1) {
  return doc.dump(indent, ' ', false, nlohmann::json::error_handler_t::replace);
}

}  // namespace

LlmResponse parse_response(std::string_view body) {
  ordered_json doc;
  try {
    doc = ordered_json::parse(body);
  } catch (const nlohmann::json::exception& e) {
    malformed("$", e.what());
  }
  return parse_response_object(doc);
}

std::string response_json(const LlmResponse& response, int indent) {
  return dump(response_object(response), indent);
}

std::string Validation::describe() const {
  if (accepted) return "Accepted";
  return fmt::format("Rejected (confidence {:.2f} < {:.2f})", confidence, gamma_min);
}

Validation validate_response(const LlmResponse& response, double gamma_min) {
  return Validation{response.confidence >= gamma_min, response.confidence, gamma_min};
}

void ProviderConfig::validate() const {
  if (timeout_ms <= 0) throw Error(Errc::InvalidArgument, "timeout_ms must be > 0");
  if (max_retries < 0) throw Error(Errc::InvalidArgument, "max_retries must be >= 0");
  if (!(rate_capacity >= 1.0) || !(rate_refill_per_s > 0.0)) {
    throw Error(Errc::InvalidArgument, "rate limiter needs capacity >= 1 and refill > 0");
  }
  if (provider_id != "mock" && provider_id != "http") {
    throw Error(Errc::InvalidArgument, "unknown provider '" + provider_id + "'");
  }
  if (provider_id == "http" && endpoint.empty()) {
    throw Error(Errc::InvalidArgument, "http provider needs an endpoint");
  }
}

// ---------------------------------------------------------------------------

RateLimiter::RateLimiter(double capacity, double refill_per_s, const Clock& clock)
    : capacity_(capacity),
      refill_per_s_(refill_per_s),
      clock_(clock),
      tokens_(capacity),
      last_s_(clock.now_s()) {
  if (!(capacity >= 1.0) || !(refill_per_s > 0.0)) {
    throw Error(Errc::InvalidArgument, "rate limiter needs capacity >= 1 and refill > 0");
  }
}

void RateLimiter::refill_locked() const {
  const double now = clock_.now_s();
  if (now > last_s_) {
    tokens_ = std::min(capacity_, tokens_ + (now - last_s_) * refill_per_s_);
    last_s_ = now;
  }
}

bool RateLimiter::try_acquire() {
  std::lock_guard lock(mutex_);
  refill_locked();
  if (tokens_ < 1.0) return false;
  tokens_ -= 1.0;
  return true;
}

double RateLimiter::tokens() const {
  std::lock_guard lock(mutex_);
  refill_locked();
  return tokens_;
}

// ---------------------------------------------------------------------------

std::string WireRequest::to_json() const {
  ordered_json doc;
  doc["prompt"] = prompt;
  doc["digest"] = digest;
  doc["mode"] = mode;
  return dump(doc);
}

WireRequest WireRequest::from_json(std::string_view body) {
  try {
    const auto doc = ordered_json::parse(body);
    return WireRequest{doc.at("prompt").get<std::string>(), doc.at("digest").get<std::string>(),
                       doc.at("mode").get<std::string>()};
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::ParseError, std::string("request body: ") + e.what());
  }
}

std::string make_reply(const LlmResponse& response, std::string_view echo) {
  ordered_json doc = response_object(response);
  doc["echo"] = std::string(echo);
  doc["echo_digest"] = sha256_hex(echo);
  return dump(doc);
}

MockProvider::MockProvider(ManualClock* clock) : MockProvider(clock, Options{}) {}

MockProvider::MockProvider(ManualClock* clock, Options options)
    : clock_(clock), options_(options) {}

LlmResponse MockProvider::canned(ClassLabel label, ReasoningMode mode) {
  auto action = [](std::string_view text) { return parse_mitigation(text); };
  // Confidence by mode: zero-shot, few-shot, CoT.
  auto pick = [mode](double zs, double fs, double cot) {
    switch (mode) {
      case ReasoningMode::FewShot: return fs;
      case ReasoningMode::CoT: return cot;
      case ReasoningMode::ZeroShot: break;
    }
    return zs;
  };
  LlmResponse r;
  r.revised_label = label;
  switch (label) {
    case ClassLabel::BruteForce:
      r.confidence = pick(0.95, 0.96, 0.97);
      r.severity = Severity::Critical;
      r.mitigations = {action("Block the offending IP address"),
                       action("Apply rate limiting on authentication endpoints"),
                       action("Enforce multi-factor authentication.")};
      break;
    case ClassLabel::DoS:
      r.confidence = pick(0.91, 0.93, 0.94);
      r.severity = Severity::Critical;
      r.mitigations = {action("Block the offending IP address"),
                       action("Apply WAF rate limiting on exposed HTTP services")};
      break;
    case ClassLabel::DDoS:
      r.confidence = pick(0.93, 0.94, 0.96);
      r.severity = Severity::Critical;
      r.mitigations = {action("Enable SYN cookies on the gateway"),
                       action("Apply WAF rate limiting on exposed HTTP services"),
                       action("Blackhole the attacking prefix at the upstream router")};
      break;
    case ClassLabel::PortScan:
      r.confidence = pick(0.88, 0.90, 0.92);
      r.severity = Severity::Warning;
      r.mitigations = {action("Block the offending IP address"),
                       action("Close unused service ports on the gateway")};
      break;
    case ClassLabel::Other:
      r.confidence = pick(0.72, 0.74, 0.77);
      r.severity = Severity::Warning;
      r.mitigations = {action("Review the flagged traffic manually")};
      break;
    case ClassLabel::Benign:
      r.confidence = pick(0.80, 0.82, 0.85);
      r.severity = Severity::Normal;
      break;
  }
  return r;
}

std::string MockProvider::exchange(const WireRequest& request, int timeout_ms) {
  const std::uint64_t call = ++calls_;
  const auto mode = parse_mode(request.mode).value_or(ReasoningMode::ZeroShot);

  double latency = options_.latency_s[static_cast<std::size_t>(mode)];
  if (options_.jitter_s > 0.0) {
    Rng rng(mix_seed(options_.jitter_seed, call));
    latency += rng.uniform(-options_.jitter_s, options_.jitter_s);
  }
  latency = std::max(0.0, latency);
  if (latency * 1000.0 > timeout_ms) {
    if (clock_) clock_->advance(timeout_ms / 1000.0);
    throw Error(Errc::Timeout, fmt::format("mock provider exceeded {} ms", timeout_ms));
  }
  if (clock_) clock_->advance(latency);

  ClassLabel label = ClassLabel::Other;
  static const std::regex kClassLine("(^|\n)predicted_class=([^\n]*)");
  std::smatch m;
  if (std::regex_search(request.prompt, m, kClassLine)) {
    label = parse_label(m[2].str()).value_or(ClassLabel::Other);
  }
  const LlmResponse response = responder_ ? responder_(label, mode) : canned(label, mode);

  std::string echo = request.prompt;
  if (tamper_) tamper_(echo);
  ordered_json doc = response_object(response);
  doc["echo"] = echo;
  doc["echo_digest"] = request.digest;
  return dump(doc);
}

// ---------------------------------------------------------------------------

HttpProvider::HttpProvider(ProviderConfig config) : config_(std::move(config)) {
  static const std::regex kUrl(R"(^(https?://[^/]+)(/.*)?$)");
  std::smatch m;
  if (!std::regex_match(config_.endpoint, m, kUrl)) {
    throw Error(Errc::InvalidArgument, "endpoint must be an http(s) URL");
  }
  base_ = m[1].str();
  path_ = m[2].matched ? m[2].str() : "/";
}

std::string HttpProvider::exchange(const WireRequest& request, int timeout_ms) {
  httplib::Client client(base_);
  const auto seconds = timeout_ms / 1000;
  const auto micros = (timeout_ms % 1000) * 1000;
  client.set_connection_timeout(seconds, micros);
  client.set_read_timeout(seconds, micros);
  client.set_write_timeout(seconds, micros);

  httplib::Headers headers;
  if (const char* key = std::getenv(config_.api_key_env.c_str()); key && *key) {
    headers.emplace("Authorization", std::string("Bearer ") + key);
  }
  const auto res = client.Post(path_, headers, request.to_json(), "application/json");
  if (!res) {
    const auto err = res.error();
    if (err == httplib::Error::ConnectionTimeout || err == httplib::Error::Read) {
      throw Error(Errc::Timeout, "provider did not answer within " +
                                     std::to_string(timeout_ms) + " ms");
    }
    throw Error(Errc::TransportError, httplib::to_string(err));
  }
  if (res->status != 200) {
    throw Error(Errc::TransportError, "provider returned HTTP " + std::to_string(res->status));
  }
  return res->body;
}

std::unique_ptr<Provider> make_provider(const ProviderConfig& config, ManualClock* clock) {
  config.validate();
  if (config.provider_id == "http") return std::make_unique<HttpProvider>(config);
  return std::make_unique<MockProvider>(clock);
}

// ---------------------------------------------------------------------------

LlmResponse submit(const Prompt& prompt, const ProviderConfig& cfg, RateLimiter& limiter,
                   Provider& provider, const Clock& clock) {
  if (prompt.digest.empty()) throw Error(Errc::InvalidArgument, "prompt has no digest");
  if (!limiter.try_acquire()) throw Error(Errc::RateLimited, "no token available");

  const WireRequest request{prompt.rendered, prompt.digest, std::string(to_string(prompt.mode))};
  const double start = clock.now_s();
  std::string body;
  for (int attempt = 0;; ++attempt) {
    try {
      body = provider.exchange(request, cfg.timeout_ms);
      break;
    } catch (const Error& e) {
      const bool transient = e.code() == Errc::Timeout || e.code() == Errc::TransportError;
      if (!transient || attempt >= cfg.max_retries) throw;
    }
  }
  const double elapsed = std::max(0.0, clock.now_s() - start);

  ordered_json doc;
  try {
    doc = ordered_json::parse(body);
  } catch (const nlohmann::json::exception& e) {
    malformed("$", e.what());
  }
  if (!doc.is_object()) malformed("$", "expected a JSON object");
  if (!doc.contains("echo") || !doc["echo"].is_string()) malformed("echo", "missing");
  const std::string echo = doc["echo"].get<std::string>();
  if (sha256_hex(echo) != prompt.digest) {
    throw Error(Errc::IntegrityMismatch, "echoed prompt does not hash to the sent digest");
  }
  doc.erase("echo");
  doc.erase("echo_digest");

  LlmResponse response = parse_response_object(doc);
  response.elapsed_s = elapsed;
  return response;
}

}  // namespace edgeids
