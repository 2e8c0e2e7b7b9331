#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "edgeids/labels.hpp"

namespace edgeids {

enum class MitigationKind {
  BlockIp,
  RateLimitAuth,
  EnforceMfa,
  SynCookies,
  WafRateLimit,
  Blackhole,
  FirewallRule,
  FreeText,
};

std::string_view to_string(MitigationKind kind) noexcept;

// `address` is set for BlockIp/Blackhole; empty means "the offending source"
// until bind_offender() fills it in. `text` keeps the wording the action was
// parsed from (or the rule body for FirewallRule).
struct MitigationAction {
  MitigationKind kind = MitigationKind::FreeText;
  std::string address;
  std::string text;

  bool operator==(const MitigationAction&) const = default;
};

// IPv4 or IPv6 literal, optionally with a /prefix.
bool valid_address(std::string_view address);

// Keyword classification of a free-form recommendation. An address literal in
// the text is captured for BlockIp/Blackhole. Unrecognised text -> FreeText.
MitigationAction parse_mitigation(std::string_view text);

// Fills empty addresses of BlockIp/Blackhole with `offender`. If `offender`
// is not a valid address those actions are downgraded to FreeText.
std::vector<MitigationAction> bind_offender(std::vector<MitigationAction> actions,
                                            std::string_view offender);

// Short phrase used in the "Mitigation :" summary, e.g. "IP block".
std::string short_name(const MitigationAction& action);
// "a", "a and b", "a, b, and c".
std::string summarize(std::span<const MitigationAction> actions);

// Shell-style firewall command emitted by the command sink.
std::string to_command(const MitigationAction& action);

// Conservative actions used when no accepted LLM response is available.
std::vector<MitigationAction> default_mitigations(ClassLabel label);

}  // namespace edgeids
