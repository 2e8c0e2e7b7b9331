#include "edgeids/mitigation.hpp"

#include <arpa/inet.h>

#include <algorithm>
#include <cctype>
#include <sstream>

#include "edgeids/error.hpp"

namespace edgeids {

std::string_view to_string(MitigationKind kind) noexcept {
  switch (kind) {
    case MitigationKind::BlockIp: return "block_ip";
    case MitigationKind::RateLimitAuth: return "rate_limit_auth";
    case MitigationKind::EnforceMfa: return "enforce_mfa";
    case MitigationKind::SynCookies: return "syn_cookies";
    case MitigationKind::WafRateLimit: return "waf_rate_limit";
    case MitigationKind::Blackhole: return "blackhole";
    case MitigationKind::FirewallRule: return "firewall_rule";
    case MitigationKind::FreeText: return "free_text";
  }
  return "free_text";
}

bool valid_address(std::string_view address) {
  std::string addr(address);
  const auto slash = addr.find('/');
  int max_prefix = 0;
  std::string host = addr.substr(0, slash);
  unsigned char buf[16];
  if (inet_pton(AF_INET, host.c_str(), buf) == 1) {
    max_prefix = 32;
  } else if (inet_pton(AF_INET6, host.c_str(), buf) == 1) {
    max_prefix = 128;
  } else {
    return false;
  }
  if (slash == std::string::npos) return true;
  const std::string prefix = addr.substr(slash + 1);
  if (prefix.empty() || prefix.size() > 3) return false;
  if (!std::all_of(prefix.begin(), prefix.end(),
                   [](char c) { return std::isdigit(static_cast<unsigned char>(c)); })) {
    return false;
  }
  return std::stoi(prefix) <= max_prefix;
}

namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

bool has(const std::string& haystack, std::string_view needle) {
  return haystack.find(needle) != std::string::npos;
}

std::string find_address(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string word;
  while (in >> word) {
    while (!word.empty() && std::string_view(",.;:)\"'").find(word.back()) != std::string::npos) {
      word.pop_back();
    }
    while (!word.empty() && std::string_view("(\"'").find(word.front()) != std::string::npos) {
      word.erase(word.begin());
    }
    if (!word.empty() && valid_address(word)) return word;
  }
  return {};
}

}  // namespace

MitigationAction parse_mitigation(std::string_view text) {
  const std::string t = lower(text);
  MitigationAction action;
  action.text = std::string(text);

  const bool rate = has(t, "rate limit") || has(t, "rate-limit") || has(t, "throttl");
  if (has(t, "blackhole") || has(t, "black hole") || has(t, "null route") ||
      has(t, "null-route")) {
    action.kind = MitigationKind::Blackhole;
  } else if (has(t, "block") &&
             (has(t, " ip") || has(t, "address") || has(t, "source") || has(t, "host"))) {
    action.kind = MitigationKind::BlockIp;
  } else if (has(t, "syn cookie") || has(t, "syn-cookie") || has(t, "syncookie")) {
    action.kind = MitigationKind::SynCookies;
  } else if (has(t, "waf") && rate) {
    action.kind = MitigationKind::WafRateLimit;
  } else if (rate && (has(t, "auth") || has(t, "login") || has(t, "ssh") || has(t, "rdp"))) {
    action.kind = MitigationKind::RateLimitAuth;
  } else if (has(t, "multi-factor") || has(t, "multifactor") || has(t, "mfa") ||
             has(t, "2fa") || has(t, "two-factor")) {
    action.kind = MitigationKind::EnforceMfa;
  } else if (has(t, "firewall rule") || t.rfind("iptables ", 0) == 0 ||
             t.rfind("nft ", 0) == 0) {
    action.kind = MitigationKind::FirewallRule;
  }
  if (action.kind == MitigationKind::BlockIp || action.kind == MitigationKind::Blackhole) {
    action.address = find_address(text);
  }
  return action;
}

std::vector<MitigationAction> bind_offender(std::vector<MitigationAction> actions,
                                            std::string_view offender) {
  const bool usable = valid_address(offender);
  for (auto& a : actions) {
    if (a.kind != MitigationKind::BlockIp && a.kind != MitigationKind::Blackhole) continue;
    if (!a.address.empty()) continue;
    if (usable) {
      a.address = std::string(offender);
    } else {
      a.kind = MitigationKind::FreeText;
    }
  }
  return actions;
}

std::string short_name(const MitigationAction& action) {
  switch (action.kind) {
    case MitigationKind::BlockIp: return "IP block";
    case MitigationKind::RateLimitAuth: return "login throttling";
    case MitigationKind::EnforceMfa: return "enforce multi-factor authentication";
    case MitigationKind::SynCookies: return "SYN cookies";
    case MitigationKind::WafRateLimit: return "WAF rate limiting";
    case MitigationKind::Blackhole: return "blackhole route";
    case MitigationKind::FirewallRule:
    case MitigationKind::FreeText: break;
  }
  std::string text = action.text;
  while (!text.empty() && (text.back() == '.' || text.back() == ' ')) text.pop_back();
  return text;
}

std::string summarize(std::span<const MitigationAction> actions) {
  std::string out;
  for (std::size_t i = 0; i < actions.size(); ++i) {
    if (i > 0) {
      if (actions.size() == 2) {
        out += " and ";
      } else {
        out += i + 1 == actions.size() ? ", and " : ", ";
      }
    }
    out += short_name(actions[i]);
  }
  return out.empty() ? "none" : out;
}

std::string to_command(const MitigationAction& action) {
  const std::string addr = action.address.empty() ? "<offender>" : action.address;
  switch (action.kind) {
    case MitigationKind::BlockIp: return "iptables -I INPUT -s " + addr + " -j DROP";
    case MitigationKind::Blackhole: return "ip route add blackhole " + addr;
    case MitigationKind::RateLimitAuth:
      return "iptables -I INPUT -p tcp -m multiport --dports 22,3389 -m state --state NEW "
             "-m recent --update --seconds 60 --hitcount 5 -j DROP";
    case MitigationKind::SynCookies: return "sysctl -w net.ipv4.tcp_syncookies=1";
    case MitigationKind::WafRateLimit:
      return "iptables -I INPUT -p tcp --dport 80 -m hashlimit --hashlimit-above 50/sec "
             "--hashlimit-mode srcip --hashlimit-name waf -j DROP";
    case MitigationKind::FirewallRule: return action.text;
    case MitigationKind::EnforceMfa:
    case MitigationKind::FreeText: break;
  }
  return "# manual: " + action.text;
}

std::vector<MitigationAction> default_mitigations(ClassLabel label) {
  auto make = [](MitigationKind kind, std::string text) {
    return MitigationAction{kind, {}, std::move(text)};
  };
  switch (label) {
    case ClassLabel::Benign: return {};
    case ClassLabel::DoS:
      return {make(MitigationKind::BlockIp, "Block the offending IP address"),
              make(MitigationKind::WafRateLimit, "Apply WAF rate limiting")};
    case ClassLabel::DDoS:
      return {make(MitigationKind::SynCookies, "Enable SYN cookies"),
              make(MitigationKind::WafRateLimit, "Apply WAF rate limiting")};
    case ClassLabel::BruteForce:
      return {make(MitigationKind::BlockIp, "Block the offending IP address"),
              make(MitigationKind::RateLimitAuth,
                   "Apply rate limiting on authentication endpoints")};
    case ClassLabel::PortScan:
      return {make(MitigationKind::BlockIp, "Block the offending IP address")};
    case ClassLabel::Other:
      return {make(MitigationKind::FreeText, "Review the flagged traffic manually")};
  }
  return {};
}

}  // namespace edgeids
