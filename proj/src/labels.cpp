#include "edgeids/labels.hpp"

#include <algorithm>
#include <cctype>
#include <string>

namespace edgeids {

std::string_view display_name(ClassLabel label) noexcept {
  switch (label) {
    case ClassLabel::Benign: return "benign";
    case ClassLabel::DoS: return "DoS";
    case ClassLabel::DDoS: return "DDoS";
    case ClassLabel::BruteForce: return "brute force";
    case ClassLabel::PortScan: return "port scan";
    case ClassLabel::Other: return "other";
  }
  return "other";
}

std::optional<ClassLabel> parse_label(std::string_view text) {
  std::string key;
  key.reserve(text.size());
  for (char c : text) {
    if (c == ' ' || c == '_' || c == '-') continue;
    key.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  }
  if (key == "benign" || key == "normal") return ClassLabel::Benign;
  if (key == "dos") return ClassLabel::DoS;
  if (key == "ddos") return ClassLabel::DDoS;
  if (key == "bruteforce") return ClassLabel::BruteForce;
  if (key == "portscan" || key == "portscanning") return ClassLabel::PortScan;
  if (key == "other") return ClassLabel::Other;
  return std::nullopt;
}

ClassLabel argmax(const Posteriors& p) noexcept {
  std::size_t best = 0;
  for (std::size_t i = 1; i < p.size(); ++i) {
    if (p[i] > p[best]) best = i;
  }
  return static_cast<ClassLabel>(best);
}

}  // namespace edgeids
