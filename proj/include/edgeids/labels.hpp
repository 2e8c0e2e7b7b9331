#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <string_view>

namespace edgeids {

// Coarse traffic classes. Enum order is the tie-break order everywhere:
// lower index wins.
enum class ClassLabel : unsigned char { Benign = 0, DoS, DDoS, BruteForce, PortScan, Other };

inline constexpr std::size_t kClassCount = 6;

inline constexpr std::array<ClassLabel, kClassCount> kAllLabels = {
    ClassLabel::Benign,     ClassLabel::DoS,      ClassLabel::DDoS,
    ClassLabel::BruteForce, ClassLabel::PortScan, ClassLabel::Other};

// Per-class probabilities indexed by ClassLabel.
using Posteriors = std::array<double, kClassCount>;

constexpr std::size_t index_of(ClassLabel label) noexcept {
  return static_cast<std::size_t>(label);
}

// Human-facing name used in logs and on the wire ("brute force", "port scan").
std::string_view display_name(ClassLabel label) noexcept;

// Accepts display names, enum identifiers and a few common spellings,
// case-insensitively.
std::optional<ClassLabel> parse_label(std::string_view text);

// Index of the largest entry; ties go to the lowest index.
ClassLabel argmax(const Posteriors& p) noexcept;

}  // namespace edgeids
