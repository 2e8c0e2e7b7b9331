#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "edgeids/labels.hpp"
#include "edgeids/telemetry.hpp"

namespace edgeids {

// 1.2 kB, decimal.
inline constexpr std::size_t kPromptByteBudget = 1200;

enum class ReasoningMode { ZeroShot, FewShot, CoT };

std::string_view to_string(ReasoningMode mode) noexcept;
std::optional<ReasoningMode> parse_mode(std::string_view text);

struct AttackContext {
  ClassLabel label = ClassLabel::Other;
  std::string description;
};

// Fixed class -> description table. The built-in entries are also shipped as
// assets/knowledge_base.txt ("<label> = <description>" per line).
class KnowledgeBase {
 public:
  static KnowledgeBase builtin();
  static KnowledgeBase parse(std::string_view text);
  static KnowledgeBase load(const std::filesystem::path& path);

  // Throws Error(NoContextForBenign) for Benign.
  AttackContext lookup(ClassLabel label) const;

 private:
  std::array<std::string, kClassCount> descriptions_;
};

AttackContext lookup_context(ClassLabel label);

// Instruction block wording per reasoning mode; shipped as
// assets/templates/{zero_shot,few_shot,cot}.txt.
struct PromptTemplates {
  std::string zero_shot;
  std::string few_shot;
  std::string cot;

  static PromptTemplates builtin();
  static PromptTemplates load(const std::filesystem::path& dir);

  const std::string& for_mode(ReasoningMode mode) const;
};

enum class BlockKind { Telemetry, Context, Instruction, Exemplar };

struct PromptBlock {
  BlockKind kind;
  std::string text;
};

struct Prompt {
  std::vector<PromptBlock> blocks;
  std::string rendered;
  std::size_t byte_len = 0;
  std::string digest;  // sha256_hex(rendered)
  ReasoningMode mode = ReasoningMode::ZeroShot;
  ClassLabel label = ClassLabel::Other;
  std::string telemetry_line;
  std::string context_description;  // after any truncation
  std::size_t exemplars_used = 0;
  bool context_truncated = false;
};

// Renders the telemetry / context / instruction (/ exemplar) blocks within
// `budget` bytes. Exemplars are only used in FewShot mode; FewShot without
// any exemplar falls back to ZeroShot. Over budget, exemplars are dropped
// from the end first, then the context description is cut at a word boundary
// and marked with "…". Throws Error(BudgetImpossible) if the fixed blocks
// alone do not fit.
Prompt encode_prompt(const NormalizedTelemetry& telemetry, const AttackContext& context,
                     ReasoningMode mode, std::span<const Prompt> exemplars,
                     const PromptTemplates& templates = PromptTemplates::builtin(),
                     std::size_t budget = kPromptByteBudget);

// "cpu=0.476 memory=0.182 ..." at 3 decimals.
std::string format_telemetry_line(const NormalizedTelemetry& telemetry);
// Inverse of format_telemetry_line for a rendered prompt's telemetry block.
// Throws Error(ParseError).
std::array<double, kTelemetryDims> parse_telemetry_block(std::string_view rendered);

using TokenCounts = std::map<std::string, std::uint32_t>;

// Lowercased whitespace-separated token frequencies.
TokenCounts token_counts(std::string_view text);
// Cosine of two count vectors; 0 when either is empty.
double cosine_similarity(const TokenCounts& a, const TokenCounts& b);
double prompt_similarity(const Prompt& a, const Prompt& b);

// Bounded history of sent prompts for few-shot retrieval; evicts oldest first.
// Owned by one pipeline worker; readers take snapshot() copies.
class PromptMemory {
 public:
  struct Entry {
    Prompt prompt;
    TokenCounts tokens;
    std::int64_t timestamp_ms = 0;
    std::uint64_t sequence = 0;
  };

  explicit PromptMemory(std::size_t capacity = 256);

  void add(Prompt prompt, std::int64_t timestamp_ms);
  std::size_t size() const noexcept { return entries_.size(); }
  std::size_t capacity() const noexcept { return capacity_; }
  const std::deque<Entry>& entries() const noexcept { return entries_; }
  std::vector<Entry> snapshot() const { return {entries_.begin(), entries_.end()}; }

 private:
  std::size_t capacity_;
  std::uint64_t next_sequence_ = 0;
  std::deque<Entry> entries_;
};

// Top-k by similarity to `query`; ties go to the most recent timestamp.
std::vector<Prompt> retrieve_similar(const PromptMemory& memory, const Prompt& query,
                                     std::size_t k);

}  // namespace edgeids
