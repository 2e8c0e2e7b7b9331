#include "edgeids/prompt.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <sstream>

#include <fmt/format.h>

#include "edgeids/error.hpp"
#include "edgeids/sha256.hpp"

namespace edgeids {

std::string_view to_string(ReasoningMode mode) noexcept {
  switch (mode) {
    case ReasoningMode::ZeroShot: return "zero-shot";
    case ReasoningMode::FewShot: return "few-shot";
    case ReasoningMode::CoT: return "cot";
  }
  return "zero-shot";
}

std::optional<ReasoningMode> parse_mode(std::string_view text) {
  std::string key;
  for (char c : text) {
    if (c == '-' || c == '_' || c == ' ') continue;
    key.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  }
  if (key == "zeroshot") return ReasoningMode::ZeroShot;
  if (key == "fewshot") return ReasoningMode::FewShot;
  if (key == "cot" || key == "chainofthought") return ReasoningMode::CoT;
  return std::nullopt;
}

namespace {

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::IoError, "cannot open " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

constexpr std::string_view kBuiltinKnowledgeBase =
    "DoS = Flooding from a single source that exhausts server resources, e.g. HTTP floods "
    "(Hulk, GoldenEye) or slow-rate attacks (Slowloris, Slowhttptest) holding connections "
    "open.\n"
    "DDoS = Coordinated flooding from many distributed sources that saturates bandwidth or "
    "connection tables, Typically driven by botnets sending high-rate SYN, UDP or HTTP "
    "traffic.\n"
    "brute force = Repeated login attempts over network protocols such as SSH or RDP, "
    "Typically using dictionary-based or credential-stuffing attacks.\n"
    "port scan = Systematic probing of many destination ports on one or more hosts to map "
    "exposed services, Typically using SYN or connect scans with short-lived flows.\n"
    "other = Malicious traffic matching no specific attack profile, e.g. bot command "
    "channels, infiltration, web exploitation or protocol anomalies.\n";

constexpr std::string_view kZeroShot =
    "Role: network security analyst for an IoT edge gateway.\n"
    "Task: using only the telemetry and attack context above, confirm or revise the "
    "predicted class, rate your confidence in [0,1], assign a severity (Normal, Warning or "
    "Critical) and list concrete mitigations.\n"
    "Answer with JSON only: {\"revised_label\": str, \"confidence\": num, \"severity\": str, "
    "\"mitigation\": [str]}\n";

constexpr std::string_view kFewShot =
    "Role: network security analyst for an IoT edge gateway.\n"
    "Task: using the telemetry and attack context above, and the similar past incidents "
    "listed below as reference cases, confirm or revise the predicted class, rate your "
    "confidence in [0,1], assign a severity (Normal, Warning or Critical) and list concrete "
    "mitigations.\n"
    "Answer with JSON only: {\"revised_label\": str, \"confidence\": num, \"severity\": str, "
    "\"mitigation\": [str]}\n";

constexpr std::string_view kCoT =
    "Role: network security analyst for an IoT edge gateway.\n"
    "Task: using only the telemetry and attack context above, confirm or revise the "
    "predicted class, rate your confidence in [0,1], assign a severity (Normal, Warning or "
    "Critical) and list concrete mitigations.\n"
    "Think step by step: relate each telemetry value to the attack context, weigh the "
    "evidence for and against the predicted class, then decide.\n"
    "Answer with JSON only, after your reasoning: {\"revised_label\": str, \"confidence\": "
    "num, \"severity\": str, \"mitigation\": [str]}\n";

constexpr std::string_view kEllipsis = "\xE2\x80\xA6";  // U+2026

}  // namespace

KnowledgeBase KnowledgeBase::builtin() { return parse(kBuiltinKnowledgeBase); }

KnowledgeBase KnowledgeBase::parse(std::string_view text) {
  KnowledgeBase kb;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) {
      throw Error(Errc::ParseError, "knowledge base line " + std::to_string(line_no) +
                                        ": expected '<label> = <description>'");
    }
    const auto label = parse_label(trim(t.substr(0, eq)));
    if (!label || *label == ClassLabel::Benign) {
      throw Error(Errc::ParseError,
                  "knowledge base line " + std::to_string(line_no) + ": unknown attack label");
    }
    kb.descriptions_[index_of(*label)] = trim(t.substr(eq + 1));
  }
  for (std::size_t c = 1; c < kClassCount; ++c) {
    if (kb.descriptions_[c].empty()) {
      throw Error(Errc::ParseError, std::string("knowledge base has no entry for ") +
                                        std::string(display_name(static_cast<ClassLabel>(c))));
    }
  }
  return kb;
}

KnowledgeBase KnowledgeBase::load(const std::filesystem::path& path) {
  return parse(read_file(path));
}

AttackContext KnowledgeBase::lookup(ClassLabel label) const {
  if (label == ClassLabel::Benign) {
    throw Error(Errc::NoContextForBenign, "benign traffic has no attack context");
  }
  return AttackContext{label, descriptions_[index_of(label)]};
}

AttackContext lookup_context(ClassLabel label) {
  static const KnowledgeBase kb = KnowledgeBase::builtin();
  return kb.lookup(label);
}

PromptTemplates PromptTemplates::builtin() {
  return PromptTemplates{std::string(kZeroShot), std::string(kFewShot), std::string(kCoT)};
}

PromptTemplates PromptTemplates::load(const std::filesystem::path& dir) {
  return PromptTemplates{read_file(dir / "zero_shot.txt"), read_file(dir / "few_shot.txt"),
                         read_file(dir / "cot.txt")};
}

const std::string& PromptTemplates::for_mode(ReasoningMode mode) const {
  switch (mode) {
    case ReasoningMode::FewShot: return few_shot;
    case ReasoningMode::CoT: return cot;
    case ReasoningMode::ZeroShot: break;
  }
  return zero_shot;
}

// ---------------------------------------------------------------------------

std::string format_telemetry_line(const NormalizedTelemetry& telemetry) {
  std::string out;
  for (std::size_t i = 0; i < kTelemetryDims; ++i) {
    if (i) out.push_back(' ');
    out += fmt::format("{}={:.3f}", kTelemetryNames[i], telemetry.values[i]);
  }
  return out;
}

std::array<double, kTelemetryDims> parse_telemetry_block(std::string_view rendered) {
  const auto header = rendered.find("[telemetry]\n");
  if (header == std::string_view::npos) throw Error(Errc::ParseError, "no telemetry block");
  const auto start = header + 12;
  const auto end = rendered.find('\n', start);
  std::istringstream in{std::string(rendered.substr(start, end - start))};
  std::array<double, kTelemetryDims> out{};
  std::string token;
  for (std::size_t i = 0; i < kTelemetryDims; ++i) {
    if (!(in >> token)) throw Error(Errc::ParseError, "telemetry block too short");
    const auto eq = token.find('=');
    if (eq == std::string::npos || token.substr(0, eq) != kTelemetryNames[i]) {
      throw Error(Errc::ParseError, "unexpected telemetry token '" + token + "'");
    }
    out[i] = std::stod(token.substr(eq + 1));
  }
  return out;
}

namespace {

std::string telemetry_block(const NormalizedTelemetry& telemetry, std::string& line) {
  line = format_telemetry_line(telemetry);
  std::string saturated;
  for (std::size_t i = 0; i < kTelemetryDims; ++i) {
    if (!telemetry.saturated[i]) continue;
    if (!saturated.empty()) saturated.push_back(',');
    saturated += kTelemetryNames[i];
  }
  return fmt::format("[telemetry]\n{}\nsaturated={}\n", line,
                     saturated.empty() ? "none" : saturated);
}

std::string context_block(ClassLabel label, std::string_view description) {
  return fmt::format("[context]\npredicted_class={}\ndescription={}\n", display_name(label),
                     description);
}

std::string instruction_block(const std::string& text) {
  std::string out = "[instructions]\n" + text;
  if (out.back() != '\n') out.push_back('\n');
  return out;
}

std::string exemplar_line(std::size_t n, const Prompt& exemplar) {
  return fmt::format("{}) {} | {} | {}\n", n, exemplar.telemetry_line,
                     display_name(exemplar.label), exemplar.context_description);
}

// Longest prefix of `text` ending before a space whose length is <= max_len.
std::string cut_at_word(std::string_view text, std::size_t max_len) {
  if (text.size() <= max_len) return std::string(text);
  std::size_t cut = text.rfind(' ', max_len);
  if (cut == std::string_view::npos) return {};
  while (cut > 0 && text[cut - 1] == ' ') --cut;
  return std::string(text.substr(0, cut));
}

}  // namespace

Prompt encode_prompt(const NormalizedTelemetry& telemetry, const AttackContext& context,
                     ReasoningMode mode, std::span<const Prompt> exemplars,
                     const PromptTemplates& templates, std::size_t budget) {
  if (mode == ReasoningMode::FewShot && exemplars.empty()) mode = ReasoningMode::ZeroShot;

  Prompt prompt;
  prompt.mode = mode;
  prompt.label = context.label;

  const std::string telemetry_text = telemetry_block(telemetry, prompt.telemetry_line);
  const std::string instruction_text = instruction_block(templates.for_mode(mode));
  const std::size_t fixed = telemetry_text.size() + instruction_text.size() +
                            context_block(context.label, kEllipsis).size();
  if (fixed > budget) {
    throw Error(Errc::BudgetImpossible,
                fmt::format("fixed prompt blocks need {} bytes, budget is {}", fixed, budget));
  }

  std::string description = context.description;
  std::vector<std::string> exemplar_lines;
  if (mode == ReasoningMode::FewShot) {
    for (std::size_t i = 0; i < exemplars.size(); ++i) {
      exemplar_lines.push_back(exemplar_line(i + 1, exemplars[i]));
    }
  }

  auto total_size = [&] {
    std::size_t n = telemetry_text.size() + instruction_text.size() +
                    context_block(context.label, description).size();
    if (!exemplar_lines.empty()) {
      n += std::string_view("[exemplars]\n").size();
      for (const auto& l : exemplar_lines) n += l.size();
    }
    return n;
  };

  while (total_size() > budget && !exemplar_lines.empty()) exemplar_lines.pop_back();
  if (total_size() > budget) {
    const std::size_t excess = total_size() - budget;
    const std::size_t room = description.size() - excess;  // fixed <= budget keeps this >= 3
    description = cut_at_word(description, room - kEllipsis.size()) + std::string(kEllipsis);
    prompt.context_truncated = true;
  }

  prompt.context_description = description;
  prompt.exemplars_used = exemplar_lines.size();
  prompt.blocks.push_back({BlockKind::Telemetry, telemetry_text});
  prompt.blocks.push_back({BlockKind::Context, context_block(context.label, description)});
  prompt.blocks.push_back({BlockKind::Instruction, instruction_text});
  if (!exemplar_lines.empty()) {
    std::string text = "[exemplars]\n";
    for (const auto& l : exemplar_lines) text += l;
    prompt.blocks.push_back({BlockKind::Exemplar, std::move(text)});
  }
  for (const auto& b : prompt.blocks) prompt.rendered += b.text;
  prompt.byte_len = prompt.rendered.size();
  prompt.digest = sha256_hex(prompt.rendered);
  return prompt;
}

// ---------------------------------------------------------------------------

TokenCounts token_counts(std::string_view text) {
  TokenCounts counts;
  std::string token;
  auto flush = [&] {
    if (!token.empty()) ++counts[token];
    token.clear();
  };
  for (char c : text) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      flush();
    } else {
      token.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    }
  }
  flush();
  return counts;
}

double cosine_similarity(const TokenCounts& a, const TokenCounts& b) {
  if (a.empty() || b.empty()) return 0.0;
  double dot = 0.0;
  auto ia = a.begin();
  auto ib = b.begin();
  while (ia != a.end() && ib != b.end()) {
    if (ia->first < ib->first) {
      ++ia;
    } else if (ib->first < ia->first) {
      ++ib;
    } else {
      dot += static_cast<double>(ia->second) * static_cast<double>(ib->second);
      ++ia;
      ++ib;
    }
  }
  auto norm_sq = [](const TokenCounts& m) {
    double s = 0.0;
    for (const auto& [token, count] : m) s += static_cast<double>(count) * count;
    return s;
  };
  return std::clamp(dot / std::sqrt(norm_sq(a) * norm_sq(b)), 0.0, 1.0);
}

double prompt_similarity(const Prompt& a, const Prompt& b) {
  return cosine_similarity(token_counts(a.rendered), token_counts(b.rendered));
}

PromptMemory::PromptMemory(std::size_t capacity) : capacity_(capacity) {
  if (capacity_ == 0) throw Error(Errc::InvalidArgument, "prompt memory capacity must be > 0");
}

void PromptMemory::add(Prompt prompt, std::int64_t timestamp_ms) {
  if (entries_.size() == capacity_) entries_.pop_front();
  TokenCounts tokens = token_counts(prompt.rendered);
  entries_.push_back(Entry{std::move(prompt), std::move(tokens), timestamp_ms, next_sequence_++});
}

std::vector<Prompt> retrieve_similar(const PromptMemory& memory, const Prompt& query,
                                     std::size_t k) {
  if (k == 0 || memory.size() == 0) return {};
  const TokenCounts q = token_counts(query.rendered);
  struct Scored {
    double similarity;
    const PromptMemory::Entry* entry;
  };
  std::vector<Scored> scored;
  scored.reserve(memory.size());
  for (const auto& e : memory.entries()) scored.push_back({cosine_similarity(q, e.tokens), &e});
  std::stable_sort(scored.begin(), scored.end(), [](const Scored& a, const Scored& b) {
    if (a.similarity != b.similarity) return a.similarity > b.similarity;
    if (a.entry->timestamp_ms != b.entry->timestamp_ms) {
      return a.entry->timestamp_ms > b.entry->timestamp_ms;
    }
    return a.entry->sequence > b.entry->sequence;
  });
  std::vector<Prompt> out;
  for (std::size_t i = 0; i < std::min(k, scored.size()); ++i) {
    out.push_back(scored[i].entry->prompt);
  }
  return out;
}

}  // namespace edgeids
