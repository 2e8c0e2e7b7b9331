#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "edgeids/error.hpp"
#include "edgeids/prompt.hpp"
#include "edgeids/sha256.hpp"
#include "support.hpp"

using namespace edgeids;

namespace {

NormalizedTelemetry runtime_telemetry() {
  NormalizedTelemetry n;
  n.values = {0.476, 372.0 / 2048.0, 0.964, 21.7 / 300.0, 0.93};
  return n;
}

NormalizedTelemetry random_telemetry(Rng& rng) {
  NormalizedTelemetry n;
  for (std::size_t i = 0; i < kTelemetryDims; ++i) {
    n.values[i] = rng.uniform_index(5) == 0 ? 1.0 : rng.uniform01();
    n.saturated[i] = n.values[i] == 1.0 && rng.uniform01() < 0.5;
  }
  return n;
}

std::string random_words(Rng& rng, std::size_t max_words) {
  static const char* kWords[] = {"flood", "ssh", "login", "burst", "scan", "ports", "syn",
                                 "credential", "stuffing", "botnet", "amplification", "é"};
  std::string out;
  const std::size_t n = rng.uniform_index(max_words + 1);
  for (std::size_t i = 0; i < n; ++i) {
    if (i) out.push_back(' ');
    out += kWords[rng.uniform_index(std::size(kWords))];
  }
  return out;
}

ClassLabel random_attack(Rng& rng) { return kAllLabels[1 + rng.uniform_index(kClassCount - 1)]; }

Prompt exemplar(std::size_t tag, std::size_t description_bytes) {
  NormalizedTelemetry n;
  n.values.fill(static_cast<double>(tag) / 1000.0);
  AttackContext ctx{ClassLabel::DoS, std::string(description_bytes, 'a' + static_cast<char>(tag))};
  return encode_prompt(n, ctx, ReasoningMode::ZeroShot, {}, PromptTemplates::builtin(), 100000);
}

}  // namespace

TEST_CASE("knowledge base") {
  const auto bf = lookup_context(ClassLabel::BruteForce);
  CHECK(bf.description ==
        "Repeated login attempts over network protocols such as SSH or RDP, Typically using "
        "dictionary-based or credential-stuffing attacks.");
  CHECK(lookup_context(ClassLabel::BruteForce).description == bf.description);
  try {
    lookup_context(ClassLabel::Benign);
    FAIL("expected NoContextForBenign");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::NoContextForBenign);
  }
  for (ClassLabel l : kAllLabels) {
    if (l != ClassLabel::Benign) CHECK_FALSE(lookup_context(l).description.empty());
  }
}

TEST_CASE("shipped assets equal the built-in tables") {
  const auto kb = KnowledgeBase::load(EDGEIDS_ASSET_DIR "/knowledge_base.txt");
  const auto builtin = KnowledgeBase::builtin();
  for (ClassLabel l : kAllLabels) {
    if (l == ClassLabel::Benign) continue;
    CHECK(kb.lookup(l).description == builtin.lookup(l).description);
  }
  const auto t = PromptTemplates::load(EDGEIDS_ASSET_DIR "/templates");
  const auto b = PromptTemplates::builtin();
  CHECK(t.zero_shot == b.zero_shot);
  CHECK(t.few_shot == b.few_shot);
  CHECK(t.cot == b.cot);
}

TEST_CASE("encode_prompt layout and determinism") {
  const auto ctx = lookup_context(ClassLabel::BruteForce);
  const Prompt a = encode_prompt(runtime_telemetry(), ctx, ReasoningMode::ZeroShot, {});
  const Prompt b = encode_prompt(runtime_telemetry(), ctx, ReasoningMode::ZeroShot, {});
  CHECK(a.rendered == b.rendered);
  CHECK(a.digest == b.digest);
  CHECK(a.digest == sha256_hex(a.rendered));
  CHECK(a.digest.size() == 64);
  CHECK(a.byte_len == a.rendered.size());
  CHECK(a.byte_len <= kPromptByteBudget);
  REQUIRE(a.blocks.size() == 3);
  CHECK(a.blocks[0].kind == BlockKind::Telemetry);
  CHECK(a.blocks[1].kind == BlockKind::Context);
  CHECK(a.blocks[2].kind == BlockKind::Instruction);
  CHECK(a.rendered.rfind("[telemetry]\ncpu=0.476 memory=0.182 latency=0.964 energy=0.072 "
                         "anomaly_score=0.930\nsaturated=none\n[context]\npredicted_class=brute force\n",
                         0) == 0);
  CHECK_FALSE(a.context_truncated);

  const Prompt cot = encode_prompt(runtime_telemetry(), ctx, ReasoningMode::CoT, {});
  CHECK(cot.rendered != a.rendered);
  CHECK(cot.rendered.find(PromptTemplates::builtin().cot) != std::string::npos);

  const Prompt few = encode_prompt(runtime_telemetry(), ctx, ReasoningMode::FewShot, {});
  CHECK(few.mode == ReasoningMode::ZeroShot);  // no exemplars available
}

TEST_CASE("exemplars are dropped last-first until the prompt fits") {
  const auto ctx = lookup_context(ClassLabel::DoS);
  std::vector<Prompt> exemplars;
  for (std::size_t i = 0; i < 5; ++i) exemplars.push_back(exemplar(i, 150));

  const Prompt none = encode_prompt(runtime_telemetry(), ctx, ReasoningMode::FewShot, {});
  const Prompt five = encode_prompt(runtime_telemetry(), ctx, ReasoningMode::FewShot, exemplars);
  CHECK(none.byte_len <= kPromptByteBudget);
  CHECK(five.byte_len <= kPromptByteBudget);
  CHECK(five.exemplars_used < 5);
  CHECK(five.exemplars_used >= 1);
  for (std::size_t i = 0; i < 5; ++i) {
    const std::string marker(150, 'a' + static_cast<char>(i));
    CHECK((five.rendered.find(marker) != std::string::npos) == (i < five.exemplars_used));
  }

  std::size_t last = 5;
  for (std::size_t budget = 2000; budget >= 700; budget -= 25) {
    const Prompt p = encode_prompt(runtime_telemetry(), ctx, ReasoningMode::FewShot, exemplars,
                                   PromptTemplates::builtin(), budget);
    CHECK(p.byte_len <= budget);
    CHECK(p.exemplars_used <= last);
    last = p.exemplars_used;
    if (p.exemplars_used > 0) CHECK_FALSE(p.context_truncated);
  }
}

TEST_CASE("context is cut at a word boundary with an ellipsis") {
  AttackContext ctx{ClassLabel::Other, ""};
  for (int i = 0; i < 200; ++i) ctx.description += "word" + std::to_string(i) + " ";
  const Prompt p = encode_prompt(runtime_telemetry(), ctx, ReasoningMode::ZeroShot, {});
  CHECK(p.byte_len <= kPromptByteBudget);
  CHECK(p.context_truncated);
  const std::string& d = p.context_description;
  REQUIRE(d.size() > 3);
  CHECK(d.substr(d.size() - 3) == "…");
  const std::string kept = d.substr(0, d.size() - 3);
  CHECK(ctx.description.rfind(kept + " ", 0) == 0);  // a whole-word prefix
}

TEST_CASE("fixed blocks over budget are impossible") {
  try {
    encode_prompt(runtime_telemetry(), lookup_context(ClassLabel::DoS), ReasoningMode::CoT, {},
                  PromptTemplates::builtin(), 100);
    FAIL("expected BudgetImpossible");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::BudgetImpossible);
  }
}

TEST_CASE("property: fuzzed prompts fit, verify and keep the telemetry") {
  Rng rng(41);
  const ReasoningMode modes[] = {ReasoningMode::ZeroShot, ReasoningMode::FewShot,
                                 ReasoningMode::CoT};
  for (int i = 0; i < 2000; ++i) {
    const auto tel = random_telemetry(rng);
    AttackContext ctx{random_attack(rng), random_words(rng, 300)};
    std::vector<Prompt> exemplars;
    const std::size_t n = rng.uniform_index(6);
    for (std::size_t e = 0; e < n; ++e) {
      AttackContext ec{random_attack(rng), random_words(rng, 40)};
      exemplars.push_back(encode_prompt(random_telemetry(rng), ec, ReasoningMode::ZeroShot, {}));
    }
    const Prompt p = encode_prompt(tel, ctx, modes[rng.uniform_index(3)], exemplars);
    CHECK(p.byte_len <= kPromptByteBudget);
    CHECK(p.digest == sha256_hex(p.rendered));
    const auto parsed = parse_telemetry_block(p.rendered);
    for (std::size_t d = 0; d < kTelemetryDims; ++d) {
      CHECK(fmt::format("{:.3f}", parsed[d]) == fmt::format("{:.3f}", tel.values[d]));
    }
  }
}

TEST_CASE("similarity") {
  CHECK(cosine_similarity(token_counts("dos flood dos"), token_counts("dos flood scan")) ==
        doctest::Approx(3.0 / (std::sqrt(5.0) * std::sqrt(3.0))).epsilon(1e-12));
  CHECK(cosine_similarity(token_counts("a b"), token_counts("c d")) == 0.0);
  CHECK(cosine_similarity(token_counts("A b"), token_counts("a B")) == doctest::Approx(1.0));
  CHECK(cosine_similarity(token_counts(""), token_counts("")) == 0.0);
  const Prompt p = encode_prompt(runtime_telemetry(), lookup_context(ClassLabel::DoS),
                                 ReasoningMode::ZeroShot, {});
  CHECK(prompt_similarity(p, p) == doctest::Approx(1.0));
}

TEST_CASE("property: similarity is symmetric and bounded") {
  Rng rng(42);
  for (int i = 0; i < 3000; ++i) {
    const auto a = token_counts(random_words(rng, 12));
    const auto b = token_counts(random_words(rng, 12));
    const double ab = cosine_similarity(a, b);
    CHECK(ab == cosine_similarity(b, a));
    CHECK(ab >= 0.0);
    CHECK(ab <= 1.0);
    if (!a.empty()) CHECK(cosine_similarity(a, a) == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("prompt memory and retrieval") {
  PromptMemory memory(3);
  const Prompt q = encode_prompt(runtime_telemetry(), lookup_context(ClassLabel::BruteForce),
                                 ReasoningMode::ZeroShot, {});
  CHECK(retrieve_similar(memory, q, 3).empty());

  NormalizedTelemetry other;
  other.values = {0.1, 0.2, 0.3, 0.4, 0.5};
  const Prompt dos = encode_prompt(other, lookup_context(ClassLabel::DoS), ReasoningMode::ZeroShot, {});
  const Prompt scan = encode_prompt(other, lookup_context(ClassLabel::PortScan), ReasoningMode::ZeroShot, {});
  memory.add(dos, 1);
  memory.add(q, 2);
  memory.add(scan, 3);
  CHECK(retrieve_similar(memory, q, 0).empty());
  const auto top = retrieve_similar(memory, q, 10);
  REQUIRE(top.size() == 3);
  CHECK(top[0].rendered == q.rendered);

  // Exhaustive oracle over the three entries.
  std::vector<std::pair<double, std::int64_t>> oracle;
  for (const auto& e : memory.entries()) oracle.emplace_back(prompt_similarity(q, e.prompt), e.timestamp_ms);
  std::sort(oracle.begin(), oracle.end(), [](auto a, auto b) {
    return a.first != b.first ? a.first > b.first : a.second > b.second;
  });
  for (std::size_t i = 0; i < 3; ++i) CHECK(prompt_similarity(q, top[i]) == oracle[i].first);

  memory.add(dos, 4);  // evicts the oldest (dos @1)
  CHECK(memory.size() == 3);
  CHECK(memory.entries().front().timestamp_ms == 2);
}

TEST_CASE("retrieval ties go to the most recent entry") {
  PromptMemory memory(8);
  const Prompt p = encode_prompt(runtime_telemetry(), lookup_context(ClassLabel::DoS),
                                 ReasoningMode::ZeroShot, {});
  Prompt older = p, newer = p;
  older.context_description = "older";
  newer.context_description = "newer";
  memory.add(older, 10);
  memory.add(newer, 20);
  const auto top = retrieve_similar(memory, p, 1);
  REQUIRE(top.size() == 1);
  CHECK(top[0].context_description == "newer");
}

TEST_CASE("property: memory never exceeds capacity and evicts oldest first") {
  Rng rng(43);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t cap = 1 + rng.uniform_index(10);
    PromptMemory memory(cap);
    const Prompt p = exemplar(1, 10);
    const std::size_t adds = rng.uniform_index(40);
    for (std::size_t i = 0; i < adds; ++i) memory.add(p, static_cast<std::int64_t>(i));
    CHECK(memory.size() == std::min(cap, adds));
    if (adds > 0) {
      CHECK(memory.entries().front().timestamp_ms ==
            static_cast<std::int64_t>(adds - std::min(cap, adds)));
    }
  }
}

TEST_CASE("reasoning mode names") {
  for (auto m : {ReasoningMode::ZeroShot, ReasoningMode::FewShot, ReasoningMode::CoT}) {
    CHECK(parse_mode(to_string(m)) == m);
  }
  CHECK_FALSE(parse_mode("tree-of-thought").has_value());
}
