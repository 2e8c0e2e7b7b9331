#include "doctest.h"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "edgeids/bench.hpp"
#include "edgeids/error.hpp"

using namespace edgeids;

namespace {

const std::filesystem::path kCicids = std::filesystem::path(EDGEIDS_FIXTURE_DIR) / "cicids";

Errc code_of(auto&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("no error thrown");
  return Errc::InvalidArgument;
}

// Macro F1 over every class seen in either sequence, counted from scratch.
double f1_oracle(const std::vector<ClassLabel>& pred, const std::vector<ClassLabel>& truth) {
  std::set<ClassLabel> classes(pred.begin(), pred.end());
  classes.insert(truth.begin(), truth.end());
  double total = 0;
  for (ClassLabel c : classes) {
    int tp = 0, fp = 0, fn = 0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
      tp += pred[i] == c && truth[i] == c;
      fp += pred[i] == c && truth[i] != c;
      fn += pred[i] != c && truth[i] == c;
    }
    total += tp == 0 ? 0.0 : 2.0 * tp / (2.0 * tp + fp + fn);
  }
  return total / classes.size();
}

std::array<std::size_t, kClassCount> counts(const Dataset& d) { return d.class_counts(); }

std::size_t count_of(const Dataset& d, ClassLabel l) { return counts(d)[index_of(l)]; }

const PipelineConfig kBase{};

ModelBundle separable_models() {
  static const ModelBundle bundle = [] {
    const ClassLabel labels[] = {ClassLabel::Benign, ClassLabel::DoS, ClassLabel::DDoS,
                                 ClassLabel::BruteForce, ClassLabel::PortScan};
    return train_default_models(synthesize_dataset(labels, 40, 5), 5);
  }();
  return bundle;
}

ScenarioSpec small_spec(ClassLabel attack = ClassLabel::BruteForce) {
  ScenarioSpec s;
  s.attack = attack;
  s.trial_count = 3;
  s.windows_per_trial = 10;
  s.seed = 17;
  return s;
}

std::string csv(const std::vector<TrialRow>& rows) {
  std::ostringstream out;
  write_trials_csv(out, rows);
  return out.str();
}

}  // namespace

TEST_CASE("label map") {
  const auto m = LabelMap::cicids2017();
  CHECK(m.lookup("BENIGN") == ClassLabel::Benign);
  CHECK(m.lookup("DoS Hulk") == ClassLabel::DoS);
  CHECK(m.lookup("DDoS") == ClassLabel::DDoS);
  CHECK(m.lookup("SSH-Patator") == ClassLabel::BruteForce);
  CHECK(m.lookup("Web Attack \x96 Brute Force") == ClassLabel::BruteForce);
  CHECK(m.lookup("web attack - brute force") == ClassLabel::BruteForce);
  CHECK(m.lookup("Port Scan") == ClassLabel::PortScan);
  CHECK(m.lookup("Heartbleed") == ClassLabel::Other);
  CHECK(m.lookup("brute force") == ClassLabel::BruteForce);
  CHECK_FALSE(m.lookup("Ransomware").has_value());
  const char* table[] = {"BENIGN", "DoS Hulk", "DoS GoldenEye", "DoS slowloris", "DoS Slowhttptest",
                         "DDoS", "FTP-Patator", "SSH-Patator", "Web Attack Brute Force", "PortScan",
                         "Bot", "Web Attack XSS", "Infiltration", "Web Attack Sql Injection",
                         "Heartbleed"};
  for (const char* fine : table) {
    CAPTURE(fine);
    CHECK(m.lookup(fine).has_value());
  }
}

TEST_CASE("ingest maps fine labels") {
  const auto r = ingest_dataset(kCicids / "dos_hulk.csv", LabelMap::cicids2017(), 1.0, 1);
  CHECK(r.dialect == CsvDialect::Cicids2017);
  CHECK(r.data.size() == 10);
  CHECK(count_of(r.data, ClassLabel::DoS) == 2);
  CHECK(count_of(r.data, ClassLabel::Benign) == 8);
  CHECK(r.fine_counts.at("DoS Hulk") == 2);
}

TEST_CASE("stratified subsample") {
  const auto map = LabelMap::cicids2017();
  const auto full = ingest_dataset(kCicids / "stratified.csv", map, 1.0, 1);
  const auto half = ingest_dataset(kCicids / "stratified.csv", map, 0.5, 1);
  CHECK(count_of(half.data, ClassLabel::Benign) == 2);
  CHECK(count_of(half.data, ClassLabel::PortScan) == 1);
  CHECK(count_of(half.data, ClassLabel::DDoS) == 1);
  CHECK(count_of(half.data, ClassLabel::BruteForce) == 1);
  CHECK(half.fine_counts.at("BENIGN") == 4);

  // Fraction 1 is the identity, in file order.
  std::ifstream in(kCicids / "stratified.csv");
  const auto table = read_flow_csv(in);
  REQUIRE(full.data.size() == table.records.size());
  for (std::size_t i = 0; i < table.records.size(); ++i) {
    CHECK(full.data.records[i].session_id == table.records[i].session_id);
  }

  // Same seed, same rows; kept rows stay in file order.
  const auto again = ingest_dataset(kCicids / "stratified.csv", map, 0.5, 1);
  for (std::size_t i = 0; i < half.data.size(); ++i) {
    CHECK(half.data.records[i].session_id == again.data.records[i].session_id);
  }
  CHECK(code_of([&] { ingest_dataset(kCicids / "stratified.csv", map, 0.0, 1); }) ==
        Errc::InvalidArgument);
}

TEST_CASE("property: stratification keeps every class within one row") {
  Rng rng(91);
  for (int trial = 0; trial < 200; ++trial) {
    Dataset d;
    for (ClassLabel l : kAllLabels) {
      const std::size_t n = rng.uniform_index(30);
      for (std::size_t i = 0; i < n; ++i) {
        FlowRecord r;
        r.session_id = std::to_string(d.size());
        d.records.push_back(r);
        d.labels.push_back(l);
      }
    }
    const double f = rng.uniform(0.01, 1.0);
    const auto sub = stratified_subsample(d, f, rng.uniform_index(1000));
    for (ClassLabel l : kAllLabels) {
      const double expect = count_of(d, l) * f;
      CHECK(std::abs(static_cast<double>(count_of(sub, l)) - expect) <= 1.0);
    }
    const auto [train, test] = stratified_split(d, 0.3, 4);
    CHECK(train.size() + test.size() == d.size());
  }
}

TEST_CASE("ingest errors") {
  const auto map = LabelMap::cicids2017();
  std::istringstream no_label(
      "session_id,timestamp_ms,src_addr,dst_addr,duration_s,fwd_packets,bwd_packets,"
      "mean_packet_size,packet_size_variance,inter_arrival_mean_ms,src_port,dst_port,protocol\n"
      "1,0,10.0.0.1,10.0.0.2,1,2,2,100,4,5,40000,22,TCP\n");
  CHECK(code_of([&] { ingest_dataset(no_label, map, 1.0, 1); }) == Errc::MissingLabelColumn);

  std::ifstream src(kCicids / "dos_hulk.csv");
  std::string text((std::istreambuf_iterator<char>(src)), {});
  std::string bad = text;
  bad.replace(bad.rfind("BENIGN"), 6, "Ransomware");
  bad.replace(bad.find("DoS Hulk"), 8, "Cryptojack");
  std::istringstream in(bad);
  try {
    ingest_dataset(in, map, 1.0, 1);
    FAIL("expected UnknownLabel");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::UnknownLabel);
    CHECK(std::string(e.detail()).find("'Ransomware'") != std::string::npos);
    CHECK(std::string(e.detail()).find("'Cryptojack'") != std::string::npos);
  }
}

TEST_CASE("classification metrics and delta F1") {
  using L = ClassLabel;
  const std::vector<L> truth{L::Benign, L::Benign, L::DoS, L::DoS};
  const std::vector<L> before{L::Benign, L::DoS, L::Benign, L::DoS};
  // Each class: tp 1, fp 1, fn 1, so F1 = 0.5 for both.
  CHECK(macro_f1(before, truth) == doctest::Approx(0.5));
  CHECK(compute_delta_f1(before, truth, truth) == doctest::Approx(0.5));
  CHECK(compute_delta_f1(truth, truth, truth) == 0.0);
  CHECK(compute_delta_f1(before, before, truth) == 0.0);

  // 10 benign, 10 DoS; two errors each way, then the two missed DoS are fixed.
  std::vector<L> t20, b20, a20;
  for (int i = 0; i < 10; ++i) t20.push_back(L::Benign);
  for (int i = 0; i < 10; ++i) t20.push_back(L::DoS);
  b20 = t20;
  b20[0] = b20[1] = L::DoS;
  b20[10] = b20[11] = L::Benign;
  a20 = b20;
  a20[10] = a20[11] = L::DoS;
  CHECK(macro_f1(b20, t20) == doctest::Approx(0.8));
  CHECK(macro_f1(a20, t20) == doctest::Approx((8.0 / 9.0 + 10.0 / 11.0) / 2));
  CHECK(compute_delta_f1(b20, a20, t20) == doctest::Approx((8.0 / 9.0 + 10.0 / 11.0) / 2 - 0.8));

  const auto m = classification_metrics(b20, t20);
  CHECK(m.accuracy == doctest::Approx(0.8));
  CHECK(m.precision == doctest::Approx(0.8));
  CHECK(m.recall == doctest::Approx(0.8));

  CHECK(code_of([&] { macro_f1(before, std::vector<L>{L::DoS}); }) == Errc::LengthMismatch);
  CHECK(code_of([&] { macro_f1(std::vector<L>{}, std::vector<L>{}); }) == Errc::EmptyList);
}

TEST_CASE("property: macro F1 matches the counting oracle") {
  Rng rng(92);
  for (int i = 0; i < 500; ++i) {
    const std::size_t n = 1 + rng.uniform_index(60);
    std::vector<ClassLabel> p(n), t(n);
    for (std::size_t j = 0; j < n; ++j) {
      t[j] = kAllLabels[rng.uniform_index(kClassCount)];
      p[j] = rng.uniform01() < 0.6 ? t[j] : kAllLabels[rng.uniform_index(kClassCount)];
    }
    CHECK(macro_f1(p, t) == doctest::Approx(f1_oracle(p, t)).epsilon(1e-12));
  }
}

TEST_CASE("synthetic benchmark is separable") {
  const ClassLabel labels[] = {ClassLabel::Benign, ClassLabel::DoS, ClassLabel::DDoS,
                               ClassLabel::BruteForce, ClassLabel::PortScan};
  const auto test = synthesize_dataset(labels, 30, 99);
  const auto models = separable_models();
  const auto vectors = test.vectors();
  for (const auto& model : models.models) {
    std::vector<ClassLabel> pred;
    for (const auto& v : vectors) pred.push_back(predict(model, normalize(v.x, models.stats)).label);
    CHECK(classification_metrics(pred, test.labels).accuracy >= 0.95);
  }
}

TEST_CASE("canned record feature vector") {
  const auto x = extract_features(canned_runtime_record());
  const double expected[] = {0.88, 16, 4.2, 0, 3389, 22, 0.61, 0.97, 230, 18, 0.07, 0.54};
  for (std::size_t i = 0; i < 12; ++i) {
    CHECK(std::round(x.values()[i] * 100) / 100 == doctest::Approx(expected[i]));
  }
}

TEST_CASE("scenario validation") {
  auto s = small_spec();
  s.windows_per_trial = 0;
  CHECK(code_of([&] { run_scenario(s, kBase, separable_models()); }) == Errc::EmptyTrial);
  s = small_spec();
  s.trial_count = 1;
  CHECK(code_of([&] { s.validate(); }) == Errc::InvalidArgument);
  s = small_spec(ClassLabel::Benign);
  CHECK(code_of([&] { s.validate(); }) == Errc::InvalidArgument);
  CHECK(parse_scenario("brute-force") == ClassLabel::BruteForce);
  CHECK(parse_scenario(scenario_name(ClassLabel::PortScan)) == ClassLabel::PortScan);
  CHECK_FALSE(parse_scenario("benign").has_value());
}

TEST_CASE("scenario runs are deterministic and bounded") {
  auto spec = small_spec(ClassLabel::DoS);
  spec.workers = 1;
  const auto a = run_scenario(spec, kBase, separable_models());
  spec.workers = 4;
  const auto b = run_scenario(spec, kBase, separable_models());
  CHECK(csv(a) == csv(b));
  REQUIRE(a.size() == 9);
  CHECK(a[0].mode == "zero-shot");
  CHECK(a[3].mode == "few-shot");
  CHECK(a[8].trial == 2);
  for (const auto& r : a) {
    CHECK(r.windows == 10);
    CHECK(r.max_prompt_bytes <= kPromptByteBudget);
    CHECK(r.llm_calls == r.alerts);
    CHECK(r.bandwidth_bytes <= r.llm_calls * kPromptByteBudget);
    CHECK(r.delta_f1 == doctest::Approx(r.llm.f1 - r.ml.f1));
  }
}

TEST_CASE("ML metrics do not depend on the provider") {
  auto spec = small_spec(ClassLabel::PortScan);
  const auto canned = run_scenario(spec, kBase, separable_models());
  spec.responder = [](ClassLabel, ReasoningMode, ClassLabel, std::size_t) {
    LlmResponse r = MockProvider::canned(ClassLabel::Other, ReasoningMode::ZeroShot);
    r.confidence = 0.99;
    return r;
  };
  const auto wrong = run_scenario(spec, kBase, separable_models());
  bool any_alert = false;
  for (std::size_t i = 0; i < canned.size(); ++i) {
    CHECK(canned[i].ml.f1 == wrong[i].ml.f1);
    CHECK(canned[i].ml.accuracy == wrong[i].ml.accuracy);
    if (wrong[i].alerts > 0) {
      any_alert = true;
      CHECK(wrong[i].delta_f1 < 0.0);
    }
  }
  CHECK(any_alert);

  // A pass-through responder leaves the labels alone.
  spec.responder = [](ClassLabel predicted, ReasoningMode, ClassLabel, std::size_t) {
    LlmResponse r = MockProvider::canned(predicted, ReasoningMode::ZeroShot);
    r.confidence = 0.99;
    return r;
  };
  for (const auto& r : run_scenario(spec, kBase, separable_models())) CHECK(r.delta_f1 == 0.0);
}

TEST_CASE("a responder correcting two known errors") {
  // Port scans trained as DoS: the ML stage is wrong on every attack window.
  const ClassLabel labels[] = {ClassLabel::Benign, ClassLabel::DoS, ClassLabel::PortScan};
  Dataset train = synthesize_dataset(labels, 40, 7);
  for (auto& l : train.labels) {
    if (l == ClassLabel::PortScan) l = ClassLabel::DoS;
  }
  const ModelBundle mislabeled = train_default_models(train, 7);

  ScenarioSpec spec;
  spec.attack = ClassLabel::PortScan;
  spec.trial_count = 2;
  spec.windows_per_trial = 20;
  spec.attack_fraction = 1.0;
  spec.modes = {ReasoningMode::ZeroShot};
  spec.workers = 1;
  spec.seed = 3;

  std::vector<std::vector<std::pair<ClassLabel, ClassLabel>>> seen;  // (predicted, truth)
  std::vector<int> fixed;
  spec.responder = [&](ClassLabel predicted, ReasoningMode, ClassLabel truth, std::size_t window) {
    if (window == 0) {
      seen.emplace_back();
      fixed.push_back(0);
    }
    seen.back().emplace_back(predicted, truth);
    ClassLabel answer = predicted;
    if (predicted != truth && fixed.back() < 2) {
      answer = truth;
      ++fixed.back();
    }
    LlmResponse r = MockProvider::canned(answer, ReasoningMode::ZeroShot);
    r.confidence = 0.9;
    return r;
  };
  const auto rows = run_scenario(spec, kBase, mislabeled);
  REQUIRE(rows.size() == 2);
  REQUIRE(seen.size() == 2);
  for (std::size_t t = 0; t < 2; ++t) {
    REQUIRE(rows[t].alerts == 20);
    CHECK(fixed[t] == 2);
    std::vector<ClassLabel> before, after, truth;
    int corrections = 0;
    for (const auto& [p, tr] : seen[t]) {
      before.push_back(p);
      truth.push_back(tr);
      const bool corrected = p != tr && corrections < 2;
      corrections += corrected;
      after.push_back(corrected ? tr : p);
    }
    CHECK(rows[t].delta_f1 ==
          doctest::Approx(f1_oracle(after, truth) - f1_oracle(before, truth)).epsilon(1e-12));
    CHECK(rows[t].delta_f1 > 0.0);
  }
}

TEST_CASE("trials CSV round trip") {
  const auto rows = run_scenario(small_spec(), kBase, separable_models());
  std::istringstream in(csv(rows));
  const auto back = read_trials_csv(in);
  CHECK(csv(back) == csv(rows));
  std::istringstream bad("scenario,mode\nx,y\n");
  CHECK_THROWS_AS(read_trials_csv(bad), Error);
}

TEST_CASE("report") {
  auto row = [](std::string mode, std::size_t trial, double value) {
    TrialRow r;
    r.scenario = "brute-force";
    r.mode = std::move(mode);
    r.trial = trial;
    r.memory_mb = value;
    r.mean_latency_s = value;
    r.cpu_percent = value;
    r.total_energy_j = value;
    r.bandwidth_bytes = static_cast<std::size_t>(value);
    r.llm.f1 = value / 10;
    return r;
  };
  const std::vector<TrialRow> single{row("zero-shot", 0, 1), row("zero-shot", 1, 2)};
  CHECK(code_of([&] { emit_report(single); }) == Errc::DegenerateGroups);

  const std::vector<TrialRow> same{row("zero-shot", 0, 1), row("zero-shot", 1, 2),
                                   row("cot", 0, 1), row("cot", 1, 2)};
  const auto flat = emit_report(same);
  REQUIRE(flat.sections.size() == 1);
  CHECK(flat.sections[0].rows.size() == 6);
  for (const auto& r : flat.sections[0].rows) CHECK(r.tukey == "No difference");
  const std::string text = flat.to_text();
  CHECK(text.find("Metric     |      ANOVA F |  p-value | Effect Size (η²) | Tukey Result") !=
        std::string::npos);

  const std::vector<TrialRow> split{row("zero-shot", 0, 1), row("zero-shot", 1, 2),
                                    row("cot", 0, 3), row("cot", 1, 4)};
  const auto r = emit_report(split);
  for (const auto& m : r.sections[0].rows) {
    CAPTURE(m.metric);
    CHECK(m.anova.f_stat == doctest::Approx(8.0));
    CHECK(m.anova.eta_squared == doctest::Approx(0.8));
    CHECK(m.anova.p_value == doctest::Approx(1 - std::sqrt(0.8)).epsilon(1e-9));
  }
  CHECK(r.to_text().find("8.000 |   0.1056 |          0.8000 | No difference") != std::string::npos);
  CHECK(r.to_json().find("\"anova_f\"") != std::string::npos);

  CHECK(format_p_value(0.00005) == "<0.0001");
  CHECK(format_p_value(0.1056) == "0.1056");
  CHECK(format_p_value(1.0) == "1.0000");
}
