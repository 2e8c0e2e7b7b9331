#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <thread>
#include <vector>

#include "edgeids/budget.hpp"
#include "edgeids/error.hpp"
#include "edgeids/random.hpp"

using namespace edgeids;

namespace {

Errc code_of(auto&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("no error thrown");
  return Errc::InvalidArgument;
}

// Two-pass population statistics in long double.
bool drain_oracle(const std::vector<double>& h, double current) {
  long double mean = 0;
  for (double x : h) mean += x;
  mean /= h.size();
  long double var = 0;
  for (double x : h) var += (x - mean) * (x - mean);
  var /= h.size();
  const long double sd = std::max<long double>(std::sqrt(var), 1e-6L);
  return current > mean + 3 * sd;
}

}  // namespace

TEST_CASE("total latency") {
  CHECK(total_latency(0, 0, 0) == 0.0);
  CHECK(total_latency(0.2, 0.3, 0.5) == doctest::Approx(1.0).epsilon(1e-12));
  // The runtime log: 0.84 s of LLM time inside a 1.32 s round trip.
  const auto b = make_breakdown(0.012, 0.468, 0.84);
  CHECK(b.t_total_s == doctest::Approx(1.32).epsilon(1e-12));
  CHECK(b.t_total_s - b.t_llm_s == doctest::Approx(0.48).epsilon(1e-12));
  CHECK(code_of([] { total_latency(-0.1, 0, 0); }) == Errc::NegativeDuration);
  CHECK(code_of([] { total_latency(0, NAN, 0); }) == Errc::NegativeDuration);
}

TEST_CASE("energy integration") {
  CHECK(integrate_energy(std::vector<double>(100, 2.0)) == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(integrate_energy({}) == 0.0);
  CHECK(integrate_energy(std::vector<double>{1, 2, 3}) == doctest::Approx(0.06).epsilon(1e-12));
  CHECK(code_of([] { integrate_energy(std::vector<double>{1, -2}); }) == Errc::InvalidArgument);
  CHECK(energy_sample_count(1.32) == 132);
  CHECK(energy_sample_count(0) == 0);
  CHECK(code_of([] { energy_sample_count(-1); }) == Errc::NegativeDuration);
}

TEST_CASE("property: constant power over a cycle") {
  Rng rng(61);
  for (int i = 0; i < 1000; ++i) {
    const double p = rng.uniform(0.0, 30.0);
    const double t = rng.uniform(0.0, 5.0);
    const std::vector<double> trace(energy_sample_count(t), p);
    CHECK(std::abs(integrate_energy(trace) - p * t) <= kEnergyStepSeconds * p + 1e-9);
  }
}

TEST_CASE("property: integration is additive") {
  Rng rng(62);
  for (int i = 0; i < 500; ++i) {
    std::vector<double> a(rng.uniform_index(300)), b(rng.uniform_index(300));
    for (double& x : a) x = rng.uniform(0, 25);
    for (double& x : b) x = rng.uniform(0, 25);
    std::vector<double> ab = a;
    ab.insert(ab.end(), b.begin(), b.end());
    CHECK(integrate_energy(ab) ==
          doctest::Approx(integrate_energy(a) + integrate_energy(b)).epsilon(1e-12));
    long double naive = 0;
    for (double x : ab) naive += x;
    CHECK(integrate_energy(ab) == doctest::Approx(static_cast<double>(naive * 0.01)).epsilon(1e-12));
  }
}

TEST_CASE("accumulator under a concurrent sampler") {
  EnergyAccumulator acc;
  std::thread sampler([&] {
    for (int i = 0; i < 5000; ++i) acc.append(1.0);
  });
  double last = 0.0;
  for (int i = 0; i < 200; ++i) {
    const double now = acc.total_j();
    CHECK(now >= last);
    last = now;
  }
  sampler.join();
  CHECK(acc.size() == 5000);
  CHECK(acc.total_j() == doctest::Approx(50.0).epsilon(1e-12));
  acc.clear();
  CHECK(acc.total_j() == 0.0);
  CHECK(code_of([&] { acc.append(-1); }) == Errc::InvalidArgument);
}

TEST_CASE("constraints") {
  const Constraints c;
  CHECK_NOTHROW(c.validate());
  CHECK(check_constraints(1.32, 23.9, 0.95, c).compliant());
  CHECK(check_constraints(1.5, 100.0, 0.60, c).compliant());
  const auto v = check_constraints(2.0, 150.0, 0.5, c);
  CHECK(v.violations == std::vector<std::string>{"latency", "energy", "confidence"});
  CHECK(check_constraints(1.0, 10.0, std::nullopt, c).compliant());
  CHECK(code_of([] { Constraints{0, 1, 0.5}.validate(); }) == Errc::InvalidArgument);
  CHECK(code_of([] { Constraints{1, 1, 1.5}.validate(); }) == Errc::InvalidArgument);
  CHECK(code_of([] { Constraints{1, 1, 0.0}.validate(); }) == Errc::InvalidArgument);
}

TEST_CASE("property: worsening an input never removes a violation") {
  Rng rng(63);
  const Constraints c;
  for (int i = 0; i < 5000; ++i) {
    const double t = rng.uniform(0, 3), e = rng.uniform(0, 200), g = rng.uniform01();
    const auto base = check_constraints(t, e, g, c).violations;
    const auto worse = check_constraints(t + rng.uniform(0, 1), e + rng.uniform(0, 50),
                                         g * rng.uniform01(), c)
                           .violations;
    for (const auto& name : base) {
      CHECK(std::find(worse.begin(), worse.end(), name) != worse.end());
    }
  }
}

TEST_CASE("energy drain") {
  const std::vector<double> flat(20, 10.0);
  CHECK_FALSE(detect_energy_drain(flat, 10.0));
  CHECK(detect_energy_drain(flat, 10.1));
  std::vector<double> alt;
  for (int i = 0; i < 20; ++i) alt.push_back(i % 2 ? 11.0 : 9.0);
  CHECK(detect_energy_drain(alt, 14.5));
  CHECK(detect_energy_drain(alt, 13.9));
  CHECK_FALSE(detect_energy_drain(alt, 13.0));  // threshold is exclusive
  CHECK_FALSE(detect_energy_drain(alt, 12.9));
  CHECK(code_of([] { detect_energy_drain(std::vector<double>(9, 1.0), 5.0); }) ==
        Errc::InsufficientHistory);
}

TEST_CASE("property: drain detector matches a two-pass oracle") {
  Rng rng(64);
  int flagged = 0;
  for (int i = 0; i < 3000; ++i) {
    std::vector<double> h(10 + rng.uniform_index(50));
    const double base = rng.uniform(1, 50);
    for (double& x : h) x = base + rng.normal(0.0, rng.uniform(0.0, 3.0));
    const double current = base + rng.uniform(-5, 15);
    const bool expected = drain_oracle(h, current);
    // Skip cases sitting on the threshold within rounding.
    long double mean = std::accumulate(h.begin(), h.end(), 0.0L) / h.size();
    long double var = 0;
    for (double x : h) var += (x - mean) * (x - mean);
    const long double threshold = mean + 3 * std::max<long double>(std::sqrt(var / h.size()), 1e-6L);
    if (std::abs(static_cast<double>(current - threshold)) < 1e-9) continue;
    CHECK(detect_energy_drain(h, current) == expected);
    flagged += expected;
  }
  CHECK(flagged > 0);
}
