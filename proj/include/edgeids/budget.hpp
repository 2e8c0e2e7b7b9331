#pragma once

#include <cstddef>
#include <mutex>
#include <span>
#include <string>
#include <optional>
#include <vector>

namespace edgeids {

inline constexpr double kEnergyStepSeconds = 0.010;

struct LatencyBreakdown {
  double t_ids_s = 0.0;
  double t_tx_s = 0.0;
  double t_llm_s = 0.0;
  double t_total_s = 0.0;
};

// Throws Error(NegativeDuration) for a negative or non-finite part.
double total_latency(double t_ids_s, double t_tx_s, double t_llm_s);
LatencyBreakdown make_breakdown(double t_ids_s, double t_tx_s, double t_llm_s);

// Riemann sum of watts at 10 ms steps. Throws Error(InvalidArgument) for a
// negative or non-finite sample.
double integrate_energy(std::span<const double> power_w);

// Sample count for a cycle of `seconds`: round(seconds / 10 ms).
std::size_t energy_sample_count(double seconds);

// Power samples appended by one sampler thread while others read totals.
class EnergyAccumulator {
 public:
  void append(double watts);
  void clear();
  std::vector<double> samples() const;
  std::size_t size() const;
  double total_j() const;

 private:
  mutable std::mutex mutex_;
  std::vector<double> samples_;
};

struct Constraints {
  double t_max_s = 1.5;
  double e_budget_j = 100.0;
  double gamma_min = 0.60;

  // Throws Error(InvalidArgument).
  void validate() const;
};

struct Verdict {
  std::vector<std::string> violations;  // "latency", "energy", "confidence"
  bool compliant() const noexcept { return violations.empty(); }
};

// Inclusive bounds; the confidence check is skipped when `gamma` is empty.
Verdict check_constraints(double t_total_s, double e_total_j, std::optional<double> gamma,
                          const Constraints& c);

// current > mean + 3 * max(stddev, 1e-6) over the history (population stddev).
// Throws Error(InsufficientHistory) with fewer than 10 entries.
bool detect_energy_drain(std::span<const double> history_j, double current_j);

}  // namespace edgeids
