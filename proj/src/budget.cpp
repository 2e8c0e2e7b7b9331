#include "edgeids/budget.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "edgeids/error.hpp"
#include "edgeids/kernels/kernels.hpp"

namespace edgeids {

double total_latency(double t_ids_s, double t_tx_s, double t_llm_s) {
  for (double part : {t_ids_s, t_tx_s, t_llm_s}) {
    if (!std::isfinite(part) || part < 0.0) {
      throw Error(Errc::NegativeDuration, fmt::format("latency part {} is not a duration", part));
    }
  }
  return t_ids_s + t_tx_s + t_llm_s;
}

LatencyBreakdown make_breakdown(double t_ids_s, double t_tx_s, double t_llm_s) {
  return LatencyBreakdown{t_ids_s, t_tx_s, t_llm_s, total_latency(t_ids_s, t_tx_s, t_llm_s)};
}

double integrate_energy(std::span<const double> power_w) {
  for (double p : power_w) {
    if (!std::isfinite(p) || p < 0.0) {
      throw Error(Errc::InvalidArgument, fmt::format("power sample {} W is invalid", p));
    }
  }
  return kernels::sum(power_w) * kEnergyStepSeconds;
}

std::size_t energy_sample_count(double seconds) {
  if (!std::isfinite(seconds) || seconds < 0.0) {
    throw Error(Errc::NegativeDuration, "cycle duration must be >= 0");
  }
  return static_cast<std::size_t>(std::llround(seconds / kEnergyStepSeconds));
}

void EnergyAccumulator::append(double watts) {
  if (!std::isfinite(watts) || watts < 0.0) {
    throw Error(Errc::InvalidArgument, fmt::format("power sample {} W is invalid", watts));
  }
  std::lock_guard lock(mutex_);
  samples_.push_back(watts);
}

void EnergyAccumulator::clear() {
  std::lock_guard lock(mutex_);
  samples_.clear();
}

std::vector<double> EnergyAccumulator::samples() const {
  std::lock_guard lock(mutex_);
  return samples_;
}

std::size_t EnergyAccumulator::size() const {
  std::lock_guard lock(mutex_);
  return samples_.size();
}

double EnergyAccumulator::total_j() const { return integrate_energy(samples()); }

void Constraints::validate() const {
  if (!(t_max_s > 0.0) || !(e_budget_j > 0.0)) {
    throw Error(Errc::InvalidArgument, "t_max_s and e_budget_j must be positive");
  }
  if (!(gamma_min > 0.0 && gamma_min <= 1.0)) {
    throw Error(Errc::InvalidArgument, "gamma_min must lie in (0, 1]");
  }
}

Verdict check_constraints(double t_total_s, double e_total_j, std::optional<double> gamma,
                          const Constraints& c) {
  Verdict v;
  if (!(t_total_s <= c.t_max_s)) v.violations.emplace_back("latency");
  if (!(e_total_j <= c.e_budget_j)) v.violations.emplace_back("energy");
  if (gamma && !(*gamma >= c.gamma_min)) v.violations.emplace_back("confidence");
  return v;
}

bool detect_energy_drain(std::span<const double> history_j, double current_j) {
  if (history_j.size() < 10) {
    throw Error(Errc::InsufficientHistory,
                fmt::format("need at least 10 past cycles, have {}", history_j.size()));
  }
  const double n = static_cast<double>(history_j.size());
  const double mean = kernels::sum(history_j) / n;
  const double stddev = std::sqrt(kernels::sum_squared_deviations(history_j, mean) / n);
  return current_j > mean + 3.0 * std::max(stddev, 1e-6);
}

}  // namespace edgeids
