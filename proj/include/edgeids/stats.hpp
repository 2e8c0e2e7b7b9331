#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace edgeids {

struct GroupSamples {
  std::vector<std::string> labels;
  std::vector<std::vector<double>> samples;

  std::size_t group_count() const noexcept { return samples.size(); }
};

struct AnovaResult {
  double f_stat = 0.0;
  double p_value = 1.0;
  int df_between = 0;
  int df_within = 0;
  double eta_squared = 0.0;
  double ss_between = 0.0;
  double ss_within = 0.0;
  double ms_within = 0.0;
};

// Throws Error(DegenerateGroups) with fewer than 2 groups, a group with fewer
// than 2 samples, or a non-finite sample. When every sample is identical the
// result is F = 0, p = 1, eta^2 = 0. When only the within-group variance is
// zero, F is +inf and p = 0.
AnovaResult one_way_anova(const GroupSamples& groups);

// SS_between / SS_total, 0 when the total variance is zero.
double eta_squared(const GroupSamples& groups);

struct TukeyPair {
  std::size_t first = 0;
  std::size_t second = 0;
  double mean_difference = 0.0;  // mean(first) - mean(second)
  double q = 0.0;
  bool significant = false;
};

struct TukeyResult {
  double alpha = 0.05;
  double q_critical = 0.0;
  std::vector<TukeyPair> pairs;  // (i, j) with i < j, each pair once
};

// Tukey-Kramer HSD. Only alpha = 0.05 is tabulated; other values throw
// Error(InvalidArgument). More than 10 groups throws
// Error(UnsupportedGroupCount).
TukeyResult tukey_hsd(const GroupSamples& groups, double alpha = 0.05);

// "No difference", or "A > B, C" per group that significantly exceeds others
// (several such clauses joined by "; ").
std::string summarize_tukey(const TukeyResult& result, const GroupSamples& groups);

// Upper 5% point of the studentized range for k means and df error degrees
// of freedom, interpolated from the embedded table (docs/TUKEY_TABLE.md).
double studentized_range_critical(std::size_t k, double df);

// I_x(a, b) via the continued-fraction expansion.
double regularized_incomplete_beta(double a, double b, double x);

// P(F > f) for an F(d1, d2) variable.
double f_survival(double f, double d1, double d2);

double mean(const std::vector<double>& xs);

}  // namespace edgeids
