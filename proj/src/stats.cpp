#include "edgeids/stats.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numeric>

#include <fmt/format.h>

#include "edgeids/error.hpp"

namespace edgeids {

namespace {

void check_groups(const GroupSamples& g) {
  if (g.group_count() < 2) {
    throw Error(Errc::DegenerateGroups, "need at least 2 groups");
  }
  for (std::size_t i = 0; i < g.group_count(); ++i) {
    if (g.samples[i].size() < 2) {
      throw Error(Errc::DegenerateGroups, fmt::format("group {} has fewer than 2 samples", i));
    }
    for (double x : g.samples[i]) {
      if (!std::isfinite(x)) {
        throw Error(Errc::DegenerateGroups, fmt::format("group {} has a non-finite sample", i));
      }
    }
  }
}

struct SumsOfSquares {
  double between = 0.0;
  double within = 0.0;
  std::size_t n = 0;
};

SumsOfSquares sums_of_squares(const GroupSamples& g) {
  SumsOfSquares s;
  double grand = 0.0;
  for (const auto& group : g.samples) {
    s.n += group.size();
    grand += std::accumulate(group.begin(), group.end(), 0.0);
  }
  grand /= static_cast<double>(s.n);
  for (const auto& group : g.samples) {
    const double m = mean(group);
    s.between += static_cast<double>(group.size()) * (m - grand) * (m - grand);
    for (double x : group) s.within += (x - m) * (x - m);
  }
  return s;
}

// Continued fraction for I_x(a, b) (modified Lentz).
double beta_continued_fraction(double a, double b, double x) {
  constexpr int kMaxIterations = 10000;
  constexpr double kEps = 1e-16;
  constexpr double kTiny = 1e-300;
  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::abs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIterations; ++m) {
    const double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < kEps) return h;
  }
  return h;
}

// Upper 5% studentized range points. Rows k = 2..10; columns follow kDf, the
// last column being df = infinity. Source and method in docs/TUKEY_TABLE.md.
constexpr std::array<double, 25> kDf = {1,  2,  3,  4,  5,  6,  7,  8,  9,  10, 11, 12, 13,
                                        14, 15, 16, 17, 18, 19, 20, 24, 30, 40, 60, 120};
constexpr std::array<std::array<double, 26>, 9> kQ05 = {{
    {17.969, 6.085, 4.501, 3.926, 3.635, 3.46,  3.344, 3.261, 3.199, 3.151, 3.113, 3.081, 3.055,
     3.033,  3.014, 2.998, 2.984, 2.971, 2.96,  2.95,  2.919, 2.888, 2.858, 2.829, 2.8,   2.772},
    {26.976, 8.331, 5.91,  5.04,  4.602, 4.339, 4.165, 4.041, 3.948, 3.877, 3.82,  3.773, 3.734,
     3.701,  3.673, 3.649, 3.628, 3.609, 3.593, 3.578, 3.532, 3.486, 3.442, 3.399, 3.356, 3.314},
    {32.819, 9.798, 6.825, 5.757, 5.218, 4.896, 4.681, 4.529, 4.415, 4.327, 4.256, 4.199, 4.151,
     4.111,  4.076, 4.046, 4.02,  3.997, 3.977, 3.958, 3.901, 3.845, 3.791, 3.737, 3.685, 3.633},
    {37.082, 10.881, 7.502, 6.287, 5.673, 5.305, 5.06,  4.886, 4.755, 4.654, 4.574, 4.508, 4.453,
     4.407,  4.367,  4.333, 4.303, 4.276, 4.253, 4.232, 4.166, 4.102, 4.039, 3.977, 3.917, 3.858},
    {40.408, 11.734, 8.037, 6.706, 6.033, 5.628, 5.359, 5.167, 5.024, 4.912, 4.823, 4.75,  4.69,
     4.639,  4.595,  4.557, 4.524, 4.494, 4.468, 4.445, 4.373, 4.301, 4.232, 4.163, 4.096, 4.03},
    {43.119, 12.435, 8.478, 7.053, 6.33,  5.895, 5.606, 5.399, 5.244, 5.124, 5.028, 4.95,  4.884,
     4.829,  4.782,  4.741, 4.705, 4.673, 4.645, 4.62,  4.541, 4.464, 4.388, 4.314, 4.241, 4.17},
    {45.397, 13.027, 8.852, 7.347, 6.582, 6.122, 5.815, 5.596, 5.432, 5.304, 5.202, 5.119, 5.049,
     4.99,   4.94,   4.896, 4.858, 4.824, 4.794, 4.768, 4.684, 4.601, 4.521, 4.441, 4.363, 4.286},
    {47.357, 13.539, 9.177, 7.602, 6.801, 6.319, 5.997, 5.767, 5.595, 5.46,  5.353, 5.265, 5.192,
     5.13,   5.077,  5.031, 4.991, 4.955, 4.924, 4.895, 4.807, 4.72,  4.634, 4.55,  4.468, 4.387},
    {49.071, 13.988, 9.462, 7.826, 6.995, 6.493, 6.158, 5.918, 5.738, 5.598, 5.486, 5.395, 5.318,
     5.253,  5.198,  5.15,  5.108, 5.071, 5.037, 5.008, 4.915, 4.824, 4.735, 4.646, 4.56,  4.474},
}};

}  // namespace

double mean(const std::vector<double>& xs) {
  if (xs.empty()) throw Error(Errc::EmptyList, "mean of an empty sample");
  return std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
}

double regularized_incomplete_beta(double a, double b, double x) {
  if (!(a > 0.0) || !(b > 0.0)) throw Error(Errc::InvalidArgument, "beta parameters must be > 0");
  if (!(x >= 0.0 && x <= 1.0)) throw Error(Errc::InvalidArgument, "x must lie in [0, 1]");
  if (x == 0.0) return 0.0;
  if (x == 1.0) return 1.0;
  const double log_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                           a * std::log(x) + b * std::log1p(-x);
  const double front = std::exp(log_front);
  if (x < (a + 1.0) / (a + b + 2.0)) return front * beta_continued_fraction(a, b, x) / a;
  return 1.0 - front * beta_continued_fraction(b, a, 1.0 - x) / b;
}

double f_survival(double f, double d1, double d2) {
  if (!(d1 > 0.0) || !(d2 > 0.0)) throw Error(Errc::InvalidArgument, "F dfs must be > 0");
  if (std::isnan(f)) throw Error(Errc::InvalidArgument, "F is NaN");
  if (f <= 0.0) return 1.0;
  if (std::isinf(f)) return 0.0;
  return std::clamp(regularized_incomplete_beta(d2 / 2.0, d1 / 2.0, d2 / (d2 + d1 * f)), 0.0, 1.0);
}

AnovaResult one_way_anova(const GroupSamples& g) {
  check_groups(g);
  const SumsOfSquares s = sums_of_squares(g);
  AnovaResult r;
  r.df_between = static_cast<int>(g.group_count()) - 1;
  r.df_within = static_cast<int>(s.n - g.group_count());
  r.ss_between = s.between;
  r.ss_within = s.within;
  r.ms_within = s.within / r.df_within;
  const double total = s.between + s.within;
  if (total == 0.0) return r;  // F = 0, p = 1, eta^2 = 0
  r.eta_squared = s.between / total;
  if (s.within == 0.0) {
    r.f_stat = std::numeric_limits<double>::infinity();
    r.p_value = 0.0;
    return r;
  }
  r.f_stat = (s.between / r.df_between) / r.ms_within;
  r.p_value = f_survival(r.f_stat, r.df_between, r.df_within);
  return r;
}

double eta_squared(const GroupSamples& g) {
  check_groups(g);
  const SumsOfSquares s = sums_of_squares(g);
  const double total = s.between + s.within;
  return total == 0.0 ? 0.0 : s.between / total;
}

double studentized_range_critical(std::size_t k, double df) {
  if (k < 2 || k > 10) {
    throw Error(Errc::UnsupportedGroupCount,
                fmt::format("studentized range table covers 2..10 groups, got {}", k));
  }
  if (!(df >= 1.0)) throw Error(Errc::InvalidArgument, "error df must be >= 1");
  const auto& row = kQ05[k - 2];
  if (std::isinf(df)) return row.back();
  if (df >= kDf.back()) {
    // Linear in 1/df between 120 and infinity.
    const double t = (1.0 / kDf.back() - 1.0 / df) / (1.0 / kDf.back());
    return row[kDf.size() - 1] + t * (row.back() - row[kDf.size() - 1]);
  }
  const auto hi = std::upper_bound(kDf.begin(), kDf.end(), df);
  const std::size_t j = static_cast<std::size_t>(hi - kDf.begin());  // kDf[j-1] <= df < kDf[j]
  const double lo_df = kDf[j - 1];
  if (df == lo_df) return row[j - 1];
  const double t = (df - lo_df) / (kDf[j] - lo_df);
  return row[j - 1] + t * (row[j] - row[j - 1]);
}

TukeyResult tukey_hsd(const GroupSamples& g, double alpha) {
  if (alpha != 0.05) throw Error(Errc::InvalidArgument, "only alpha = 0.05 is tabulated");
  check_groups(g);
  const std::size_t k = g.group_count();
  TukeyResult r;
  r.alpha = alpha;
  const SumsOfSquares s = sums_of_squares(g);
  const double df_within = static_cast<double>(s.n - k);
  r.q_critical = studentized_range_critical(k, df_within);
  const double ms_within = s.within / df_within;

  std::vector<double> means(k);
  for (std::size_t i = 0; i < k; ++i) means[i] = mean(g.samples[i]);
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = i + 1; j < k; ++j) {
      TukeyPair p{i, j, means[i] - means[j], 0.0, false};
      const double diff = std::abs(p.mean_difference);
      const double se = std::sqrt(ms_within / 2.0 *
                                  (1.0 / static_cast<double>(g.samples[i].size()) +
                                   1.0 / static_cast<double>(g.samples[j].size())));
      if (se == 0.0) {
        p.q = diff == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
      } else {
        p.q = diff / se;
      }
      p.significant = p.q > r.q_critical;
      r.pairs.push_back(p);
    }
  }
  return r;
}

std::string summarize_tukey(const TukeyResult& result, const GroupSamples& g) {
  const std::size_t k = g.group_count();
  auto name = [&](std::size_t i) {
    return i < g.labels.size() ? g.labels[i] : fmt::format("G{}", i + 1);
  };
  std::vector<double> means(k);
  for (std::size_t i = 0; i < k; ++i) means[i] = mean(g.samples[i]);
  std::vector<std::size_t> order(k);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return means[a] > means[b]; });

  std::vector<std::string> clauses;
  for (std::size_t hi : order) {
    std::vector<std::string> lower;
    for (std::size_t lo : order) {
      for (const auto& p : result.pairs) {
        const bool match = (p.first == hi && p.second == lo && p.mean_difference > 0) ||
                           (p.first == lo && p.second == hi && p.mean_difference < 0);
        if (match && p.significant) lower.push_back(name(lo));
      }
    }
    if (lower.empty()) continue;
    std::string clause = name(hi) + " > ";
    for (std::size_t i = 0; i < lower.size(); ++i) clause += (i ? ", " : "") + lower[i];
    clauses.push_back(std::move(clause));
  }
  if (clauses.empty()) return "No difference";
  std::string out;
  for (std::size_t i = 0; i < clauses.size(); ++i) out += (i ? "; " : "") + clauses[i];
  return out;
}

}  // namespace edgeids
