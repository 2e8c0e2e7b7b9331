#pragma once
// Brute-force reference implementations of the classifiers, written without
// reference to the library's own training code.

#include <algorithm>
#include <array>
#include <cmath>
#include <utility>
#include <vector>

#include "edgeids/detection.hpp"
#include "edgeids/random.hpp"
#include "support.hpp"

namespace edgeids::test {

// 20 points on a small integer grid in the first two dimensions, so distance
// and threshold ties actually occur.
inline std::vector<LabeledVector> grid_dataset(Rng& rng, std::size_t classes) {
  const ClassLabel labels[] = {ClassLabel::Benign, ClassLabel::DoS, ClassLabel::PortScan};
  std::vector<LabeledVector> data;
  for (int i = 0; i < 20; ++i) {
    const auto x0 = static_cast<double>(rng.uniform_index(6));
    const auto x1 = static_cast<double>(rng.uniform_index(6));
    data.push_back({axis_vector(x0, x1), labels[rng.uniform_index(classes)]});
  }
  data[0].y = labels[0];
  data[1].y = labels[1];
  return data;
}

// k-NN by naive all-pairs scan with stable (distance, index) ordering.
inline Posteriors knn_oracle(const std::vector<LabeledVector>& data, std::size_t k,
                      const FeatureVector& q) {
  std::vector<std::pair<double, std::size_t>> d;
  for (std::size_t i = 0; i < data.size(); ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < kFeatureCount; ++j) {
      const double diff = data[i].x[j] - q[j];
      s += diff * diff;
    }
    d.emplace_back(s, i);
  }
  std::sort(d.begin(), d.end());
  Posteriors p{};
  for (std::size_t i = 0; i < k; ++i) p[index_of(data[d[i].second].y)] += 1.0;
  for (auto& v : p) v /= static_cast<double>(k);
  return p;
}

inline double gini_mass(const std::vector<const LabeledVector*>& rows) {
  if (rows.empty()) return 0.0;
  std::array<double, kClassCount> c{};
  for (const auto* r : rows) c[index_of(r->y)] += 1.0;
  const double n = static_cast<double>(rows.size());
  double g = 1.0;
  for (double v : c) g -= (v / n) * (v / n);
  return n * g;
}

inline Posteriors frequencies(const std::vector<const LabeledVector*>& rows) {
  Posteriors p{};
  for (const auto* r : rows) p[index_of(r->y)] += 1.0;
  for (auto& v : p) v /= static_cast<double>(rows.size());
  return p;
}

// Depth-1 tree by exhaustive search over every feature and every midpoint;
// the first optimal split in (feature, threshold) order wins.
struct Stump {
  int feature = -1;
  double threshold = 0.0;
  Posteriors left{}, right{}, root{};

  Posteriors operator()(const FeatureVector& x) const {
    if (feature < 0) return root;
    return x[static_cast<std::size_t>(feature)] <= threshold ? left : right;
  }
};

inline Stump stump_oracle(const std::vector<LabeledVector>& data) {
  std::vector<const LabeledVector*> all;
  for (const auto& r : data) all.push_back(&r);
  Stump best;
  best.root = frequencies(all);
  const double parent = gini_mass(all);
  struct Candidate {
    int f;
    double t;
    double score;
  };
  std::vector<Candidate> candidates;
  for (std::size_t f = 0; f < kFeatureCount; ++f) {
    std::vector<double> values;
    for (const auto& r : data) values.push_back(r.x[f]);
    std::sort(values.begin(), values.end());
    values.erase(std::unique(values.begin(), values.end()), values.end());
    for (std::size_t i = 0; i + 1 < values.size(); ++i) {
      const double t = values[i] + (values[i + 1] - values[i]) / 2.0;
      std::vector<const LabeledVector*> l, r;
      for (const auto& row : data) (row.x[f] <= t ? l : r).push_back(&row);
      candidates.push_back({static_cast<int>(f), t, gini_mass(l) + gini_mass(r)});
    }
  }
  double min_score = parent;
  for (const auto& c : candidates) min_score = std::min(min_score, c.score);
  if (!(min_score < parent - 1e-9)) return best;
  for (const auto& c : candidates) {
    if (c.score <= min_score + 1e-9) {
      best.feature = c.f;
      best.threshold = c.t;
      std::vector<const LabeledVector*> l, r;
      for (const auto& row : data) (row.x[static_cast<std::size_t>(c.f)] <= c.t ? l : r).push_back(&row);
      best.left = frequencies(l);
      best.right = frequencies(r);
      break;
    }
  }
  return best;
}


// P(F > f) as 1 - I_x(d1/2, d2/2), integrating the beta density with Simpson's
// rule after t = u^2 (smooth at 0 for a >= 1/2). Requires even d2.
inline double f_survival_oracle(double f, double d1, double d2) {
  const double a = d1 / 2, b = d2 / 2;
  const double x = d1 * f / (d1 * f + d2);
  const double log_beta = std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b);
  auto g = [&](double u) {
    return 2.0 * std::pow(u, 2 * a - 1) * std::pow(1 - u * u, b - 1);
  };
  const int n = 200000;
  const double hi = std::sqrt(x), h = hi / n;
  long double s = g(0) + g(hi);
  for (int i = 1; i < n; ++i) s += (i % 2 ? 4 : 2) * g(i * h);
  return 1.0 - static_cast<double>(s * h / 3) / std::exp(log_beta);
}

// Pooled two-sample t statistic.
inline double pooled_t(const std::vector<double>& x, const std::vector<double>& y) {
  auto m = [](const std::vector<double>& v) {
    long double s = 0;
    for (double e : v) s += e;
    return static_cast<double>(s / v.size());
  };
  const double mx = m(x), my = m(y);
  long double ss = 0;
  for (double e : x) ss += (e - mx) * (e - mx);
  for (double e : y) ss += (e - my) * (e - my);
  const double sp2 = static_cast<double>(ss) / (x.size() + y.size() - 2);
  return (mx - my) / std::sqrt(sp2 * (1.0 / x.size() + 1.0 / y.size()));
}

}  // namespace edgeids::test
