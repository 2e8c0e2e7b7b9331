#include "edgeids/detection.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "edgeids/error.hpp"
#include "edgeids/kernels/kernels.hpp"
#include "edgeids/random.hpp"

namespace edgeids {

std::string_view to_string(ModelKind kind) noexcept {
  switch (kind) {
    case ModelKind::DecisionTree: return "DecisionTree";
    case ModelKind::RandomForest: return "RandomForest";
    case ModelKind::KNearest: return "KNearest";
    case ModelKind::External: return "External";
  }
  return "Unknown";
}

Prediction make_prediction(const Posteriors& posteriors) {
  double total = 0.0;
  for (double p : posteriors) {
    if (!(p >= 0.0) || p > 1.0 + 1e-12) {
      throw Error(Errc::InvalidArgument, "posterior outside [0, 1]");
    }
    total += p;
  }
  if (std::abs(total - 1.0) > 1e-9) {
    throw Error(Errc::InvalidArgument, "posteriors do not sum to 1");
  }
  Prediction out;
  out.posteriors = posteriors;
  out.label = argmax(posteriors);
  out.anomaly_score = std::clamp(1.0 - posteriors[index_of(ClassLabel::Benign)], 0.0, 1.0);
  for (std::size_t i = 1; i < kClassCount; ++i) {
    out.max_malicious = std::max(out.max_malicious, posteriors[i]);
  }
  return out;
}

Posteriors posteriors_from_score(ClassLabel label, double score) {
  if (!(score >= 0.0 && score <= 1.0)) {
    throw Error(Errc::InvalidArgument, "score must lie in [0, 1]");
  }
  Posteriors p{};
  p[index_of(ClassLabel::Benign)] = 1.0 - score;
  const ClassLabel attack = label == ClassLabel::Benign ? ClassLabel::Other : label;
  p[index_of(attack)] += score;
  return p;
}

ModelKind ClassifierModel::kind() const noexcept {
  switch (parameters_.index()) {
    case 0: return ModelKind::DecisionTree;
    case 1: return ModelKind::RandomForest;
    case 2: return ModelKind::KNearest;
    default: return ModelKind::External;
  }
}

bool ClassifierModel::trained() const noexcept {
  return std::visit(
      [](const auto& p) {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, DecisionTree>) return !p.nodes.empty();
        if constexpr (std::is_same_v<T, RandomForest>) return !p.trees.empty();
        if constexpr (std::is_same_v<T, KNearest>) return p.k > 0 && p.exemplars.count >= p.k;
        if constexpr (std::is_same_v<T, ExternalModel>) return true;
      },
      parameters_);
}

// ---------------------------------------------------------------------------
// CART

namespace {

// n * gini = n - sum(c^2) / n
double weighted_gini(const std::array<std::size_t, kClassCount>& counts, std::size_t n) {
  if (n == 0) return 0.0;
  double sq = 0.0;
  for (auto c : counts) sq += static_cast<double>(c) * static_cast<double>(c);
  return static_cast<double>(n) - sq / static_cast<double>(n);
}

constexpr double kSplitEpsilon = 1e-12;

class TreeBuilder {
 public:
  TreeBuilder(std::span<const LabeledVector> data, const TreeOptions& options)
      : data_(data), options_(options), rng_(options.seed) {}

  DecisionTree build() {
    std::vector<std::size_t> idx(data_.size());
    std::iota(idx.begin(), idx.end(), 0);
    grow(idx, 0);
    return DecisionTree{std::move(nodes_)};
  }

 private:
  int grow(std::vector<std::size_t>& idx, int depth) {
    const int self = static_cast<int>(nodes_.size());
    nodes_.emplace_back();

    std::array<std::size_t, kClassCount> counts{};
    for (auto i : idx) ++counts[index_of(data_[i].y)];
    const double n = static_cast<double>(idx.size());
    for (std::size_t c = 0; c < kClassCount; ++c) {
      nodes_[self].posterior[c] = static_cast<double>(counts[c]) / n;
    }

    const bool pure = std::count_if(counts.begin(), counts.end(), [](auto c) { return c > 0; }) <= 1;
    if (pure || depth >= options_.max_depth || idx.size() < 2 * options_.min_leaf) return self;

    double best_score = weighted_gini(counts, idx.size()) - kSplitEpsilon;
    int best_feature = -1;
    double best_threshold = 0.0;

    std::vector<std::size_t> sorted = idx;
    for (std::size_t f : candidate_features()) {
      std::stable_sort(sorted.begin(), sorted.end(), [&](std::size_t a, std::size_t b) {
        return data_[a].x[f] < data_[b].x[f];
      });
      std::array<std::size_t, kClassCount> left{};
      std::array<std::size_t, kClassCount> right = counts;
      for (std::size_t pos = 0; pos + 1 < sorted.size(); ++pos) {
        const auto c = index_of(data_[sorted[pos]].y);
        ++left[c];
        --right[c];
        const double v = data_[sorted[pos]].x[f];
        const double next = data_[sorted[pos + 1]].x[f];
        if (v == next) continue;
        const std::size_t n_left = pos + 1;
        const std::size_t n_right = sorted.size() - n_left;
        if (n_left < options_.min_leaf || n_right < options_.min_leaf) continue;
        const double score = weighted_gini(left, n_left) + weighted_gini(right, n_right);
        if (score < best_score) {
          best_score = score - kSplitEpsilon;
          best_feature = static_cast<int>(f);
          double mid = v + (next - v) / 2.0;
          if (!(mid < next)) mid = v;
          best_threshold = mid;
        }
      }
    }
    if (best_feature < 0) return self;

    std::vector<std::size_t> left_idx;
    std::vector<std::size_t> right_idx;
    for (auto i : idx) {
      (data_[i].x[static_cast<std::size_t>(best_feature)] <= best_threshold ? left_idx : right_idx)
          .push_back(i);
    }
    nodes_[self].feature = best_feature;
    nodes_[self].threshold = best_threshold;
    const int l = grow(left_idx, depth + 1);
    nodes_[self].left = l;
    const int r = grow(right_idx, depth + 1);
    nodes_[self].right = r;
    return self;
  }

  std::vector<std::size_t> candidate_features() {
    std::vector<std::size_t> all(kFeatureCount);
    std::iota(all.begin(), all.end(), 0);
    const std::size_t m = options_.max_features;
    if (m == 0 || m >= kFeatureCount) return all;
    for (std::size_t i = 0; i < m; ++i) {
      const auto j = i + rng_.uniform_index(kFeatureCount - i);
      std::swap(all[i], all[j]);
    }
    all.resize(m);
    std::sort(all.begin(), all.end());
    return all;
  }

  std::span<const LabeledVector> data_;
  TreeOptions options_;
  Rng rng_;
  std::vector<TreeNode> nodes_;
};

void require_two_classes(std::span<const LabeledVector> data) {
  if (data.empty()) throw Error(Errc::DegenerateData, "no training data");
  const ClassLabel first = data.front().y;
  for (const auto& row : data) {
    if (row.y != first) return;
  }
  throw Error(Errc::DegenerateData, "training data holds a single class");
}

}  // namespace

DecisionTree grow_tree(std::span<const LabeledVector> data, const TreeOptions& options) {
  if (data.empty()) throw Error(Errc::DegenerateData, "no training data");
  if (options.max_depth < 0) throw Error(Errc::InvalidArgument, "max_depth must be >= 0");
  if (options.min_leaf < 1) throw Error(Errc::InvalidArgument, "min_leaf must be >= 1");
  return TreeBuilder(data, options).build();
}

ClassifierModel train_decision_tree(std::span<const LabeledVector> data, int max_depth,
                                    std::size_t min_leaf, std::string name) {
  require_two_classes(data);
  TreeOptions options;
  options.max_depth = max_depth;
  options.min_leaf = min_leaf;
  return ClassifierModel(std::move(name), grow_tree(data, options));
}

ClassifierModel train_random_forest(std::span<const LabeledVector> data,
                                    const ForestOptions& options, std::string name) {
  require_two_classes(data);
  if (options.tree_count < 1) throw Error(Errc::InvalidArgument, "tree_count must be >= 1");

  RandomForest forest;
  forest.trees.reserve(options.tree_count);
  std::vector<LabeledVector> sample;
  for (std::size_t t = 0; t < options.tree_count; ++t) {
    const std::uint64_t tree_seed = mix_seed(options.seed, t);
    TreeOptions tree_options;
    tree_options.max_depth = options.max_depth;
    tree_options.min_leaf = options.min_leaf;
    tree_options.seed = tree_seed;
    tree_options.max_features =
        options.feature_subsampling
            ? static_cast<std::size_t>(std::lround(std::sqrt(static_cast<double>(kFeatureCount))))
            : 0;
    if (options.bootstrap) {
      Rng rng(mix_seed(tree_seed, 0xb0075742ULL));
      sample.clear();
      for (std::size_t i = 0; i < data.size(); ++i) {
        sample.push_back(data[rng.uniform_index(data.size())]);
      }
      forest.trees.push_back(grow_tree(sample, tree_options));
    } else {
      forest.trees.push_back(grow_tree(data, tree_options));
    }
  }
  return ClassifierModel(std::move(name), std::move(forest));
}

Posteriors tree_posterior(const DecisionTree& tree, const FeatureVector& x) {
  if (tree.nodes.empty()) throw Error(Errc::UntrainedModel, "decision tree has no nodes");
  std::size_t node = 0;
  while (tree.nodes[node].feature >= 0) {
    const auto& n = tree.nodes[node];
    node = static_cast<std::size_t>(x[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left
                                                                                           : n.right);
  }
  return tree.nodes[node].posterior;
}

// ---------------------------------------------------------------------------
// k-NN

ExemplarStore ExemplarStore::build(std::span<const LabeledVector> exemplars) {
  ExemplarStore store;
  store.count = exemplars.size();
  store.columns.resize(kFeatureCount * store.count);
  store.labels.reserve(store.count);
  for (std::size_t i = 0; i < store.count; ++i) {
    for (std::size_t d = 0; d < kFeatureCount; ++d) {
      store.columns[d * store.count + i] = exemplars[i].x[d];
    }
    store.labels.push_back(exemplars[i].y);
  }
  return store;
}

ClassifierModel make_knn(std::span<const LabeledVector> exemplars, std::size_t k,
                         std::string name) {
  if (exemplars.empty()) throw Error(Errc::EmptyExemplars, "k-NN needs exemplars");
  if (k < 1 || k > exemplars.size()) {
    throw Error(Errc::InvalidArgument, "k must lie in [1, exemplar count]");
  }
  return ClassifierModel(std::move(name), KNearest{k, ExemplarStore::build(exemplars)});
}

ClassifierModel make_external(std::string name, std::string source_id) {
  if (source_id.empty()) source_id = name;
  return ClassifierModel(std::move(name), ExternalModel{std::move(source_id)});
}

Prediction predict_knn(const ExemplarStore& store, std::size_t k, const FeatureVector& x) {
  if (store.count == 0) throw Error(Errc::EmptyExemplars, "k-NN needs exemplars");
  if (k < 1 || k > store.count) {
    throw Error(Errc::InvalidArgument, "k must lie in [1, exemplar count]");
  }
  std::vector<double> dist(store.count);
  kernels::squared_distances(store.columns, store.count, store.count, x.span(), dist);

  std::vector<std::size_t> order(store.count);
  std::iota(order.begin(), order.end(), 0);
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k), order.end(),
                    [&](std::size_t a, std::size_t b) {
                      return dist[a] < dist[b] || (dist[a] == dist[b] && a < b);
                    });
  Posteriors p{};
  for (std::size_t i = 0; i < k; ++i) p[index_of(store.labels[order[i]])] += 1.0;
  for (double& v : p) v /= static_cast<double>(k);
  return make_prediction(p);
}

Prediction predict_knn(std::span<const LabeledVector> exemplars, std::size_t k,
                       const FeatureVector& x) {
  if (exemplars.empty()) throw Error(Errc::EmptyExemplars, "k-NN needs exemplars");
  return predict_knn(ExemplarStore::build(exemplars), k, x);
}

// ---------------------------------------------------------------------------

Prediction predict(const ClassifierModel& model, const FeatureVector& x,
                   const Posteriors* injected) {
  if (!model.trained()) {
    throw Error(Errc::UntrainedModel, "model '" + model.name() + "' is not trained");
  }
  return std::visit(
      [&](const auto& p) -> Prediction {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, DecisionTree>) {
          return make_prediction(tree_posterior(p, x));
        } else if constexpr (std::is_same_v<T, RandomForest>) {
          Posteriors sum{};
          for (const auto& tree : p.trees) {
            const auto post = tree_posterior(tree, x);
            for (std::size_t c = 0; c < kClassCount; ++c) sum[c] += post[c];
          }
          for (double& v : sum) v /= static_cast<double>(p.trees.size());
          return make_prediction(sum);
        } else if constexpr (std::is_same_v<T, KNearest>) {
          return predict_knn(p.exemplars, p.k, x);
        } else {
          if (injected == nullptr) {
            throw Error(Errc::UntrainedModel,
                        "external model '" + model.name() + "' has no injected posteriors");
          }
          return make_prediction(*injected);
        }
      },
      model.parameters());
}

double score_margin(const MarginModel& model, const FeatureVector& x) {
  const double z = kernels::dot(model.weights, x.span()) + model.bias;
  return 1.0 / (1.0 + std::exp(-z));
}

double posterior_odds(const Posteriors& posteriors) {
  const double benign = std::max(posteriors[index_of(ClassLabel::Benign)], 1e-12);
  return (1.0 - posteriors[index_of(ClassLabel::Benign)]) / benign;
}

bool likelihood_ratio_alert(const Posteriors& posteriors, double eta) {
  if (!(eta > 0.0)) throw Error(Errc::InvalidArgument, "eta must be positive");
  return posterior_odds(posteriors) >= eta;
}

double eta_for_threshold(double tau) {
  if (!(tau > 0.0 && tau < 1.0)) throw Error(Errc::InvalidArgument, "tau must lie in (0, 1)");
  return tau / (1.0 - tau);
}

double aggregate_scores(std::span<const double> scores) {
  if (scores.empty()) throw Error(Errc::EmptyList, "no scores to aggregate");
  std::vector<double> sorted(scores.begin(), scores.end());
  std::sort(sorted.begin(), sorted.end());
  const double lo = sorted.front();
  double offset = 0.0;
  for (double s : sorted) offset += s - lo;
  return std::clamp(lo + offset / static_cast<double>(sorted.size()), lo, sorted.back());
}

Consensus consensus(std::span<const Prediction> predictions) {
  if (predictions.empty()) throw Error(Errc::EmptyList, "no predictions");
  std::array<std::size_t, kClassCount> votes{};
  for (const auto& p : predictions) ++votes[index_of(p.label)];
  std::size_t best = 0;
  for (std::size_t c = 1; c < kClassCount; ++c) {
    if (votes[c] > votes[best]) best = c;
  }
  return Consensus{static_cast<ClassLabel>(best), votes[best], predictions.size()};
}

ClassLabel suspected_attack(std::span<const Prediction> predictions) {
  if (predictions.empty()) throw Error(Errc::EmptyList, "no predictions");
  std::array<std::size_t, kClassCount> votes{};
  Posteriors mass{};
  for (const auto& p : predictions) {
    ++votes[index_of(p.label)];
    for (std::size_t c = 0; c < kClassCount; ++c) mass[c] += p.posteriors[c];
  }
  std::size_t best = 0;
  for (std::size_t c = 1; c < kClassCount; ++c) {
    if (votes[c] > 0 && (best == 0 || votes[c] > votes[best])) best = c;
  }
  if (best != 0) return static_cast<ClassLabel>(best);
  best = 1;
  for (std::size_t c = 2; c < kClassCount; ++c) {
    if (mass[c] > mass[best]) best = c;
  }
  return static_cast<ClassLabel>(best);
}

}  // namespace edgeids
