#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "edgeids/features.hpp"
#include "edgeids/labels.hpp"

namespace edgeids {

struct LabeledVector {
  FeatureVector x;
  ClassLabel y = ClassLabel::Benign;
};

// Classifier output. anomaly_score is 1 - P(Benign); max_malicious is the
// largest non-benign posterior (the "most probable attack" score).
struct Prediction {
  ClassLabel label = ClassLabel::Benign;
  Posteriors posteriors{};
  double anomaly_score = 0.0;
  double max_malicious = 0.0;
};

// Builds a Prediction from posteriors that must be non-negative and sum to 1
// within 1e-9. Label is the argmax with ties to the lowest class index.
Prediction make_prediction(const Posteriors& posteriors);

// Posterior putting `score` on `label` and the rest on Benign (or, for a
// Benign label, 1 - score on Benign and score on Other).
Posteriors posteriors_from_score(ClassLabel label, double score);

struct TreeNode {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0.0;
  int left = -1;     // taken when x[feature] <= threshold
  int right = -1;
  Posteriors posterior{};
};

struct DecisionTree {
  std::vector<TreeNode> nodes;  // nodes[0] is the root
};

struct RandomForest {
  std::vector<DecisionTree> trees;
};

// Column-major exemplar block consumed by the distance kernel.
struct ExemplarStore {
  std::size_t count = 0;
  std::vector<double> columns;  // columns[d * count + i]
  std::vector<ClassLabel> labels;

  static ExemplarStore build(std::span<const LabeledVector> exemplars);
};

struct KNearest {
  std::size_t k = 0;
  ExemplarStore exemplars;
};

// Posteriors come from outside (replayed deep-model scores, scripts).
struct ExternalModel {
  std::string source_id;
};

enum class ModelKind : std::uint32_t { DecisionTree = 1, RandomForest = 2, KNearest = 3, External = 4 };

std::string_view to_string(ModelKind kind) noexcept;

class ClassifierModel {
 public:
  using Parameters = std::variant<DecisionTree, RandomForest, KNearest, ExternalModel>;

  ClassifierModel() = default;
  ClassifierModel(std::string name, Parameters parameters)
      : name_(std::move(name)), parameters_(std::move(parameters)) {}

  const std::string& name() const noexcept { return name_; }
  ModelKind kind() const noexcept;
  const Parameters& parameters() const noexcept { return parameters_; }
  bool trained() const noexcept;

 private:
  std::string name_;
  Parameters parameters_;
};

struct TreeOptions {
  int max_depth = 8;
  std::size_t min_leaf = 1;
  // Features examined per split; 0 = all. Chosen uniformly per split.
  std::size_t max_features = 0;
  std::uint64_t seed = 0;
};

// CART with Gini impurity. Throws Error(DegenerateData) with fewer than two
// classes and Error(InvalidArgument) for max_depth < 0 or min_leaf < 1.
ClassifierModel train_decision_tree(std::span<const LabeledVector> data, int max_depth,
                                    std::size_t min_leaf, std::string name = "DT");
DecisionTree grow_tree(std::span<const LabeledVector> data, const TreeOptions& options);

struct ForestOptions {
  std::size_t tree_count = 25;
  int max_depth = 8;
  std::size_t min_leaf = 1;
  std::uint64_t seed = 1;
  bool bootstrap = true;
  bool feature_subsampling = true;  // round(sqrt(12)) = 3 features per split
};

ClassifierModel train_random_forest(std::span<const LabeledVector> data,
                                    const ForestOptions& options, std::string name = "RF");

ClassifierModel make_knn(std::span<const LabeledVector> exemplars, std::size_t k,
                         std::string name = "KNN");

ClassifierModel make_external(std::string name, std::string source_id = {});

// Euclidean k-NN. Distance ties go to the lower exemplar index; posterior is
// the label frequency among the k neighbours.
// Throws Error(EmptyExemplars) / Error(InvalidArgument) for bad k.
Prediction predict_knn(std::span<const LabeledVector> exemplars, std::size_t k,
                       const FeatureVector& x);
Prediction predict_knn(const ExemplarStore& store, std::size_t k, const FeatureVector& x);

Posteriors tree_posterior(const DecisionTree& tree, const FeatureVector& x);

// `injected` supplies the posteriors of External models and is ignored for
// the others. Throws Error(UntrainedModel) for an empty model or an External
// model without injected posteriors.
Prediction predict(const ClassifierModel& model, const FeatureVector& x,
                   const Posteriors* injected = nullptr);

struct MarginModel {
  FeatureVector::Values weights{};
  double bias = 0.0;
};

// logistic(w.x + b), in (0, 1).
double score_margin(const MarginModel& model, const FeatureVector& x);

// (1 - P(Benign)) / P(Benign) with P(Benign) floored at 1e-12.
double posterior_odds(const Posteriors& posteriors);
bool likelihood_ratio_alert(const Posteriors& posteriors, double eta);
// eta such that odds >= eta  <=>  anomaly score >= tau.
double eta_for_threshold(double tau);

// Arithmetic mean. Computed as min + mean of offsets from the min over the
// sorted scores, so it is permutation-invariant, exact for constant input and
// clamped to [min, max]. Throws Error(EmptyList).
double aggregate_scores(std::span<const double> scores);

struct Consensus {
  ClassLabel label = ClassLabel::Benign;  // modal argmax label, ties to lowest index
  std::size_t agreeing = 0;
  std::size_t total = 0;
};

Consensus consensus(std::span<const Prediction> predictions);

// Label to reason about on an alert: the modal non-benign label among the
// predictions, or (if every model said benign) the attack class with the
// largest mean posterior.
ClassLabel suspected_attack(std::span<const Prediction> predictions);

}  // namespace edgeids
