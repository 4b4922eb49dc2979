#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "leakprobe/probes.hpp"

namespace leakprobe {

/// Random-forest hyperparameters. The defaults are the widely used ones:
/// 100 trees, Gini criterion, floor(sqrt(D)) features per node, bootstrap
/// sampling, unlimited depth.
struct ForestConfig {
  int n_trees = 100;
  std::optional<int> max_features;  // unset -> floor(sqrt(D)), at least 1
  bool bootstrap = true;
  int min_samples_split = 2;
  int min_samples_leaf = 1;
  std::optional<int> max_depth;  // unset -> unlimited
  std::uint64_t seed = 0;

  bool operator==(const ForestConfig&) const = default;
};

/// One tree node. feature < 0 marks a leaf carrying per-class sample counts;
/// internal nodes route `value <= threshold` to `left`, `> threshold` to
/// `right`.
struct TreeNode {
  int feature = -1;
  double threshold = 0.0;
  std::int32_t left = -1;
  std::int32_t right = -1;
  std::vector<std::int64_t> class_counts;

  bool is_leaf() const { return feature < 0; }
};

struct DecisionTree {
  std::vector<TreeNode> nodes;  // root at index 0, preorder layout

  /// Leaf argmax; count ties resolve to the lowest class index.
  int predict(std::span<const double> features) const;
};

struct RandomForestModel {
  std::vector<DecisionTree> trees;
  ForestConfig config;
  int n_classes = 0;
  int n_features = 0;
};

/// Gini impurity 1 - sum((c_i / n)^2). Counts must be non-negative with a
/// positive total.
double gini_impurity(std::span<const std::int64_t> class_counts);

struct SplitCandidate {
  int feature = 0;
  double threshold = 0.0;
  double impurity_decrease = 0.0;
};

/// Scans the given feature columns over `rows` (indices into `data`),
/// evaluating thresholds at midpoints between consecutive distinct sorted
/// values, and returns the split with the largest weighted Gini decrease.
/// Ties resolve to the lower feature index, then the lower threshold.
/// Returns nullopt when the rows share one label or no split satisfies
/// min_samples_leaf. Zero-decrease splits are valid candidates.
std::optional<SplitCandidate> best_split(const FeatureMatrix& data,
                                         std::span<const std::size_t> rows,
                                         std::span<const int> features,
                                         int min_samples_leaf);

/// Trains the ensemble. Tree t consumes a dedicated xoshiro256** stream
/// derived from (config.seed, t): first the bootstrap draw (N draws with
/// replacement, when enabled), then the per-node feature subsets in preorder.
/// The result is a pure function of (matrix, config); `threads` only affects
/// wall time.
RandomForestModel fit(const FeatureMatrix& matrix, const ForestConfig& config,
                      unsigned threads = 0);

/// Majority vote over the trees' leaf-argmax predictions; vote ties resolve
/// to the lowest class index.
int predict(const RandomForestModel& model, std::span<const double> features);

std::vector<int> predict_all(const RandomForestModel& model,
                             const FeatureMatrix& matrix,
                             unsigned threads = 0);

/// Percentage of rows whose predicted class equals the label.
double accuracy(const RandomForestModel& model, const FeatureMatrix& matrix,
                unsigned threads = 0);

/// Versioned JSON serialization (schema leakprobe.forest.v1) for audit
/// provenance. No cross-version guarantees.
std::string forest_to_json(const RandomForestModel& model);
RandomForestModel forest_from_json(const std::string& text);

}  // namespace leakprobe
