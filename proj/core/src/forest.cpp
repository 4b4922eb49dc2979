#include "leakprobe/forest.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <utility>
#include <vector>

#include <json.hpp>

#include "json_detail.hpp"
#include "leakprobe/error.hpp"
#include "leakprobe/rng.hpp"
#include "leakprobe/version.hpp"
#include "parallel_for.hpp"

namespace leakprobe {

namespace {

using ordered_json = nlohmann::ordered_json;

int resolve_max_features(std::size_t n_features, const ForestConfig& config) {
  if (config.max_features) {
    return *config.max_features;
  }
  const int root = static_cast<int>(
      std::floor(std::sqrt(static_cast<double>(n_features))));
  return std::max(1, root);
}

void validate_fit_inputs(const FeatureMatrix& matrix,
                         const ForestConfig& config) {
  if (matrix.rows < 2) {
    throw InvalidArgument("fit: needs at least 2 rows, got " +
                          std::to_string(matrix.rows));
  }
  if (matrix.cols < 1) {
    throw InvalidArgument("fit: the matrix has no feature columns");
  }
  if (matrix.labels.size() != matrix.rows) {
    throw InvalidArgument("fit: " + std::to_string(matrix.labels.size()) +
                          " labels for " + std::to_string(matrix.rows) +
                          " rows");
  }
  if (matrix.n_classes < 1) {
    throw InvalidArgument("fit: n_classes must be >= 1");
  }
  std::vector<char> seen(matrix.n_classes, 0);
  for (int label : matrix.labels) {
    if (label < 0 || label >= matrix.n_classes) {
      throw InvalidArgument("fit: label " + std::to_string(label) +
                            " outside 0.." +
                            std::to_string(matrix.n_classes - 1));
    }
    seen[label] = 1;
  }
  if (std::count(seen.begin(), seen.end(), 1) < 2) {
    throw InvalidArgument(
        "fit: every row carries the same label; training needs at least "
        "2 classes present");
  }
  if (config.n_trees < 1) {
    throw InvalidArgument("fit: n_trees must be >= 1");
  }
  if (config.min_samples_split < 2) {
    throw InvalidArgument("fit: min_samples_split must be >= 2");
  }
  if (config.min_samples_leaf < 1) {
    throw InvalidArgument("fit: min_samples_leaf must be >= 1");
  }
  if (config.max_features &&
      (*config.max_features < 1 ||
       static_cast<std::size_t>(*config.max_features) > matrix.cols)) {
    throw InvalidArgument("fit: max_features must be in 1.." +
                          std::to_string(matrix.cols));
  }
  if (config.max_depth && *config.max_depth < 0) {
    throw InvalidArgument("fit: max_depth must be >= 0");
  }
}

/// Grows one CART tree over rows[begin:end) ranges, assigning node indices
/// in preorder; the feature-subset draws therefore consume `rng` in preorder
/// as well.
DecisionTree grow_tree(const FeatureMatrix& matrix, const ForestConfig& config,
                       int max_features, std::vector<std::size_t> rows,
                       Xoshiro256ss& rng) {
  const int n_features = static_cast<int>(matrix.cols);
  DecisionTree tree;

  struct Work {
    std::int32_t parent;
    bool is_left;
    int depth;
    std::size_t begin;
    std::size_t end;
  };
  std::vector<Work> stack;
  stack.push_back({-1, false, 0, 0, rows.size()});

  std::vector<int> pool(n_features);
  std::vector<int> subset;
  while (!stack.empty()) {
    const Work work = stack.back();
    stack.pop_back();
    const auto index = static_cast<std::int32_t>(tree.nodes.size());
    tree.nodes.emplace_back();
    if (work.parent >= 0) {
      auto& link = work.is_left ? tree.nodes[work.parent].left
                                : tree.nodes[work.parent].right;
      link = index;
    }

    std::vector<std::int64_t> counts(matrix.n_classes, 0);
    for (std::size_t i = work.begin; i < work.end; ++i) {
      ++counts[matrix.labels[rows[i]]];
    }
    const std::size_t size = work.end - work.begin;
    const bool pure =
        std::count_if(counts.begin(), counts.end(),
                      [](std::int64_t c) { return c > 0; }) <= 1;
    const bool depth_capped =
        config.max_depth && work.depth >= *config.max_depth;

    std::optional<SplitCandidate> candidate;
    if (!pure && !depth_capped &&
        size >= static_cast<std::size_t>(config.min_samples_split)) {
      std::span<const int> feature_view;
      std::iota(pool.begin(), pool.end(), 0);
      if (max_features == n_features) {
        feature_view = pool;  // all features, no draws
      } else {
        for (int i = 0; i < max_features; ++i) {
          const auto j =
              i + static_cast<int>(rng.uniform_below(
                      static_cast<std::uint64_t>(n_features - i)));
          std::swap(pool[i], pool[j]);
        }
        subset.assign(pool.begin(), pool.begin() + max_features);
        std::sort(subset.begin(), subset.end());
        feature_view = subset;
      }
      candidate = best_split(matrix,
                             std::span<const std::size_t>(rows).subspan(
                                 work.begin, size),
                             feature_view, config.min_samples_leaf);
    }

    if (!candidate) {
      tree.nodes[index].class_counts = std::move(counts);
      continue;
    }

    const int feature = candidate->feature;
    const double threshold = candidate->threshold;
    const auto mid =
        std::partition(rows.begin() + static_cast<std::ptrdiff_t>(work.begin),
                       rows.begin() + static_cast<std::ptrdiff_t>(work.end),
                       [&](std::size_t r) {
                         return matrix.at(r, static_cast<std::size_t>(
                                                 feature)) <= threshold;
                       });
    const auto split_at =
        static_cast<std::size_t>(mid - rows.begin());
    tree.nodes[index].feature = feature;
    tree.nodes[index].threshold = threshold;
    // Right pushed first so the left child pops next: preorder.
    stack.push_back({index, false, work.depth + 1, split_at, work.end});
    stack.push_back({index, true, work.depth + 1, work.begin, split_at});
  }
  return tree;
}

int argmax_lowest(std::span<const std::int64_t> counts) {
  int best = 0;
  for (int c = 1; c < static_cast<int>(counts.size()); ++c) {
    if (counts[c] > counts[best]) {
      best = c;
    }
  }
  return best;
}

ordered_json node_to_json(const TreeNode& node) {
  ordered_json j;
  if (node.is_leaf()) {
    j["counts"] = node.class_counts;
  } else {
    j["feature"] = node.feature;
    j["threshold"] = node.threshold;
    j["left"] = node.left;
    j["right"] = node.right;
  }
  return j;
}

TreeNode node_from_json(const ordered_json& j) {
  TreeNode node;
  if (j.contains("counts")) {
    node.class_counts = j.at("counts").get<std::vector<std::int64_t>>();
  } else {
    node.feature = j.at("feature").get<int>();
    node.threshold = j.at("threshold").get<double>();
    node.left = j.at("left").get<std::int32_t>();
    node.right = j.at("right").get<std::int32_t>();
  }
  return node;
}

}  // namespace

int DecisionTree::predict(std::span<const double> features) const {
  std::int32_t index = 0;
  while (!nodes[index].is_leaf()) {
    const TreeNode& node = nodes[index];
    index = features[static_cast<std::size_t>(node.feature)] <= node.threshold
                ? node.left
                : node.right;
  }
  return argmax_lowest(nodes[index].class_counts);
}

double gini_impurity(std::span<const std::int64_t> class_counts) {
  std::int64_t total = 0;
  for (std::int64_t count : class_counts) {
    if (count < 0) {
      throw InvalidArgument("gini_impurity: counts must be non-negative");
    }
    total += count;
  }
  if (total == 0) {
    throw InvalidArgument("gini_impurity: total count must be positive");
  }
  const double n = static_cast<double>(total);
  double sum_sq = 0.0;
  for (std::int64_t count : class_counts) {
    const double p = static_cast<double>(count) / n;
    sum_sq += p * p;
  }
  return 1.0 - sum_sq;
}

std::optional<SplitCandidate> best_split(const FeatureMatrix& data,
                                         std::span<const std::size_t> rows,
                                         std::span<const int> features,
                                         int min_samples_leaf) {
  if (rows.empty()) {
    throw InvalidArgument("best_split: rows must be non-empty");
  }
  std::vector<std::int64_t> total(data.n_classes, 0);
  for (std::size_t r : rows) {
    ++total[data.labels[r]];
  }
  if (std::count_if(total.begin(), total.end(),
                    [](std::int64_t c) { return c > 0; }) <= 1) {
    return std::nullopt;
  }
  const double parent = gini_impurity(total);
  const double n = static_cast<double>(rows.size());
  const auto min_leaf = static_cast<std::int64_t>(min_samples_leaf);

  std::optional<SplitCandidate> best;
  std::vector<std::pair<double, int>> column;
  column.reserve(rows.size());
  std::vector<std::int64_t> left(data.n_classes);
  std::vector<std::int64_t> right(data.n_classes);
  for (int feature : features) {
    column.clear();
    for (std::size_t r : rows) {
      column.emplace_back(data.at(r, static_cast<std::size_t>(feature)),
                          data.labels[r]);
    }
    std::sort(column.begin(), column.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });

    std::fill(left.begin(), left.end(), 0);
    std::copy(total.begin(), total.end(), right.begin());
    for (std::size_t i = 0; i + 1 < column.size(); ++i) {
      ++left[column[i].second];
      --right[column[i].second];
      if (column[i].first == column[i + 1].first) {
        continue;
      }
      const auto nl = static_cast<std::int64_t>(i + 1);
      const auto nr = static_cast<std::int64_t>(column.size()) - nl;
      if (nl < min_leaf || nr < min_leaf) {
        continue;
      }
      // Midpoint between consecutive distinct values; if rounding lands on
      // the upper value, fall back to the lower so `<= threshold` keeps the
      // partition this candidate was scored for.
      double threshold = std::midpoint(column[i].first, column[i + 1].first);
      if (threshold >= column[i + 1].first) {
        threshold = column[i].first;
      }
      const double decrease = parent -
                              (static_cast<double>(nl) / n) *
                                  gini_impurity(left) -
                              (static_cast<double>(nr) / n) *
                                  gini_impurity(right);
      const bool wins =
          !best || decrease > best->impurity_decrease ||
          (decrease == best->impurity_decrease &&
           (feature < best->feature ||
            (feature == best->feature && threshold < best->threshold)));
      if (wins) {
        best = SplitCandidate{feature, threshold, decrease};
      }
    }
  }
  return best;
}

RandomForestModel fit(const FeatureMatrix& matrix, const ForestConfig& config,
                      unsigned threads) {
  validate_fit_inputs(matrix, config);
  const int max_features = resolve_max_features(matrix.cols, config);

  RandomForestModel model;
  model.config = config;
  model.n_classes = matrix.n_classes;
  model.n_features = static_cast<int>(matrix.cols);
  model.trees.resize(static_cast<std::size_t>(config.n_trees));
  detail::parallel_for(
      model.trees.size(), threads, [&](std::size_t t) {
        Xoshiro256ss rng(
            Xoshiro256ss::derive_seed(config.seed, kForestSeedDomain, t));
        std::vector<std::size_t> rows(matrix.rows);
        if (config.bootstrap) {
          for (auto& r : rows) {
            r = static_cast<std::size_t>(rng.uniform_below(matrix.rows));
          }
        } else {
          std::iota(rows.begin(), rows.end(), std::size_t{0});
        }
        model.trees[t] =
            grow_tree(matrix, config, max_features, std::move(rows), rng);
      });
  return model;
}

int predict(const RandomForestModel& model, std::span<const double> features) {
  if (features.size() != static_cast<std::size_t>(model.n_features)) {
    throw InvalidArgument("predict: row has " +
                          std::to_string(features.size()) +
                          " features, the model expects " +
                          std::to_string(model.n_features));
  }
  std::vector<std::int64_t> votes(model.n_classes, 0);
  for (const DecisionTree& tree : model.trees) {
    ++votes[tree.predict(features)];
  }
  return argmax_lowest(votes);
}

std::vector<int> predict_all(const RandomForestModel& model,
                             const FeatureMatrix& matrix, unsigned threads) {
  if (matrix.cols != static_cast<std::size_t>(model.n_features)) {
    throw InvalidArgument("predict_all: matrix has " +
                          std::to_string(matrix.cols) +
                          " features, the model expects " +
                          std::to_string(model.n_features));
  }
  std::vector<int> predictions(matrix.rows);
  detail::parallel_for(matrix.rows, threads, [&](std::size_t i) {
    predictions[i] = predict(model, matrix.row(i));
  });
  return predictions;
}

double accuracy(const RandomForestModel& model, const FeatureMatrix& matrix,
                unsigned threads) {
  if (matrix.rows == 0) {
    throw InvalidArgument("accuracy: the matrix is empty");
  }
  const std::vector<int> predictions = predict_all(model, matrix, threads);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < matrix.rows; ++i) {
    correct += predictions[i] == matrix.labels[i];
  }
  return 100.0 * static_cast<double>(correct) /
         static_cast<double>(matrix.rows);
}

std::string forest_to_json(const RandomForestModel& model) {
  ordered_json j;
  j["schema"] = kForestSchema;
  j["toolkit_version"] = kVersion;
  j["n_classes"] = model.n_classes;
  j["n_features"] = model.n_features;
  j["config"] = detail::forest_config_to_json(model.config);
  ordered_json trees = ordered_json::array();
  for (const DecisionTree& tree : model.trees) {
    ordered_json nodes = ordered_json::array();
    for (const TreeNode& node : tree.nodes) {
      nodes.push_back(node_to_json(node));
    }
    ordered_json t;
    t["nodes"] = std::move(nodes);
    trees.push_back(std::move(t));
  }
  j["trees"] = std::move(trees);
  return j.dump(2) + "\n";
}

RandomForestModel forest_from_json(const std::string& text) {
  ordered_json j;
  try {
    j = ordered_json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("forest_from_json: not valid JSON: ") +
                    e.what());
  }
  try {
    if (j.at("schema").get<std::string>() != kForestSchema) {
      throw DataError("forest_from_json: unsupported schema \"" +
                      j.at("schema").get<std::string>() + "\"");
    }
    RandomForestModel model;
    model.n_classes = j.at("n_classes").get<int>();
    model.n_features = j.at("n_features").get<int>();
    model.config = detail::forest_config_from_json(j.at("config"));
    for (const auto& tree_json : j.at("trees")) {
      DecisionTree tree;
      for (const auto& node_json : tree_json.at("nodes")) {
        tree.nodes.push_back(node_from_json(node_json));
      }
      model.trees.push_back(std::move(tree));
    }
    return model;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("forest_from_json: malformed model: ") +
                    e.what());
  }
}

}  // namespace leakprobe
