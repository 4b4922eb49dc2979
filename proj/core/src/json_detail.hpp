#pragma once

#include <json.hpp>

#include "leakprobe/forest.hpp"

namespace leakprobe::detail {

using ordered_json = nlohmann::ordered_json;

inline ordered_json forest_config_to_json(const ForestConfig& config) {
  ordered_json j;
  j["n_trees"] = config.n_trees;
  if (config.max_features) {
    j["max_features"] = *config.max_features;
  } else {
    j["max_features"] = nullptr;
  }
  j["bootstrap"] = config.bootstrap;
  j["min_samples_split"] = config.min_samples_split;
  j["min_samples_leaf"] = config.min_samples_leaf;
  if (config.max_depth) {
    j["max_depth"] = *config.max_depth;
  } else {
    j["max_depth"] = nullptr;
  }
  j["seed"] = config.seed;
  return j;
}

inline ForestConfig forest_config_from_json(const ordered_json& j) {
  ForestConfig config;
  config.n_trees = j.at("n_trees").get<int>();
  if (!j.at("max_features").is_null()) {
    config.max_features = j.at("max_features").get<int>();
  }
  config.bootstrap = j.at("bootstrap").get<bool>();
  config.min_samples_split = j.at("min_samples_split").get<int>();
  config.min_samples_leaf = j.at("min_samples_leaf").get<int>();
  if (!j.at("max_depth").is_null()) {
    config.max_depth = j.at("max_depth").get<int>();
  }
  config.seed = j.at("seed").get<std::uint64_t>();
  return config;
}

}  // namespace leakprobe::detail
