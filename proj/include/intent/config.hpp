#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "intent/hashtags.hpp"
#include "intent/masks.hpp"
#include "intent/model.hpp"
#include "intent/saliency.hpp"
#include "intent/taxonomy.hpp"
#include "intent/training.hpp"

namespace intent {

struct SaliencyConfig {
  double tau_cam = 0.4;
};

struct EvalConfig {
  double threshold = 0.5;
  std::vector<double> levels{0.0, 0.25, 0.5, 0.75, 1.0};
  bool fine_tune = false;
  bool use_hashtags = true;
  std::vector<int> knn_sweep{25, 50, 100, 150, 200, 250};
};

struct AnnotationConfig {
  double hitl_tau = 0.35;
};

// One file per experiment. Every section and key is optional; missing values
// keep the defaults below, unknown keys are rejected.
struct ExperimentConfig {
  static constexpr int kVersion = 1;

  std::uint64_t seed = 0;
  int resize_longest = 1280;
  ModelConfig model;
  LossConfig loss;
  TrainConfig train;
  PanopticConfig panoptic;
  double tau_det = 0.6;
  SaliencyConfig saliency;
  HashtagFeatureConfig hashtags;
  EvalConfig eval;
  AnnotationConfig annotation;
  GroupingConfig grouping;
  ClassSets classes;

  void validate() const;
};

// Throws ConfigError on syntax errors, unknown keys, wrong types or a
// version other than kVersion.
ExperimentConfig parse_config(std::string_view text);
ExperimentConfig load_config(const std::filesystem::path& path);
nlohmann::json config_to_json(const ExperimentConfig& cfg);

nlohmann::json model_config_to_json(const ModelConfig& cfg);
ModelConfig model_config_from_json(const nlohmann::json& j);

}  // namespace intent
