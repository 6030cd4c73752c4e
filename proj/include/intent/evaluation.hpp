#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "intent/dataset.hpp"
#include "intent/grid.hpp"
#include "intent/hashtags.hpp"
#include "intent/model.hpp"
#include "intent/taxonomy.hpp"
#include "intent/training.hpp"

namespace intent {

struct F1Report {
  std::vector<double> per_class;
  double macro = 0.0;
};

// A sample is predicted positive for a class when its score >= threshold.
// Classes with no positives and no predictions score 0.
F1Report macro_f1(const Grid<double>& scores, const Grid<std::uint8_t>& labels, double threshold = 0.5);

struct ThresholdPoint {
  double threshold = 0.0;
  double macro = 0.0;
};
std::vector<ThresholdPoint> threshold_sweep(const Grid<double>& scores, const Grid<std::uint8_t>& labels,
                                            const std::vector<double>& thresholds);

// Expected F1 of a fair coin flip per sample for a class with the given
// positive rate: precision = prevalence, recall = 0.5.
double random_guess_f1(double prevalence);

// Class id -> group name. Must cover every class.
using Grouping = std::map<int, std::string>;

Grouping content_grouping(const std::vector<GroupAssignment>& groups);
Grouping difficulty_grouping(const std::vector<GroupAssignment>& groups);

// Unweighted mean F1 inside each group plus "All" over every class.
std::map<std::string, double> group_report(const std::vector<double>& per_class_f1, const Grouping& grouping);

struct RunStat {
  double mean = 0.0;
  double stddev = 0.0;  // sample standard deviation (n - 1)
  int runs = 0;
  bool single_run = false;  // std reported as 0 because only one run exists
};

std::map<std::string, RunStat> aggregate_runs(const std::vector<std::map<std::string, double>>& runs);

enum class DisruptionTarget { Object, Context };

// Blacks out (zeroes every channel of) connected components of `mask`,
// largest first, until at least `level` of the mask's pixels are removed.
// Level 0 leaves the image untouched; level 1 removes the whole mask.
Image disrupt_image(const Image& image, const Raster& mask, double level);

struct DisruptionConfig {
  double threshold = 0.5;
  bool use_hashtags = true;
  // Fine-tune a copy of the model on the disrupted training set before
  // evaluating each level.
  bool fine_tune = false;
  const Dataset* fine_tune_set = nullptr;
  TrainConfig fine_tune_cfg;
  LossConfig fine_tune_loss;
  ClassSets fine_tune_sets;
};

Dataset disrupt_dataset(const Dataset& data, double level, DisruptionTarget target);

// Per-class F1 at each removal level. Series are on the Removed axis.
std::vector<DisruptionSeries> run_disruption_study(const IntentModel& model, const Dataset& data,
                                                   const std::vector<double>& levels, DisruptionTarget target,
                                                   const DisruptionConfig& cfg = {});

// Structured text for study results:
// {"version":1,"target":...,"axis":...,"levels":[...],"f1":[[...per class]]}
std::string serialize_study(const std::vector<DisruptionSeries>& series, DisruptionTarget target);
std::vector<DisruptionSeries> parse_study(std::string_view text);

// Linear probe on fixed features: per class, the score is
// sigmoid(|x - neg centroid|^2 - |x - pos centroid|^2), so >= 0.5 means the
// sample is closer to the positive centroid. Classes without positive or
// negative training samples score 0.
Grid<double> centroid_probe_scores(const std::vector<std::vector<double>>& train_features,
                                   const Grid<std::uint8_t>& train_labels,
                                   const std::vector<std::vector<double>>& test_features);

struct KnnSweepPoint {
  int k = 0;
  double macro_f1 = 0.0;
};

struct KnnQuery {
  std::vector<double> feature;  // visual feature used for retrieval
  std::vector<std::uint8_t> labels;
  bool train = false;
};

// Builds hashtag features for every query at each k, fits the centroid probe
// on the training queries and reports test macro F1.
std::vector<KnnSweepPoint> knn_sweep(const std::vector<KnnQuery>& queries, std::span<const IndexEntry> index,
                                     const NeighborTags& tags, const SegDictionary& dict,
                                     const EmbeddingProvider& provider, const HashtagFeatureConfig& base,
                                     const std::vector<int>& ks, double threshold = 0.5);

}  // namespace intent
