#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "intent/grid.hpp"

namespace intent {

// Items x categories; each cell counts the raters who put the item in that
// category. Every row sums to n_raters.
struct RatingsMatrix {
  Grid<int> counts;
  int n_raters = 0;

  void validate() const;
};

struct Rating {
  std::string item_id;
  std::string rater_id;
  std::string category;
  std::string task_id;  // empty when the CSV has no task column
};

// CSV with a header naming item_id, rater_id, category and optionally
// task_id (any column order).
std::vector<Rating> parse_ratings_csv(std::string_view text);

// Builds one matrix from ratings. Categories are sorted by name unless an
// explicit list is given. Items rated by a different number of raters are
// an input error.
RatingsMatrix ratings_matrix(const std::vector<Rating>& ratings, const std::vector<std::string>& categories = {});

struct KappaResult {
  double kappa = 0.0;
  double p_bar = 0.0;       // mean observed agreement
  double p_expected = 0.0;  // chance agreement
  bool degenerate = false;  // chance agreement is 1: only one category ever used
};

KappaResult fleiss_kappa(const RatingsMatrix& m);

struct MeanKappa {
  double mean = 0.0;
  std::map<std::string, KappaResult> per_task;
};

// Kappa per task_id, then the unweighted mean over tasks.
MeanKappa mean_task_kappa(const std::vector<Rating>& ratings);

struct GridResponse {
  std::string grid_id;
  std::vector<std::string> selected;  // image ids marked positive
};

struct HitResult {
  std::string hit_id;
  std::string worker_id;
  std::vector<GridResponse> grids;
};

// grid_id of the catch grid -> exact set of images that must be selected.
using CatchKey = std::map<std::string, std::vector<std::string>>;

// Drops every HIT whose catch-grid answer differs from the key. Each HIT
// must contain exactly one grid listed in the key.
std::vector<HitResult> filter_catch_trials(const std::vector<HitResult>& hits, const CatchKey& key);

enum class LabelConfidence { DefiniteYes, PossibleYes, PossibleNo, No };

std::string_view to_string(LabelConfidence c);

LabelConfidence aggregate_labels(const std::vector<bool>& votes);

// Class id -> images whose score is strictly above tau. Every class seen in
// the input gets a (possibly empty) queue.
std::map<int, std::vector<std::string>> hitl_select(const std::map<std::string, std::vector<double>>& scores,
                                                    double tau = 0.35);

}  // namespace intent
