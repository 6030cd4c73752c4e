#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace intent {

struct IntentClass {
  int id = 0;
  std::string name;
  std::string supercategory;
  std::string description;

  friend bool operator==(const IntentClass&, const IntentClass&) = default;
};

// The 28 intent classes grouped under 9 supercategories.
class Taxonomy {
 public:
  static constexpr int kNumClasses = 28;
  static constexpr int kNumSupercategories = 9;

  // Validates: exactly 28 records, ids dense 0..27 in order, unique names,
  // exactly 9 distinct supercategories.
  explicit Taxonomy(std::vector<IntentClass> classes);

  static const Taxonomy& builtin();

  // Tab-separated, one record per class, preceded by a "# intent-taxonomy v1"
  // header line.
  static Taxonomy load(const std::filesystem::path& path);
  static Taxonomy parse(std::string_view text);
  std::string serialize() const;
  void save(const std::filesystem::path& path) const;

  int size() const { return static_cast<int>(classes_.size()); }
  const IntentClass& operator[](int id) const { return classes_.at(id); }
  const std::vector<IntentClass>& classes() const { return classes_; }
  std::vector<std::string> supercategories() const;

  // Returns -1 when absent.
  int find(std::string_view name) const;

 private:
  std::vector<IntentClass> classes_;
};

enum class ContentGroup { ObjectDependent, ContextDependent, Others };
enum class DifficultyGroup { Easy, Medium, Hard };
enum class Correlation { Negative, Neutral, Positive };

std::string_view to_string(ContentGroup g);
std::string_view to_string(DifficultyGroup g);
std::string_view to_string(Correlation c);
ContentGroup parse_content_group(std::string_view s);
DifficultyGroup parse_difficulty_group(std::string_view s);

// D(m) = r * log(s / r). Scores are used in whatever unit the caller passes;
// the grouping pipeline passes percent (0-100). log_base <= 0 selects the
// natural logarithm.
double information_gain(double random_score, double model_score, double log_base = 0.0);

struct DifficultyCuts {
  double low_cut = 5.0;    // D <= low_cut
  double high_cut = 15.0;  // low_cut < D <= high_cut, then D > high_cut
  // Row order of the published categorization table pairs Easy with the low-D
  // row. Set to false to flip the mapping (Hard for low D).
  bool low_is_easy = true;
};

DifficultyGroup assign_difficulty(double gain, const DifficultyCuts& cuts = {});

// How the disruption axis is measured. Removal levels are converted to the
// retained-information axis before slopes are compared across classes.
enum class DisruptionAxis { Removed, Retained };

struct DisruptionSeries {
  std::vector<double> levels;
  std::vector<double> f1;
  DisruptionAxis axis = DisruptionAxis::Retained;

  // Throws InputError unless lengths match, |levels| >= 2 and levels are
  // strictly increasing.
  void validate() const;
  // Maps removal fraction l to retained fraction 1 - l (reordered so levels
  // stay increasing). Identity for series already on the retained axis.
  DisruptionSeries retained() const;
};

struct SlopeSummary {
  double alpha = 0.0;
  double beta = 0.0;
  double alpha_bar = 0.0;  // alpha / |X| * 10
  Correlation rho = Correlation::Neutral;
};

inline constexpr double kDefaultNeutralBand = 0.5;

Correlation correlation_from_slope(double alpha_bar, double neutral_band = kDefaultNeutralBand);

// Ordinary least squares fit of f1 = alpha * level + beta. Pairs may come in
// any order.
SlopeSummary fit_disruption_line(const DisruptionSeries& series,
                                 double neutral_band = kDefaultNeutralBand);

ContentGroup assign_content_group(const SlopeSummary& object, const SlopeSummary& context);

struct ClassScore {
  double random = 0.0;  // random-guess score
  double model = 0.0;   // model score, same unit as random
};

struct GroupAssignment {
  int class_id = 0;
  ContentGroup content = ContentGroup::Others;
  DifficultyGroup difficulty = DifficultyGroup::Medium;
  double gain = 0.0;
  double alpha_bar_object = 0.0;
  double alpha_bar_context = 0.0;

  friend bool operator==(const GroupAssignment&, const GroupAssignment&) = default;
};

struct GroupingConfig {
  double neutral_band = kDefaultNeutralBand;
  DifficultyCuts cuts;
  double log_base = 0.0;
};

// Composes the slope fits, content rule, information gain and difficulty cut
// for every class. All three inputs are indexed by class id.
std::vector<GroupAssignment> group_classes(const std::vector<DisruptionSeries>& object_study,
                                           const std::vector<DisruptionSeries>& context_study,
                                           const std::vector<ClassScore>& scores,
                                           const GroupingConfig& cfg = {});

// "# intent-groups v1" header then one tab-separated record per class:
// id, content_group, difficulty_group, D, alpha_bar_O, alpha_bar_C.
std::string serialize_groups(const std::vector<GroupAssignment>& groups);
std::vector<GroupAssignment> parse_groups(std::string_view text);

// "# class-scores v1" header then "id<TAB>random<TAB>model" per class, ids
// dense from 0.
std::string serialize_class_scores(const std::vector<ClassScore>& scores);
std::vector<ClassScore> parse_class_scores(std::string_view text);

}  // namespace intent
