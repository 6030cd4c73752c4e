#include "intent/taxonomy.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <sstream>

#include "intent/error.hpp"
#include "intent/text_io.hpp"

namespace intent {

namespace {

constexpr std::string_view kTaxonomyHeader = "# intent-taxonomy v1";
constexpr std::string_view kScoresHeader = "# class-scores v1";
constexpr std::string_view kGroupsHeader = "# intent-groups v1";

std::vector<IntentClass> builtin_classes() {
  // clang-format off
  return {
    {0, "Attractive", "power", "Being good looking, attractive."},
    {1, "BeatCompete", "power", "Beat people in a competition."},
    {2, "Communicate", "self-fulfill", "To communicate or express myself."},
    {3, "CreativeUnique", "openness to experience", "Being creative (e.g., artistically, scientifically, intellectually). Being unique or different."},
    {4, "CuriousAdventurousExcitingLife", "openness to experience", "Exploration - Being curious and adventurous. Having an exciting, stimulating life."},
    {5, "EasyLife", "self-fulfill", "Having an easy and comfortable life."},
    {6, "EnjoyLife", "self-fulfill", "Enjoying life"},
    {7, "FineDesignLearnArt-Arch", "openness to experience", "Appreciating fine design (man-made wonders like architectures)"},
    {8, "FineDesignLearnArt-Art", "openness to experience", "Appreciating fine design (artwork)"},
    {9, "FineDesignLearnArt-Culture", "openness to experience", "Appreciating other cultures"},
    {10, "GoodParentEmoCloseChild", "family", "Being a good parent (teaching, transmitting values). Being emotionally close to my children."},
    {11, "Happy", "self-fulfill", "Being happy and content. Feeling satisfied with one's life. Feeling good about myself."},
    {12, "HardWorking", "ambition and ability", "Being ambitious, hard-working."},
    {13, "Harmony", "virtues", "Achieving harmony and oneness (with self and the universe)."},
    {14, "Health", "health", "Being physically active, fit, healthy, e.g. maintaining a healthy weight, eating nutritious foods. To be physically able to do my daily/routine activities. Having athletic ability."},
    {15, "InLove", "security and belonging", "Being in love."},
    {16, "InLoveAnimal", "security and belonging", "Being in love with animal"},
    {17, "InspirOthers", "power", "Inspiring others, Influencing, persuading others."},
    {18, "ManagableMakePlan", "ambition and ability", "To keep things manageable. To make plans"},
    {19, "NatBeauty", "openness to experience", "Experiencing natural beauty."},
    {20, "PassionAbSmthing", "ambition and ability", "Being really passionate about something."},
    {21, "Playful", "self-fulfill", "Being playful, carefree, lighthearted."},
    {22, "ShareFeelings", "security and belonging", "Sharing my feelings with others."},
    {23, "SocialLifeFriendship", "security and belonging", "Being part of a social group. Having people to do things with. Having close friends, others to rely on. Making friends, drawing others near."},
    {24, "SuccInOccupHavGdJob", "financial and occupational success", "Being successful in my occupation. Having a good job."},
    {25, "TeachOthers", "virtues", "Teaching others."},
    {26, "ThngsInOrdr", "ambition and ability", "Keeping things in order (my desk, office, house, etc.)."},
    {27, "WorkILike", "financial and occupational success", "Having work I really like."},
  };
  // clang-format on
}

std::string fmt(double v) { return text::format_double(v); }

}  // namespace

Taxonomy::Taxonomy(std::vector<IntentClass> classes) : classes_(std::move(classes)) {
  if (classes_.size() != kNumClasses) {
    throw InputError("taxonomy must have " + std::to_string(kNumClasses) + " classes, got " +
                     std::to_string(classes_.size()));
  }
  std::set<std::string> names;
  std::set<std::string> supers;
  for (std::size_t i = 0; i < classes_.size(); ++i) {
    const auto& c = classes_[i];
    if (c.id != static_cast<int>(i)) throw InputError("taxonomy ids must be dense 0..27 in order");
    if (c.name.empty()) throw InputError("taxonomy class " + std::to_string(i) + " has no name");
    if (!names.insert(c.name).second) throw InputError("duplicate class name " + c.name);
    supers.insert(c.supercategory);
  }
  if (supers.size() != kNumSupercategories) {
    throw InputError("taxonomy must have 9 supercategories, got " + std::to_string(supers.size()));
  }
}

const Taxonomy& Taxonomy::builtin() {
  static const Taxonomy t(builtin_classes());
  return t;
}

Taxonomy Taxonomy::parse(std::string_view text) {
  const auto lines = text::split_lines(text);
  if (lines.empty() || text::trim(lines[0]) != kTaxonomyHeader) {
    throw InputError("taxonomy file must start with '" + std::string(kTaxonomyHeader) + "'");
  }
  std::vector<IntentClass> classes;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (text::trim(lines[i]).empty()) continue;
    const auto f = text::split(lines[i], '\t');
    if (f.size() != 4) throw InputError("taxonomy line " + std::to_string(i + 1) + ": expected 4 fields");
    classes.push_back({static_cast<int>(text::parse_int(f[0], "class id")), f[1], f[2], f[3]});
  }
  return Taxonomy(std::move(classes));
}

Taxonomy Taxonomy::load(const std::filesystem::path& path) { return parse(text::read_file(path)); }

std::string Taxonomy::serialize() const {
  std::ostringstream out;
  out << kTaxonomyHeader << '\n';
  for (const auto& c : classes_) {
    out << c.id << '\t' << c.name << '\t' << c.supercategory << '\t' << c.description << '\n';
  }
  return out.str();
}

void Taxonomy::save(const std::filesystem::path& path) const { text::write_file(path, serialize()); }

std::vector<std::string> Taxonomy::supercategories() const {
  std::vector<std::string> out;
  for (const auto& c : classes_) {
    if (std::find(out.begin(), out.end(), c.supercategory) == out.end()) out.push_back(c.supercategory);
  }
  return out;
}

int Taxonomy::find(std::string_view name) const {
  for (const auto& c : classes_) {
    if (c.name == name) return c.id;
  }
  return -1;
}

std::string_view to_string(ContentGroup g) {
  switch (g) {
    case ContentGroup::ObjectDependent: return "object";
    case ContentGroup::ContextDependent: return "context";
    case ContentGroup::Others: return "others";
  }
  return "others";
}

std::string_view to_string(DifficultyGroup g) {
  switch (g) {
    case DifficultyGroup::Easy: return "easy";
    case DifficultyGroup::Medium: return "medium";
    case DifficultyGroup::Hard: return "hard";
  }
  return "medium";
}

std::string_view to_string(Correlation c) {
  switch (c) {
    case Correlation::Negative: return "negative";
    case Correlation::Neutral: return "neutral";
    case Correlation::Positive: return "positive";
  }
  return "neutral";
}

ContentGroup parse_content_group(std::string_view s) {
  if (s == "object") return ContentGroup::ObjectDependent;
  if (s == "context") return ContentGroup::ContextDependent;
  if (s == "others") return ContentGroup::Others;
  throw InputError("unknown content group '" + std::string(s) + "'");
}

DifficultyGroup parse_difficulty_group(std::string_view s) {
  if (s == "easy") return DifficultyGroup::Easy;
  if (s == "medium") return DifficultyGroup::Medium;
  if (s == "hard") return DifficultyGroup::Hard;
  throw InputError("unknown difficulty group '" + std::string(s) + "'");
}

double information_gain(double random_score, double model_score, double log_base) {
  if (!(random_score > 0.0) || !(model_score > 0.0)) {
    throw DomainError("information gain needs positive scores");
  }
  double l = std::log(model_score / random_score);
  if (log_base > 0.0) l /= std::log(log_base);
  return random_score * l;
}

DifficultyGroup assign_difficulty(double gain, const DifficultyCuts& cuts) {
  if (std::isnan(gain)) throw DomainError("difficulty of NaN gain");
  DifficultyGroup g = DifficultyGroup::Medium;
  if (gain <= cuts.low_cut) {
    g = DifficultyGroup::Easy;
  } else if (gain > cuts.high_cut) {
    g = DifficultyGroup::Hard;
  }
  if (!cuts.low_is_easy && g != DifficultyGroup::Medium) {
    g = g == DifficultyGroup::Easy ? DifficultyGroup::Hard : DifficultyGroup::Easy;
  }
  return g;
}

void DisruptionSeries::validate() const {
  if (levels.size() != f1.size()) throw InputError("disruption series: levels and f1 differ in length");
  if (levels.size() < 2) throw InputError("disruption series needs at least 2 levels");
  for (std::size_t i = 1; i < levels.size(); ++i) {
    if (!(levels[i] > levels[i - 1])) throw InputError("disruption levels must be strictly increasing");
  }
}

DisruptionSeries DisruptionSeries::retained() const {
  if (axis == DisruptionAxis::Retained) return *this;
  DisruptionSeries out;
  out.axis = DisruptionAxis::Retained;
  for (std::size_t i = levels.size(); i-- > 0;) {
    out.levels.push_back(1.0 - levels[i]);
    out.f1.push_back(f1[i]);
  }
  return out;
}

Correlation correlation_from_slope(double alpha_bar, double neutral_band) {
  if (std::abs(alpha_bar) <= neutral_band) return Correlation::Neutral;
  return alpha_bar > 0.0 ? Correlation::Positive : Correlation::Negative;
}

SlopeSummary fit_disruption_line(const DisruptionSeries& series, double neutral_band) {
  const auto& x = series.levels;
  const auto& y = series.f1;
  if (x.size() != y.size()) throw InputError("disruption series: levels and f1 differ in length");
  if (x.size() < 2) throw DomainError("cannot fit a line to fewer than 2 points");
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxx = 0.0;
  double sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (!(sxx > 0.0)) throw DomainError("cannot fit a line: all levels equal");
  SlopeSummary s;
  s.alpha = sxy / sxx;
  s.beta = my - s.alpha * mx;
  s.alpha_bar = s.alpha / n * 10.0;
  s.rho = correlation_from_slope(s.alpha_bar, neutral_band);
  return s;
}

ContentGroup assign_content_group(const SlopeSummary& object, const SlopeSummary& context) {
  if (object.alpha_bar > context.alpha_bar && context.rho != Correlation::Positive) {
    return ContentGroup::ObjectDependent;
  }
  if (object.alpha_bar < context.alpha_bar && object.rho != Correlation::Positive) {
    return ContentGroup::ContextDependent;
  }
  return ContentGroup::Others;
}

std::vector<GroupAssignment> group_classes(const std::vector<DisruptionSeries>& object_study,
                                           const std::vector<DisruptionSeries>& context_study,
                                           const std::vector<ClassScore>& scores,
                                           const GroupingConfig& cfg) {
  if (object_study.size() != context_study.size() || object_study.size() != scores.size()) {
    throw InputError("grouping inputs must cover the same classes");
  }
  std::vector<GroupAssignment> out;
  out.reserve(scores.size());
  for (std::size_t m = 0; m < scores.size(); ++m) {
    const auto so = fit_disruption_line(object_study[m].retained(), cfg.neutral_band);
    const auto sc = fit_disruption_line(context_study[m].retained(), cfg.neutral_band);
    GroupAssignment g;
    g.class_id = static_cast<int>(m);
    g.content = assign_content_group(so, sc);
    g.gain = information_gain(scores[m].random, scores[m].model, cfg.log_base);
    g.difficulty = assign_difficulty(g.gain, cfg.cuts);
    g.alpha_bar_object = so.alpha_bar;
    g.alpha_bar_context = sc.alpha_bar;
    out.push_back(g);
  }
  return out;
}

std::string serialize_groups(const std::vector<GroupAssignment>& groups) {
  std::ostringstream out;
  out << kGroupsHeader << '\n';
  out << "#id\tcontent_group\tdifficulty_group\tD\talpha_bar_O\talpha_bar_C\n";
  for (const auto& g : groups) {
    out << g.class_id << '\t' << to_string(g.content) << '\t' << to_string(g.difficulty) << '\t'
        << fmt(g.gain) << '\t' << fmt(g.alpha_bar_object) << '\t' << fmt(g.alpha_bar_context) << '\n';
  }
  return out.str();
}

std::vector<GroupAssignment> parse_groups(std::string_view text) {
  const auto lines = text::split_lines(text);
  if (lines.empty() || text::trim(lines[0]) != kGroupsHeader) {
    throw InputError("group file must start with '" + std::string(kGroupsHeader) + "'");
  }
  std::vector<GroupAssignment> out;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (lines[i].empty() || lines[i][0] == '#') continue;
    const auto f = text::split(lines[i], '\t');
    if (f.size() != 6) throw InputError("group line " + std::to_string(i + 1) + ": expected 6 fields");
    GroupAssignment g;
    g.class_id = static_cast<int>(text::parse_int(f[0], "class id"));
    g.content = parse_content_group(f[1]);
    g.difficulty = parse_difficulty_group(f[2]);
    g.gain = text::parse_double(f[3], "D");
    g.alpha_bar_object = text::parse_double(f[4], "alpha_bar_O");
    g.alpha_bar_context = text::parse_double(f[5], "alpha_bar_C");
    out.push_back(g);
  }
  return out;
}

std::string serialize_class_scores(const std::vector<ClassScore>& scores) {
  std::string out = std::string(kScoresHeader) + "\n";
  for (std::size_t i = 0; i < scores.size(); ++i) {
    out += std::to_string(i) + "\t" + text::format_double(scores[i].random) + "\t" +
           text::format_double(scores[i].model) + "\n";
  }
  return out;
}

std::vector<ClassScore> parse_class_scores(std::string_view text) {
  const auto lines = text::split_lines(text);
  if (lines.empty() || text::trim(lines[0]) != kScoresHeader) {
    throw InputError("class score file must start with '" + std::string(kScoresHeader) + "'");
  }
  std::vector<ClassScore> out;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (lines[i].empty() || lines[i][0] == '#') continue;
    const auto f = text::split(lines[i], '\t');
    if (f.size() != 3) throw InputError("class score line " + std::to_string(i + 1) + ": expected 3 fields");
    if (text::parse_int(f[0], "class id") != static_cast<long long>(out.size())) {
      throw InputError("class score line " + std::to_string(i + 1) + ": ids must be dense from 0");
    }
    out.push_back({text::parse_double(f[1], "random score"), text::parse_double(f[2], "model score")});
  }
  return out;
}

}  // namespace intent
