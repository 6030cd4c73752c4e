#include "intent/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "json.hpp"
#include "intent/error.hpp"

namespace intent {

F1Report macro_f1(const Grid<double>& scores, const Grid<std::uint8_t>& labels, double threshold) {
  if (scores.rows() != labels.rows() || scores.cols() != labels.cols()) {
    throw InputError("scores and labels differ in shape");
  }
  if (scores.rows() == 0) throw InputError("macro F1 of an empty set");
  F1Report r;
  r.per_class.assign(scores.cols(), 0.0);
  for (int k = 0; k < scores.cols(); ++k) {
    long long tp = 0;
    long long fp = 0;
    long long fn = 0;
    for (int i = 0; i < scores.rows(); ++i) {
      const bool pred = scores(i, k) >= threshold;
      const bool truth = labels(i, k) != 0;
      tp += pred && truth;
      fp += pred && !truth;
      fn += !pred && truth;
    }
    const long long denom = 2 * tp + fp + fn;
    r.per_class[k] = denom == 0 ? 0.0 : 2.0 * static_cast<double>(tp) / static_cast<double>(denom);
  }
  r.macro = std::accumulate(r.per_class.begin(), r.per_class.end(), 0.0) / static_cast<double>(scores.cols());
  return r;
}

std::vector<ThresholdPoint> threshold_sweep(const Grid<double>& scores, const Grid<std::uint8_t>& labels,
                                            const std::vector<double>& thresholds) {
  std::vector<ThresholdPoint> out;
  out.reserve(thresholds.size());
  for (double t : thresholds) out.push_back({t, macro_f1(scores, labels, t).macro});
  return out;
}

double random_guess_f1(double prevalence) {
  if (!(prevalence >= 0.0 && prevalence <= 1.0)) throw DomainError("prevalence must lie in [0, 1]");
  if (prevalence == 0.0) return 0.0;
  return prevalence / (prevalence + 0.5);
}

Grouping content_grouping(const std::vector<GroupAssignment>& groups) {
  Grouping g;
  for (const auto& a : groups) g[a.class_id] = std::string(to_string(a.content));
  return g;
}

Grouping difficulty_grouping(const std::vector<GroupAssignment>& groups) {
  Grouping g;
  for (const auto& a : groups) g[a.class_id] = std::string(to_string(a.difficulty));
  return g;
}

std::map<std::string, double> group_report(const std::vector<double>& per_class_f1, const Grouping& grouping) {
  if (per_class_f1.empty()) throw InputError("group report of an empty F1 vector");
  std::map<std::string, std::pair<double, int>> acc;
  for (std::size_t k = 0; k < per_class_f1.size(); ++k) {
    const auto it = grouping.find(static_cast<int>(k));
    if (it == grouping.end()) throw ConfigError("class " + std::to_string(k) + " missing from grouping");
    auto& [sum, count] = acc[it->second];
    sum += per_class_f1[k];
    ++count;
  }
  std::map<std::string, double> out;
  for (const auto& [name, sc] : acc) out[name] = sc.first / sc.second;
  out["All"] = std::accumulate(per_class_f1.begin(), per_class_f1.end(), 0.0) /
               static_cast<double>(per_class_f1.size());
  return out;
}

std::map<std::string, RunStat> aggregate_runs(const std::vector<std::map<std::string, double>>& runs) {
  std::map<std::string, std::vector<double>> values;
  for (const auto& run : runs) {
    for (const auto& [k, v] : run) values[k].push_back(v);
  }
  std::map<std::string, RunStat> out;
  for (const auto& [k, vs] : values) {
    RunStat s;
    s.runs = static_cast<int>(vs.size());
    s.mean = std::accumulate(vs.begin(), vs.end(), 0.0) / static_cast<double>(vs.size());
    if (vs.size() >= 2) {
      double ss = 0.0;
      for (double v : vs) ss += (v - s.mean) * (v - s.mean);
      s.stddev = std::sqrt(ss / static_cast<double>(vs.size() - 1));
    } else {
      s.single_run = true;
    }
    out[k] = s;
  }
  return out;
}

namespace {

// 4-connected components as lists of flat pixel indices, largest first (ties
// by first pixel in scan order).
std::vector<std::vector<std::size_t>> components(const Raster& mask) {
  const int rows = mask.rows();
  const int cols = mask.cols();
  std::vector<char> seen(mask.size(), 0);
  std::vector<std::vector<std::size_t>> comps;
  std::vector<std::size_t> stack;
  for (std::size_t start = 0; start < mask.size(); ++start) {
    if (!mask.data()[start] || seen[start]) continue;
    std::vector<std::size_t> comp;
    stack.push_back(start);
    seen[start] = 1;
    while (!stack.empty()) {
      const auto p = stack.back();
      stack.pop_back();
      comp.push_back(p);
      const int y = static_cast<int>(p / cols);
      const int x = static_cast<int>(p % cols);
      const int ny[4] = {y - 1, y + 1, y, y};
      const int nx[4] = {x, x, x - 1, x + 1};
      for (int d = 0; d < 4; ++d) {
        if (ny[d] < 0 || ny[d] >= rows || nx[d] < 0 || nx[d] >= cols) continue;
        const auto q = static_cast<std::size_t>(ny[d]) * cols + nx[d];
        if (mask.data()[q] && !seen[q]) {
          seen[q] = 1;
          stack.push_back(q);
        }
      }
    }
    comps.push_back(std::move(comp));
  }
  std::stable_sort(comps.begin(), comps.end(), [](const auto& a, const auto& b) { return a.size() > b.size(); });
  return comps;
}

}  // namespace

Image disrupt_image(const Image& image, const Raster& mask, double level) {
  if (mask.rows() != image.height() || mask.cols() != image.width()) {
    throw InputError("disruption mask does not match the image size");
  }
  if (!(level >= 0.0 && level <= 1.0)) throw ConfigError("disruption level must lie in [0, 1]");
  Image out = image;
  if (level == 0.0) return out;
  const auto comps = components(mask);
  std::size_t total = 0;
  for (const auto& c : comps) total += c.size();
  const double goal = level * static_cast<double>(total);
  std::size_t removed = 0;
  for (const auto& comp : comps) {
    if (static_cast<double>(removed) >= goal) break;
    for (auto p : comp) {
      for (int ch = 0; ch < out.channels(); ++ch) out.channel(ch)[p] = 0.0;
    }
    removed += comp.size();
  }
  return out;
}

Dataset disrupt_dataset(const Dataset& data, double level, DisruptionTarget target) {
  Dataset out = data;
  for (auto& s : out) {
    if (!s.masks) throw ConfigError("sample " + s.id + " has no masks for the disruption study");
    const Raster& m = target == DisruptionTarget::Object ? s.masks->object : s.masks->context;
    s.image = disrupt_image(s.image, m, level);
  }
  return out;
}

std::vector<DisruptionSeries> run_disruption_study(const IntentModel& model, const Dataset& data,
                                                   const std::vector<double>& levels, DisruptionTarget target,
                                                   const DisruptionConfig& cfg) {
  if (data.empty()) throw InputError("disruption study on an empty dataset");
  if (levels.size() < 2) throw ConfigError("disruption study needs at least 2 levels");
  for (std::size_t i = 1; i < levels.size(); ++i) {
    if (!(levels[i] > levels[i - 1])) throw ConfigError("disruption levels must be strictly increasing");
  }
  if (cfg.fine_tune && cfg.fine_tune_set == nullptr) throw ConfigError("fine-tune mode needs a training set");
  Grid<std::uint8_t> labels(static_cast<int>(data.size()), model.num_classes());
  for (std::size_t i = 0; i < data.size(); ++i) {
    for (int k = 0; k < model.num_classes(); ++k) labels(static_cast<int>(i), k) = data[i].labels.at(k);
  }
  std::vector<DisruptionSeries> series(model.num_classes());
  for (auto& s : series) {
    s.levels = levels;
    s.axis = DisruptionAxis::Removed;
  }
  for (double level : levels) {
    const Dataset disrupted = disrupt_dataset(data, level, target);
    const IntentModel* eval_model = &model;
    std::optional<IntentModel> tuned;
    if (cfg.fine_tune) {
      const Dataset ft = disrupt_dataset(*cfg.fine_tune_set, level, target);
      tuned = train(model, ft, nullptr, cfg.fine_tune_cfg, cfg.fine_tune_loss, cfg.fine_tune_sets).best;
      eval_model = &*tuned;
    }
    const auto report = macro_f1(predict(*eval_model, disrupted, cfg.use_hashtags), labels, cfg.threshold);
    for (int k = 0; k < model.num_classes(); ++k) series[k].f1.push_back(report.per_class[k]);
  }
  return series;
}

std::string serialize_study(const std::vector<DisruptionSeries>& series, DisruptionTarget target) {
  nlohmann::json j;
  j["version"] = 1;
  j["target"] = target == DisruptionTarget::Object ? "object" : "context";
  j["axis"] = !series.empty() && series[0].axis == DisruptionAxis::Retained ? "retained" : "removed";
  j["levels"] = series.empty() ? std::vector<double>{} : series[0].levels;
  j["classes"] = nlohmann::json::array();
  for (std::size_t k = 0; k < series.size(); ++k) j["classes"].push_back({{"id", k}, {"f1", series[k].f1}});
  return j.dump(1) + "\n";
}

std::vector<DisruptionSeries> parse_study(std::string_view text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("study file: ") + e.what());
  }
  if (j.value("version", 0) != 1) throw InputError("study file: unsupported version");
  const auto axis = j.at("axis").get<std::string>() == "retained" ? DisruptionAxis::Retained : DisruptionAxis::Removed;
  const auto levels = j.at("levels").get<std::vector<double>>();
  std::vector<DisruptionSeries> out;
  for (const auto& c : j.at("classes")) {
    if (c.at("id").get<std::size_t>() != out.size()) throw InputError("study file: class ids must be dense");
    DisruptionSeries s{levels, c.at("f1").get<std::vector<double>>(), axis};
    s.validate();
    out.push_back(std::move(s));
  }
  return out;
}

Grid<double> centroid_probe_scores(const std::vector<std::vector<double>>& train_features,
                                   const Grid<std::uint8_t>& train_labels,
                                   const std::vector<std::vector<double>>& test_features) {
  if (train_features.size() != static_cast<std::size_t>(train_labels.rows())) {
    throw InputError("probe features and labels differ in length");
  }
  if (train_features.empty()) throw InputError("probe needs training samples");
  const std::size_t dim = train_features[0].size();
  const int classes = train_labels.cols();
  Grid<double> scores(static_cast<int>(test_features.size()), classes);
  for (int k = 0; k < classes; ++k) {
    std::vector<double> pos(dim, 0.0);
    std::vector<double> neg(dim, 0.0);
    int n_pos = 0;
    int n_neg = 0;
    for (std::size_t i = 0; i < train_features.size(); ++i) {
      if (train_features[i].size() != dim) throw InputError("probe features differ in dimension");
      auto& acc = train_labels(static_cast<int>(i), k) ? pos : neg;
      (train_labels(static_cast<int>(i), k) ? n_pos : n_neg) += 1;
      for (std::size_t d = 0; d < dim; ++d) acc[d] += train_features[i][d];
    }
    if (n_pos == 0 || n_neg == 0) continue;
    for (std::size_t d = 0; d < dim; ++d) {
      pos[d] /= n_pos;
      neg[d] /= n_neg;
    }
    for (std::size_t i = 0; i < test_features.size(); ++i) {
      if (test_features[i].size() != dim) throw InputError("probe features differ in dimension");
      double margin = 0.0;
      for (std::size_t d = 0; d < dim; ++d) {
        const double a = test_features[i][d] - neg[d];
        const double b = test_features[i][d] - pos[d];
        margin += a * a - b * b;
      }
      scores(static_cast<int>(i), k) = sigmoid(margin);
    }
  }
  return scores;
}

std::vector<KnnSweepPoint> knn_sweep(const std::vector<KnnQuery>& queries, std::span<const IndexEntry> index,
                                     const NeighborTags& tags, const SegDictionary& dict,
                                     const EmbeddingProvider& provider, const HashtagFeatureConfig& base,
                                     const std::vector<int>& ks, double threshold) {
  if (queries.empty()) throw InputError("k sweep needs queries");
  const int classes = static_cast<int>(queries[0].labels.size());
  int n_train = 0;
  for (const auto& q : queries) {
    if (static_cast<int>(q.labels.size()) != classes) throw InputError("query label widths differ");
    n_train += q.train;
  }
  const int n_test = static_cast<int>(queries.size()) - n_train;
  if (n_train == 0 || n_test == 0) throw InputError("k sweep needs both training and test queries");
  Grid<std::uint8_t> train_labels(n_train, classes);
  Grid<std::uint8_t> test_labels(n_test, classes);
  {
    int a = 0;
    int b = 0;
    for (const auto& q : queries) {
      auto& grid = q.train ? train_labels : test_labels;
      const int row = q.train ? a++ : b++;
      for (int k = 0; k < classes; ++k) grid(row, k) = q.labels[k];
    }
  }
  std::vector<KnnSweepPoint> out;
  for (int k : ks) {
    HashtagFeatureConfig cfg = base;
    cfg.k = k;
    std::vector<std::vector<double>> train_f;
    std::vector<std::vector<double>> test_f;
    for (const auto& q : queries) {
      auto f = build_hashtag_feature(q.feature, index, tags, dict, provider, cfg).vector;
      (q.train ? train_f : test_f).push_back(std::move(f));
    }
    const auto scores = centroid_probe_scores(train_f, train_labels, test_f);
    out.push_back({k, macro_f1(scores, test_labels, threshold).macro});
  }
  return out;
}

}  // namespace intent
