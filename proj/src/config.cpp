#include "intent/config.hpp"

#include <set>
#include <utility>

#include "intent/error.hpp"
#include "intent/text_io.hpp"

namespace intent {

using nlohmann::json;

namespace {

template <class E>
using EnumTable = std::vector<std::pair<std::string_view, E>>;

const EnumTable<ClassificationLoss> kLossNames{{"bce", ClassificationLoss::Bce}, {"focal", ClassificationLoss::Focal}};
const EnumTable<LrSchedule> kScheduleNames{
    {"constant", LrSchedule::Constant}, {"step", LrSchedule::Step}, {"cosine", LrSchedule::Cosine}};
const EnumTable<CamResample> kResampleNames{
    {"mask_to_cam", CamResample::MaskToCam}, {"cam_to_image", CamResample::CamToImage}};
const EnumTable<AreaFilterScope> kScopeNames{
    {"all_regions", AreaFilterScope::AllRegions}, {"stuff_only", AreaFilterScope::StuffOnly}};
const EnumTable<Metric> kMetricNames{{"cosine", Metric::Cosine}, {"euclidean", Metric::Euclidean}};
const EnumTable<Pooling> kPoolingNames{{"mean", Pooling::Mean}, {"frequency_weighted", Pooling::FrequencyWeighted}};

template <class E>
std::string enum_name(const EnumTable<E>& table, E v) {
  for (const auto& [name, e] : table) {
    if (e == v) return std::string(name);
  }
  throw ConfigError("unnamed enum value");
}

// Reads keys from one JSON object and remembers which were consumed so that
// leftovers can be reported.
class Section {
 public:
  Section(const json& obj, std::string path) : obj_(obj), path_(std::move(path)) {
    if (!obj_.is_object()) throw ConfigError(where() + " must be an object");
  }

  template <class T>
  void get(const char* key, T& out) {
    const json* v = take(key);
    if (!v) return;
    try {
      out = v->get<T>();
    } catch (const json::exception&) {
      throw ConfigError(where(key) + " has the wrong type");
    }
  }

  template <class E>
  void get_enum(const char* key, E& out, const EnumTable<E>& table) {
    std::string s;
    get(key, s);
    if (s.empty()) return;
    for (const auto& [name, e] : table) {
      if (name == s) {
        out = e;
        return;
      }
    }
    throw ConfigError(where(key) + ": unknown value '" + s + "'");
  }

  template <class Fn>
  void section(const char* key, Fn&& fn) {
    const json* v = take(key);
    if (!v) return;
    Section sub(*v, where(key));
    fn(sub);
    sub.finish();
  }

  void finish() const {
    for (const auto& [k, v] : obj_.items()) {
      if (!used_.count(k)) throw ConfigError("unknown config key " + where(k.c_str()));
    }
  }

 private:
  const json* take(const char* key) {
    used_.insert(key);
    const auto it = obj_.find(key);
    return it == obj_.end() ? nullptr : &*it;
  }
  std::string where(const char* key = nullptr) const {
    std::string p = path_.empty() ? std::string() : path_;
    if (key) p += (p.empty() ? "" : ".") + std::string(key);
    return "'" + (p.empty() ? std::string("<root>") : p) + "'";
  }

  const json& obj_;
  std::string path_;
  std::set<std::string> used_;
};

void read_model(Section& s, ModelConfig& m) {
  s.get("num_classes", m.num_classes);
  s.get("hashtag_dim", m.hashtag_dim);
  s.get("mlp_hidden", m.mlp_hidden);
  s.get("dropout", m.dropout);
  s.get("backbone_channels", m.backbone_channels);
  s.get("backbone_pools", m.backbone_pools);
  s.get("prior_pi", m.prior_pi);
  s.get("input_mean", m.input_mean);
  s.get("input_std", m.input_std);
}

}  // namespace

nlohmann::json model_config_to_json(const ModelConfig& cfg) {
  return {{"num_classes", cfg.num_classes}, {"hashtag_dim", cfg.hashtag_dim},
          {"mlp_hidden", cfg.mlp_hidden},   {"dropout", cfg.dropout},
          {"backbone_channels", cfg.backbone_channels}, {"backbone_pools", cfg.backbone_pools},
          {"prior_pi", cfg.prior_pi},
          {"input_mean", cfg.input_mean},   {"input_std", cfg.input_std}};
}

ModelConfig model_config_from_json(const nlohmann::json& j) {
  ModelConfig m;
  Section s(j, "model");
  read_model(s, m);
  s.finish();
  return m;
}

void ExperimentConfig::validate() const {
  if (model.num_classes < 1) throw ConfigError("model.num_classes must be positive");
  if (model.hashtag_dim < 0) throw ConfigError("model.hashtag_dim must be >= 0");
  if (model.backbone_channels.empty()) throw ConfigError("model.backbone_channels must not be empty");
  for (int c : model.backbone_channels) {
    if (c < 1) throw ConfigError("model.backbone_channels entries must be positive");
  }
  if (model.backbone_pools < 0 || model.backbone_pools > static_cast<int>(model.backbone_channels.size())) {
    throw ConfigError("model.backbone_pools must lie in [0, number of conv layers]");
  }
  for (int h : model.mlp_hidden) {
    if (h < 1) throw ConfigError("model.mlp_hidden entries must be positive");
  }
  if (!(model.dropout >= 0.0 && model.dropout < 1.0)) throw ConfigError("model.dropout must lie in [0, 1)");
  init_classifier_bias(model.prior_pi);
  if (model.input_mean.size() != model.input_std.size()) {
    throw ConfigError("model.input_mean and model.input_std differ in length");
  }
  for (double sd : model.input_std) {
    if (!(sd > 0.0)) throw ConfigError("model.input_std entries must be positive");
  }
  if (!(loss.lambda_loc >= 0.0)) throw ConfigError("loss.lambda_loc must be >= 0");
  init_classifier_bias(loss.pi);
  train.validate();
  if (resize_longest < 0) throw ConfigError("resize_longest must be >= 0 (0 disables resizing)");
  if (!(panoptic.tau_p > 0.0 && panoptic.tau_p < 1.0)) throw ConfigError("panoptic.tau_p must lie in (0, 1)");
  if (!(panoptic.min_area >= 0.0 && panoptic.min_area <= 1.0)) throw ConfigError("panoptic.min_area must lie in [0, 1]");
  if (!(tau_det > 0.0 && tau_det < 1.0)) throw ConfigError("panoptic.tau_det must lie in (0, 1)");
  if (!(saliency.tau_cam > 0.0 && saliency.tau_cam < 1.0)) throw ConfigError("saliency.tau_cam must lie in (0, 1)");
  if (hashtags.k < 1) throw ConfigError("hashtags.k must be positive");
  for (int k : eval.knn_sweep) {
    if (k < 1) throw ConfigError("eval.knn_sweep entries must be positive");
  }
  for (double l : eval.levels) {
    if (!(l >= 0.0 && l <= 1.0)) throw ConfigError("eval.levels must lie in [0, 1]");
  }
  if (!(grouping.neutral_band >= 0.0)) throw ConfigError("grouping.neutral_band must be >= 0");
  if (!(grouping.cuts.low_cut <= grouping.cuts.high_cut)) throw ConfigError("grouping cuts must be ordered");
  classes.validate();
  for (int c : classes.object) {
    if (c < 0 || c >= model.num_classes) throw ConfigError("classes.object id out of range");
  }
  for (int c : classes.context) {
    if (c < 0 || c >= model.num_classes) throw ConfigError("classes.context id out of range");
  }
}

ExperimentConfig parse_config(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  ExperimentConfig cfg;
  Section root(j, "");
  int version = 0;
  root.get("version", version);
  if (version != ExperimentConfig::kVersion) {
    throw ConfigError("config version must be " + std::to_string(ExperimentConfig::kVersion));
  }
  root.get("seed", cfg.seed);
  root.get("resize_longest", cfg.resize_longest);
  root.section("model", [&](Section& s) { read_model(s, cfg.model); });
  root.section("loss", [&](Section& s) {
    s.get("lambda_loc", cfg.loss.lambda_loc);
    s.get("pi", cfg.loss.pi);
    s.get_enum("classification", cfg.loss.classification, kLossNames);
    s.get("focal_alpha", cfg.loss.focal_alpha);
    s.get("focal_gamma", cfg.loss.focal_gamma);
  });
  root.section("train", [&](Section& s) {
    auto& t = cfg.train;
    s.get("batch_size", t.batch_size);
    s.get("momentum", t.momentum);
    s.get("base_lr", t.base_lr);
    s.get("warmup_epochs", t.warmup_epochs);
    s.get("epochs", t.epochs);
    s.get_enum("schedule", t.schedule, kScheduleNames);
    s.get("step_every_epochs", t.step_every_epochs);
    s.get("step_gamma", t.step_gamma);
    s.get("random_crop", t.random_crop);
    s.get("crop_size", t.crop_size);
    s.get("crop_scale_min", t.crop_scale_min);
    s.get("horizontal_flip", t.horizontal_flip);
    s.get("use_hashtags", t.use_hashtags);
    s.get("eval_threshold", t.eval_threshold);
  });
  root.section("panoptic", [&](Section& s) {
    s.get("tau_p", cfg.panoptic.tau_p);
    s.get("min_area", cfg.panoptic.min_area);
    s.get_enum("area_scope", cfg.panoptic.area_scope, kScopeNames);
    s.get("tau_det", cfg.tau_det);
  });
  root.section("saliency", [&](Section& s) {
    s.get("tau_cam", cfg.saliency.tau_cam);
    s.get_enum("resample", cfg.train.cam_resample, kResampleNames);
  });
  root.section("hashtags", [&](Section& s) {
    s.get("k", cfg.hashtags.k);
    s.get_enum("metric", cfg.hashtags.metric, kMetricNames);
    s.get("word_break", cfg.hashtags.use_word_break);
    s.get("deduplicate", cfg.hashtags.deduplicate);
    s.get_enum("pooling", cfg.hashtags.pooling, kPoolingNames);
  });
  root.section("eval", [&](Section& s) {
    s.get("threshold", cfg.eval.threshold);
    s.get("levels", cfg.eval.levels);
    s.get("fine_tune", cfg.eval.fine_tune);
    s.get("use_hashtags", cfg.eval.use_hashtags);
    s.get("knn_sweep", cfg.eval.knn_sweep);
  });
  root.section("annotation", [&](Section& s) { s.get("hitl_tau", cfg.annotation.hitl_tau); });
  root.section("grouping", [&](Section& s) {
    s.get("neutral_band", cfg.grouping.neutral_band);
    s.get("low_cut", cfg.grouping.cuts.low_cut);
    s.get("high_cut", cfg.grouping.cuts.high_cut);
    s.get("low_is_easy", cfg.grouping.cuts.low_is_easy);
    s.get("log_base", cfg.grouping.log_base);
  });
  root.section("classes", [&](Section& s) {
    s.get("object", cfg.classes.object);
    s.get("context", cfg.classes.context);
  });
  root.finish();
  cfg.validate();
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  try {
    return parse_config(text::read_file(path));
  } catch (const DataError& e) {
    throw ConfigError(e.what());
  }
}

nlohmann::json config_to_json(const ExperimentConfig& cfg) {
  const auto& t = cfg.train;
  json j;
  j["version"] = ExperimentConfig::kVersion;
  j["seed"] = cfg.seed;
  j["resize_longest"] = cfg.resize_longest;
  j["model"] = model_config_to_json(cfg.model);
  j["loss"] = {{"lambda_loc", cfg.loss.lambda_loc},
               {"pi", cfg.loss.pi},
               {"classification", enum_name(kLossNames, cfg.loss.classification)},
               {"focal_alpha", cfg.loss.focal_alpha},
               {"focal_gamma", cfg.loss.focal_gamma}};
  j["train"] = {{"batch_size", t.batch_size},
                {"momentum", t.momentum},
                {"base_lr", t.base_lr},
                {"warmup_epochs", t.warmup_epochs},
                {"epochs", t.epochs},
                {"schedule", enum_name(kScheduleNames, t.schedule)},
                {"step_every_epochs", t.step_every_epochs},
                {"step_gamma", t.step_gamma},
                {"random_crop", t.random_crop},
                {"crop_size", t.crop_size},
                {"crop_scale_min", t.crop_scale_min},
                {"horizontal_flip", t.horizontal_flip},
                {"use_hashtags", t.use_hashtags},
                {"eval_threshold", t.eval_threshold}};
  j["panoptic"] = {{"tau_p", cfg.panoptic.tau_p},
                   {"min_area", cfg.panoptic.min_area},
                   {"area_scope", enum_name(kScopeNames, cfg.panoptic.area_scope)},
                   {"tau_det", cfg.tau_det}};
  j["saliency"] = {{"tau_cam", cfg.saliency.tau_cam}, {"resample", enum_name(kResampleNames, t.cam_resample)}};
  j["hashtags"] = {{"k", cfg.hashtags.k},
                   {"metric", enum_name(kMetricNames, cfg.hashtags.metric)},
                   {"word_break", cfg.hashtags.use_word_break},
                   {"deduplicate", cfg.hashtags.deduplicate},
                   {"pooling", enum_name(kPoolingNames, cfg.hashtags.pooling)}};
  j["eval"] = {{"threshold", cfg.eval.threshold},
               {"levels", cfg.eval.levels},
               {"fine_tune", cfg.eval.fine_tune},
               {"use_hashtags", cfg.eval.use_hashtags},
               {"knn_sweep", cfg.eval.knn_sweep}};
  j["annotation"] = {{"hitl_tau", cfg.annotation.hitl_tau}};
  j["grouping"] = {{"neutral_band", cfg.grouping.neutral_band},
                   {"low_cut", cfg.grouping.cuts.low_cut},
                   {"high_cut", cfg.grouping.cuts.high_cut},
                   {"low_is_easy", cfg.grouping.cuts.low_is_easy},
                   {"log_base", cfg.grouping.log_base}};
  j["classes"] = {{"object", cfg.classes.object}, {"context", cfg.classes.context}};
  return j;
}

}  // namespace intent
