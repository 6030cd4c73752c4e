// Command-line entry point for training, evaluation and the analysis studies.

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "intent/annotation.hpp"
#include "intent/config.hpp"
#include "intent/dataset.hpp"
#include "intent/error.hpp"
#include "intent/evaluation.hpp"
#include "intent/hashtags.hpp"
#include "intent/masks.hpp"
#include "intent/model.hpp"
#include "intent/plot.hpp"
#include "intent/synthetic.hpp"
#include "intent/taxonomy.hpp"
#include "intent/text_io.hpp"
#include "intent/training.hpp"

namespace fs = std::filesystem;
using namespace intent;

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitConfig = 2;
constexpr int kExitData = 3;

constexpr std::string_view kSweepHeader = "# knn-sweep v1";

struct Common {
  std::string config_path;
  std::optional<std::uint64_t> seed;

  ExperimentConfig load() const {
    ExperimentConfig cfg = config_path.empty() ? ExperimentConfig{} : load_config(config_path);
    if (seed) cfg.seed = *seed;
    cfg.train.seed = cfg.seed;
    cfg.validate();
    return cfg;
  }
};

std::string class_name(int k, int num_classes) {
  if (num_classes == Taxonomy::kNumClasses) return Taxonomy::builtin().classes()[k].name;
  return "class" + std::to_string(k);
}

Grid<std::uint8_t> labels_of(const Dataset& data, int num_classes) {
  Grid<std::uint8_t> g(static_cast<int>(data.size()), num_classes);
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (static_cast<int>(data[i].labels.size()) != num_classes) {
      throw InputError("sample " + data[i].id + " label width does not match the model");
    }
    for (int k = 0; k < num_classes; ++k) g(static_cast<int>(i), k) = data[i].labels[k];
  }
  return g;
}

// "key<TAB>value" lines; per-class rows carry the class name.
std::string metrics_text(const F1Report& report, const std::vector<std::pair<std::string, std::map<std::string, double>>>&
                                                      groups) {
  std::string out = "# intent-metrics v1\n";
  out += "macro_f1\t" + text::format_double(report.macro) + "\n";
  const int n = static_cast<int>(report.per_class.size());
  for (int k = 0; k < n; ++k) {
    out += "class\t" + std::to_string(k) + "\t" + class_name(k, n) + "\t" + text::format_double(report.per_class[k]) +
           "\n";
  }
  for (const auto& [kind, table] : groups) {
    for (const auto& [name, v] : table) out += "group\t" + kind + "\t" + name + "\t" + text::format_double(v) + "\n";
  }
  return out;
}

Dataset load_data(const std::string& manifest, const ExperimentConfig& cfg) {
  return load_dataset(load_manifest(manifest), cfg.resize_longest);
}

std::vector<int> parse_int_list(const std::string& s) {
  std::vector<int> out;
  for (const auto& f : text::split(s, ',')) out.push_back(static_cast<int>(text::parse_int(text::trim(f), "k")));
  return out;
}

std::vector<KnnSweepPoint> parse_sweep(std::string_view body) {
  const auto lines = text::split_lines(body);
  if (lines.empty() || text::trim(lines[0]) != kSweepHeader) throw InputError("not a k-sweep table");
  std::vector<KnnSweepPoint> out;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (lines[i].empty() || lines[i][0] == '#') continue;
    const auto f = text::split(lines[i], '\t');
    if (f.size() != 2) throw InputError("k-sweep line " + std::to_string(i + 1) + ": expected 2 fields");
    out.push_back({static_cast<int>(text::parse_int(f[0], "k")), text::parse_double(f[1], "macro F1")});
  }
  return out;
}

std::string serialize_sweep(const std::vector<KnnSweepPoint>& points) {
  std::string out = std::string(kSweepHeader) + "\n";
  for (const auto& p : points) out += std::to_string(p.k) + "\t" + text::format_double(p.macro_f1) + "\n";
  return out;
}

struct RetrievalInputs {
  std::string index;
  std::string tags;
  std::string dict;
  std::string embeddings;
  std::string queries;

  void add(CLI::App* cmd, bool required) {
    auto* a = cmd->add_option("--index", index, "neighbour post vectors (id<TAB>v1 v2 ...)");
    auto* b = cmd->add_option("--tags", tags, "neighbour hashtags (id<TAB>tag,tag,...)");
    auto* c = cmd->add_option("--dict", dict, "word-segmentation dictionary");
    auto* d = cmd->add_option("--embeddings", embeddings, "word vectors");
    auto* e = cmd->add_option("--queries", queries, "query vectors (id<TAB>v1 v2 ...)");
    if (required) {
      for (auto* o : {a, b, c, d, e}) o->required();
    }
  }
};

int run_train(const Common& common, const std::string& manifest, const std::string& val_manifest,
              const std::string& out_dir) {
  const auto cfg = common.load();
  const Dataset train_set = load_data(manifest, cfg);
  std::optional<Dataset> val;
  if (!val_manifest.empty()) val = load_data(val_manifest, cfg);
  IntentModel model(cfg.model, cfg.seed);
  auto result = train(std::move(model), train_set, val ? &*val : nullptr, cfg.train, cfg.loss, cfg.classes,
                      [](const EpochRecord& r) {
                        std::fprintf(stderr, "epoch %d  cls %.4f  loc %.4f  train F1 %.4f\n", r.epoch,
                                     r.mean_classification, r.mean_localization, r.train_macro_f1);
                      });
  fs::create_directories(out_dir);
  result.best.save(fs::path(out_dir) / "model.ckpt");
  text::write_file(fs::path(out_dir) / "epoch_log.jsonl", serialize_epoch_log(result.log));
  const Dataset& report_set = val ? *val : train_set;
  const auto report = macro_f1(predict(result.best, report_set, cfg.train.use_hashtags),
                               labels_of(report_set, cfg.model.num_classes), cfg.eval.threshold);
  std::string metrics = metrics_text(report, {});
  metrics += "best_epoch\t" + std::to_string(result.best_epoch) + "\n";
  text::write_file(fs::path(out_dir) / "metrics.txt", metrics);
  return 0;
}

int run_eval(const Common& common, const std::string& manifest, const std::string& ckpt, const std::string& out,
             const std::string& groups_path, const std::string& scores_out) {
  const auto cfg = common.load();
  const auto model = IntentModel::load(ckpt);
  const Dataset data = load_data(manifest, cfg);
  const auto labels = labels_of(data, model.num_classes());
  const auto report = macro_f1(predict(model, data, cfg.eval.use_hashtags), labels, cfg.eval.threshold);
  std::vector<std::pair<std::string, std::map<std::string, double>>> groups;
  if (!groups_path.empty()) {
    const auto g = parse_groups(text::read_file(groups_path));
    groups.emplace_back("content", group_report(report.per_class, content_grouping(g)));
    groups.emplace_back("difficulty", group_report(report.per_class, difficulty_grouping(g)));
  }
  text::write_file(out, metrics_text(report, groups));
  if (!scores_out.empty()) {
    std::vector<ClassScore> scores;
    for (int k = 0; k < model.num_classes(); ++k) {
      double pos = 0.0;
      for (int i = 0; i < labels.rows(); ++i) pos += labels(i, k);
      scores.push_back({100.0 * random_guess_f1(pos / labels.rows()), 100.0 * report.per_class[k]});
    }
    text::write_file(scores_out, serialize_class_scores(scores));
  }
  return 0;
}

int run_study(const Common& common, const std::string& manifest, const std::string& ckpt, const std::string& target,
              const std::string& out, const std::string& train_manifest) {
  const auto cfg = common.load();
  if (target != "object" && target != "context") throw ConfigError("--target must be object or context");
  const auto t = target == "object" ? DisruptionTarget::Object : DisruptionTarget::Context;
  const auto model = IntentModel::load(ckpt);
  const Dataset data = load_data(manifest, cfg);
  DisruptionConfig dc;
  dc.threshold = cfg.eval.threshold;
  dc.use_hashtags = cfg.eval.use_hashtags;
  std::optional<Dataset> ft;
  if (cfg.eval.fine_tune) {
    if (train_manifest.empty()) throw ConfigError("eval.fine_tune needs --train-manifest");
    ft = load_data(train_manifest, cfg);
    dc.fine_tune = true;
    dc.fine_tune_set = &*ft;
    dc.fine_tune_cfg = cfg.train;
    dc.fine_tune_loss = cfg.loss;
    dc.fine_tune_sets = cfg.classes;
  }
  const auto series = run_disruption_study(model, data, cfg.eval.levels, t, dc);
  text::write_file(out, serialize_study(series, t));
  return 0;
}

int run_group(const Common& common, const std::vector<std::string>& studies, const std::string& f1_path,
              const std::string& out) {
  const auto cfg = common.load();
  const auto object = parse_study(text::read_file(studies.at(0)));
  const auto context = parse_study(text::read_file(studies.at(1)));
  const auto scores = parse_class_scores(text::read_file(f1_path));
  text::write_file(out, serialize_groups(group_classes(object, context, scores, cfg.grouping)));
  return 0;
}

int run_hashtag_build(const Common& common, const RetrievalInputs& in, const std::string& out_dir) {
  const auto cfg = common.load();
  const auto index = load_vectors(in.index);
  const auto tags = load_neighbor_tags(in.tags);
  const auto dict = SegDictionary::load(in.dict);
  const auto emb = EmbeddingTable::load(in.embeddings);
  for (const auto& q : load_vectors(in.queries)) {
    const auto f = build_hashtag_feature(q.vec, index, tags, dict, emb, cfg.hashtags);
    text::write_file(fs::path(out_dir) / (std::to_string(q.id) + ".txt"), serialize_feature(f));
  }
  return 0;
}

std::vector<KnnQuery> load_knn_queries(const std::string& vectors, const std::string& labels_path) {
  std::map<long long, std::pair<std::vector<std::uint8_t>, bool>> labels;
  const auto lines = text::split_lines(text::read_file(labels_path));
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (lines[i].empty() || lines[i][0] == '#') continue;
    const auto f = text::split(lines[i], '\t');
    if (f.size() != 3) throw InputError("label line " + std::to_string(i + 1) + ": expected id, bits, split");
    std::vector<std::uint8_t> bits;
    for (char c : f[1]) {
      if (c != '0' && c != '1') throw InputError("label line " + std::to_string(i + 1) + ": bad label bits");
      bits.push_back(c == '1');
    }
    if (f[2] != "train" && f[2] != "test") throw InputError("label line " + std::to_string(i + 1) + ": bad split");
    labels[text::parse_int(f[0], "query id")] = {bits, f[2] == "train"};
  }
  std::vector<KnnQuery> out;
  for (auto& q : load_vectors(vectors)) {
    const auto it = labels.find(q.id);
    if (it == labels.end()) throw InputError("query " + std::to_string(q.id) + " has no labels");
    out.push_back({std::move(q.vec), it->second.first, it->second.second});
  }
  return out;
}

int run_knn_sweep(const Common& common, const RetrievalInputs& in, const std::string& labels_path,
                  const std::string& ks_text, const std::string& out, const std::string& plot_path, bool synthetic) {
  const auto cfg = common.load();
  const std::vector<int> ks = ks_text.empty() ? cfg.eval.knn_sweep : parse_int_list(ks_text);
  std::vector<KnnSweepPoint> points;
  HashtagFeatureConfig hc = cfg.hashtags;
  if (synthetic) {
    synth::NeighborCorpusConfig nc;
    nc.seed = cfg.seed;
    const auto corpus = synth::neighbor_corpus(nc);
    std::vector<KnnQuery> queries;
    for (std::size_t i = 0; i < corpus.queries.size(); ++i) {
      queries.push_back({corpus.queries[i].vec, corpus.labels[i], corpus.is_train[i]});
    }
    hc.metric = Metric::Euclidean;
    points = knn_sweep(queries, corpus.index, corpus.tags, corpus.dictionary, corpus.embeddings, hc, ks,
                       cfg.eval.threshold);
  } else {
    for (const auto* p : {&in.index, &in.tags, &in.dict, &in.embeddings, &in.queries, &labels_path}) {
      if (p->empty()) throw ConfigError("knn-sweep needs --index --tags --dict --embeddings --queries --labels");
    }
    const auto index = load_vectors(in.index);
    points = knn_sweep(load_knn_queries(in.queries, labels_path), index, load_neighbor_tags(in.tags),
                       SegDictionary::load(in.dict), EmbeddingTable::load(in.embeddings), hc, ks, cfg.eval.threshold);
  }
  text::write_file(out, serialize_sweep(points));
  if (!plot_path.empty()) {
    PlotSeries s{"macro F1", {}, {}};
    for (const auto& p : points) {
      s.x.push_back(p.k);
      s.y.push_back(p.macro_f1);
    }
    text::write_file(plot_path, line_chart_svg({s}, {"Effect of k", "k", "macro F1"}));
  }
  return 0;
}

int run_kappa(const std::string& ratings_path, const std::string& out) {
  const auto ratings = parse_ratings_csv(text::read_file(ratings_path));
  const auto pooled = fleiss_kappa(ratings_matrix(ratings));
  nlohmann::json j;
  j["version"] = 1;
  j["pooled"] = {{"kappa", pooled.kappa},
                 {"p_bar", pooled.p_bar},
                 {"p_expected", pooled.p_expected},
                 {"degenerate", pooled.degenerate}};
  const bool has_tasks = std::any_of(ratings.begin(), ratings.end(), [](const Rating& r) { return !r.task_id.empty(); });
  if (has_tasks) {
    const auto per_task = mean_task_kappa(ratings);
    j["task_mean"] = per_task.mean;
    for (const auto& [task, k] : per_task.per_task) j["tasks"][task] = k.kappa;
  }
  text::write_file(out, j.dump(1) + "\n");
  return 0;
}

int run_plot(const std::vector<std::string>& studies, const std::string& sweep, const std::string& out) {
  std::vector<PlotSeries> series;
  PlotLabels labels;
  if (!sweep.empty()) {
    PlotSeries s{"macro F1", {}, {}};
    for (const auto& p : parse_sweep(text::read_file(sweep))) {
      s.x.push_back(p.k);
      s.y.push_back(p.macro_f1);
    }
    series.push_back(std::move(s));
    labels = {"Effect of k", "k", "macro F1"};
  }
  for (const auto& path : studies) {
    const auto body = text::read_file(path);
    const auto study = parse_study(body);
    if (study.empty()) throw InputError(path + ": empty study");
    PlotSeries s{nlohmann::json::parse(body).at("target").get<std::string>(), study[0].levels, {}};
    for (std::size_t l = 0; l < s.x.size(); ++l) {
      double mean = 0.0;
      for (const auto& c : study) mean += c.f1[l] / static_cast<double>(study.size());
      s.y.push_back(mean);
    }
    series.push_back(std::move(s));
    labels = {"Content disruption", "fraction removed", "macro F1"};
  }
  if (series.empty()) throw ConfigError("plot needs --study or --sweep");
  text::write_file(out, line_chart_svg(series, labels));
  return 0;
}

int run_build_masks(const Common& common, const std::string& dump, const std::string& mode, int rows, int cols,
                    const std::string& out) {
  const auto cfg = common.load();
  const auto regions = load_segmentation_dump(dump);
  if (!regions.empty()) {
    rows = regions[0].raster.rows();
    cols = regions[0].raster.cols();
  }
  if (rows <= 0 || cols <= 0) throw ConfigError("empty dump needs --rows and --cols");
  MaskPair masks;
  if (mode == "panoptic") masks = aggregate_masks_panoptic(regions, rows, cols, cfg.panoptic);
  else if (mode == "complement") masks = aggregate_masks_complement(regions, rows, cols, cfg.tau_det);
  else throw ConfigError("--mode must be panoptic or complement");
  save_mask_pair(out, masks);
  return 0;
}

int run_make_planted(const Common& common, const std::string& out_dir, int images, int size) {
  const auto cfg = common.load();
  synth::PlantedConfig pc;
  pc.images = images;
  pc.size = size;
  // Patch sides scale with the image; 32 px gives the 10..16 default.
  pc.patch_min = std::max(1, size * 5 / 16);
  pc.patch_max = std::max(pc.patch_min, size / 2);
  pc.seed = cfg.seed;
  const auto manifest = write_dataset(out_dir, synth::planted_dataset(pc));
  std::cout << manifest.string() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Intent recognition experiments"};
  app.require_subcommand(1);
  Common common;
  std::uint64_t seed_value = 0;
  app.add_option("--config", common.config_path, "experiment config (JSON)");
  auto* seed_opt = app.add_option("--seed", seed_value, "seed for every random choice (overrides the config)");

  std::string manifest, val_manifest, out_dir, ckpt, out, groups_path, scores_out, target, train_manifest, f1_path;
  std::string labels_path, ks_text, plot_path, ratings_path, sweep_path, dump_dir, mode = "panoptic";
  std::vector<std::string> studies;
  int rows = 0, cols = 0, images = 200, size = 32;
  bool synthetic = false;
  RetrievalInputs retrieval;
  RetrievalInputs sweep_inputs;

  auto* train_cmd = app.add_subcommand("train", "train a model and save the best checkpoint");
  train_cmd->add_option("--manifest", manifest, "training manifest")->required();
  train_cmd->add_option("--val", val_manifest, "validation manifest");
  train_cmd->add_option("--out-dir", out_dir, "output directory")->required();

  auto* eval_cmd = app.add_subcommand("eval", "per-class and group F1 of a checkpoint");
  eval_cmd->add_option("--manifest", manifest)->required();
  eval_cmd->add_option("--ckpt", ckpt)->required();
  eval_cmd->add_option("--out", out)->required();
  eval_cmd->add_option("--groups", groups_path, "class grouping file for group F1");
  eval_cmd->add_option("--scores-out", scores_out, "write random-guess and model F1 per class");

  auto* study_cmd = app.add_subcommand("study-disruption", "F1 as object or context pixels are removed");
  study_cmd->add_option("--manifest", manifest)->required();
  study_cmd->add_option("--ckpt", ckpt)->required();
  study_cmd->add_option("--target", target, "object or context")->required();
  study_cmd->add_option("--out", out)->required();
  study_cmd->add_option("--train-manifest", train_manifest, "training set for fine-tune mode");

  auto* group_cmd = app.add_subcommand("group-classes", "content and difficulty group per class");
  group_cmd->add_option("--studies", studies, "object study then context study")->required()->expected(2);
  group_cmd->add_option("--f1", f1_path, "class score file")->required();
  group_cmd->add_option("--out", out)->required();

  auto* ht_cmd = app.add_subcommand("hashtag-build", "hashtag feature per query from its neighbours");
  retrieval.add(ht_cmd, true);
  ht_cmd->add_option("--out-dir", out_dir)->required();

  auto* knn_cmd = app.add_subcommand("knn-sweep", "macro F1 of hashtag features as k varies");
  sweep_inputs.add(knn_cmd, false);
  knn_cmd->add_option("--labels", labels_path, "query labels (id<TAB>bits<TAB>train|test)");
  knn_cmd->add_option("--k", ks_text, "comma-separated k values");
  knn_cmd->add_option("--out", out)->required();
  knn_cmd->add_option("--plot", plot_path, "SVG curve");
  knn_cmd->add_flag("--synthetic", synthetic, "use a generated corpus whose relevance decays with rank");

  auto* kappa_cmd = app.add_subcommand("kappa", "Fleiss' kappa of a ratings CSV");
  kappa_cmd->add_option("--ratings", ratings_path)->required();
  kappa_cmd->add_option("--out", out)->required();

  auto* plot_cmd = app.add_subcommand("plot", "SVG chart of studies or a k sweep");
  plot_cmd->add_option("--study", studies, "study files");
  plot_cmd->add_option("--sweep", sweep_path, "k-sweep table");
  plot_cmd->add_option("--out", out)->required();

  auto* masks_cmd = app.add_subcommand("build-masks", "object/context masks from a segmentation dump");
  masks_cmd->add_option("--dump", dump_dir)->required();
  masks_cmd->add_option("--mode", mode, "panoptic or complement");
  masks_cmd->add_option("--rows", rows);
  masks_cmd->add_option("--cols", cols);
  masks_cmd->add_option("--out", out)->required();

  auto* planted_cmd = app.add_subcommand("make-planted", "write a synthetic planted-region dataset");
  planted_cmd->add_option("--out-dir", out_dir)->required();
  planted_cmd->add_option("--images", images);
  planted_cmd->add_option("--size", size);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }
  if (seed_opt->count() > 0) common.seed = seed_value;

  try {
    if (*train_cmd) return run_train(common, manifest, val_manifest, out_dir);
    if (*eval_cmd) return run_eval(common, manifest, ckpt, out, groups_path, scores_out);
    if (*study_cmd) return run_study(common, manifest, ckpt, target, out, train_manifest);
    if (*group_cmd) return run_group(common, studies, f1_path, out);
    if (*ht_cmd) return run_hashtag_build(common, retrieval, out_dir);
    if (*knn_cmd) return run_knn_sweep(common, sweep_inputs, labels_path, ks_text, out, plot_path, synthetic);
    if (*kappa_cmd) return run_kappa(ratings_path, out);
    if (*plot_cmd) return run_plot(studies, sweep_path, out);
    if (*masks_cmd) return run_build_masks(common, dump_dir, mode, rows, cols, out);
    if (*planted_cmd) return run_make_planted(common, out_dir, images, size);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const InputError& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return kExitData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  return kExitUsage;
}
