#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <string>

#include "doctest.h"
#include "intent/annotation.hpp"
#include "intent/evaluation.hpp"
#include "intent/hashtags.hpp"
#include "intent/masks.hpp"
#include "intent/taxonomy.hpp"
#include "intent/text_io.hpp"
#include "json.hpp"

using namespace intent;
namespace fs = std::filesystem;

namespace {

int run(const std::string& args) {
  const std::string cmd = std::string(INTENT_CLI_PATH) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WEXITSTATUS(status);
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("intent_test_cli_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string p(const fs::path& path) { return path.string(); }

DisruptionSeries removed(std::vector<double> f1) {
  DisruptionSeries s;
  s.axis = DisruptionAxis::Removed;
  s.levels = {0.0, 0.5, 1.0};
  s.f1 = std::move(f1);
  return s;
}

}  // namespace

TEST_CASE("exit codes") {
  const fs::path dir = scratch("codes");
  CHECK(run("") == 1);
  CHECK(run("--no-such-flag kappa") == 1);
  CHECK(run("kappa --ratings") == 1);

  text::write_file(dir / "bad.json", R"({"version": 1, "unknown_key": 3})");
  CHECK(run("--config " + p(dir / "bad.json") + " make-planted --out-dir " + p(dir / "x")) == 2);
  CHECK(run("--config " + p(dir / "missing.json") + " make-planted --out-dir " + p(dir / "x")) == 2);

  CHECK(run("kappa --ratings " + p(dir / "missing.csv") + " --out " + p(dir / "k.json")) == 3);
  text::write_file(dir / "bad.csv", "item_id,rater_id,category\na,x,1\na,y,1\nb,x,1\n");
  CHECK(run("kappa --ratings " + p(dir / "bad.csv") + " --out " + p(dir / "k.json")) == 3);
  CHECK(run("plot --out " + p(dir / "x.svg")) == 2);
  fs::remove_all(dir);
}

TEST_CASE("group-classes composes the taxonomy rules") {
  const fs::path dir = scratch("group");
  const std::vector<DisruptionSeries> object{removed({0.9, 0.5, 0.1}), removed({0.5, 0.5, 0.5}),
                                             removed({0.5, 0.5, 0.5})};
  const std::vector<DisruptionSeries> context{removed({0.5, 0.5, 0.5}), removed({0.9, 0.5, 0.1}),
                                              removed({0.9, 0.6, 0.3})};
  const std::vector<ClassScore> scores{{5.0, 5.0}, {5.0, 20.0}, {10.0, 50.0}};
  text::write_file(dir / "o.json", serialize_study(object, DisruptionTarget::Object));
  text::write_file(dir / "c.json", serialize_study(context, DisruptionTarget::Context));
  text::write_file(dir / "f1.txt", serialize_class_scores(scores));
  REQUIRE(run("group-classes --studies " + p(dir / "o.json") + " " + p(dir / "c.json") + " --f1 " +
              p(dir / "f1.txt") + " --out " + p(dir / "groups.txt")) == 0);
  const auto groups = parse_groups(text::read_file(dir / "groups.txt"));
  REQUIRE(groups.size() == 3);

  for (int m = 0; m < 3; ++m) {
    const auto so = fit_disruption_line(object[m].retained());
    const auto sc = fit_disruption_line(context[m].retained());
    const double d = information_gain(scores[m].random, scores[m].model);
    CHECK(groups[m].content == assign_content_group(so, sc));
    CHECK(groups[m].difficulty == assign_difficulty(d));
    CHECK(groups[m].gain == doctest::Approx(d));
  }
  CHECK(groups[0].content == ContentGroup::ObjectDependent);
  CHECK(groups[1].content == ContentGroup::ContextDependent);
  CHECK(groups[0].difficulty == DifficultyGroup::Easy);
  CHECK(groups[1].difficulty == DifficultyGroup::Medium);
  CHECK(groups[2].difficulty == DifficultyGroup::Hard);
  fs::remove_all(dir);
}

TEST_CASE("kappa report") {
  const fs::path dir = scratch("kappa");
  std::string csv = "item_id,rater_id,category,task_id\n";
  const int rows[3][2] = {{3, 0}, {0, 3}, {2, 1}};
  for (int i = 0; i < 3; ++i) {
    int rater = 0;
    for (int c = 0; c < 2; ++c) {
      for (int n = 0; n < rows[i][c]; ++n) {
        csv += "i" + std::to_string(i) + ",r" + std::to_string(rater++) + ",c" + std::to_string(c) + ",t" +
               std::to_string(i % 2) + "\n";
      }
    }
  }
  text::write_file(dir / "r.csv", csv);
  REQUIRE(run("kappa --ratings " + p(dir / "r.csv") + " --out " + p(dir / "k.json")) == 0);
  const auto j = nlohmann::json::parse(text::read_file(dir / "k.json"));
  const auto expected = fleiss_kappa(ratings_matrix(parse_ratings_csv(csv)));
  CHECK(j.at("pooled").at("kappa").get<double>() == doctest::Approx(expected.kappa).epsilon(1e-15));
  CHECK(j.at("tasks").size() == 2);
  fs::remove_all(dir);
}

TEST_CASE("hashtag-build matches the library and round trips") {
  const fs::path dir = scratch("hashtags");
  text::write_file(dir / "index.txt", "1\t0 0\n2\t1 0\n3\t5 5\n");
  text::write_file(dir / "tags.txt", "1\tsunsetsky\n2\tsky,beach\n3\tcity\n");
  text::write_file(dir / "dict.txt", "sunset\nsky\nbeach\ncity\n");
  text::write_file(dir / "emb.txt", "sunset 1 0\nsky 0 1\nbeach 2 2\ncity -1 -1\n");
  text::write_file(dir / "q.txt", "7\t0.2 0.1\n");
  text::write_file(dir / "cfg.json", R"({"version": 1, "hashtags": {"k": 2, "metric": "euclidean"}})");
  fs::create_directories(dir / "out");
  REQUIRE(run("--config " + p(dir / "cfg.json") + " hashtag-build --index " + p(dir / "index.txt") + " --tags " +
              p(dir / "tags.txt") + " --dict " + p(dir / "dict.txt") + " --embeddings " + p(dir / "emb.txt") +
              " --queries " + p(dir / "q.txt") + " --out-dir " + p(dir / "out")) == 0);
  const auto f = load_feature(dir / "out" / "7.txt");
  HashtagFeatureConfig hc;
  hc.k = 2;
  hc.metric = Metric::Euclidean;
  const auto expected = build_hashtag_feature(std::vector<double>{0.2, 0.1}, load_vectors(dir / "index.txt"),
                                              load_neighbor_tags(dir / "tags.txt"),
                                              SegDictionary::load(dir / "dict.txt"),
                                              EmbeddingTable::load(dir / "emb.txt"), hc);
  CHECK(f.vector == expected.vector);
  CHECK(f.source_count == 3);
  CHECK(serialize_feature(f) == text::read_file(dir / "out" / "7.txt"));
  fs::remove_all(dir);
}

TEST_CASE("build-masks writes a readable pair") {
  const fs::path dir = scratch("masks");
  Raster r(4, 4);
  r(0, 0) = r(0, 1) = 1;
  save_segmentation_dump(dir / "dump", {make_region(r, 3, RegionKind::Thing, 0.9)});
  REQUIRE(run("build-masks --dump " + p(dir / "dump") + " --mode complement --out " + p(dir / "m")) == 0);
  const auto m = load_mask_pair(dir / "m");
  CHECK(m.object == r);
  CHECK(m.context(3, 3) == 1);
  CHECK(run("build-masks --dump " + p(dir / "dump") + " --mode other --out " + p(dir / "m")) == 2);
  fs::remove_all(dir);
}

TEST_CASE("train, eval, study and plot on a small planted set") {
  const fs::path dir = scratch("pipeline");
  text::write_file(dir / "cfg.json", R"({"version": 1, "resize_longest": 0,
    "model": {"num_classes": 4, "backbone_channels": [4, 6], "backbone_pools": 2},
    "train": {"batch_size": 8, "base_lr": 0.01, "warmup_epochs": 0, "epochs": 1, "random_crop": false},
    "eval": {"levels": [0, 0.5, 1]},
    "classes": {"object": [0, 1], "context": [2, 3]}})");
  const std::string base = "--config " + p(dir / "cfg.json") + " --seed 3 ";
  REQUIRE(run(base + "make-planted --out-dir " + p(dir / "data") + " --images 12 --size 16") == 0);
  const std::string manifest = p(dir / "data" / "manifest.txt");
  REQUIRE(run(base + "train --manifest " + manifest + " --out-dir " + p(dir / "train")) == 0);
  const std::string ckpt = p(dir / "train" / "model.ckpt");
  CHECK(fs::exists(dir / "train" / "epoch_log.jsonl"));

  REQUIRE(run(base + "eval --manifest " + manifest + " --ckpt " + ckpt + " --out " + p(dir / "eval.txt") +
              " --scores-out " + p(dir / "scores.txt")) == 0);
  const auto metrics = text::read_file(dir / "eval.txt");
  CHECK(metrics.rfind("# intent-metrics v1", 0) == 0);
  const auto scores = parse_class_scores(text::read_file(dir / "scores.txt"));
  CHECK(scores.size() == 4);
  CHECK(serialize_class_scores(scores) == text::read_file(dir / "scores.txt"));

  REQUIRE(run(base + "study-disruption --manifest " + manifest + " --ckpt " + ckpt + " --target object --out " +
              p(dir / "o.json")) == 0);
  const auto study = parse_study(text::read_file(dir / "o.json"));
  REQUIRE(study.size() == 4);
  CHECK(study[0].levels == std::vector<double>{0, 0.5, 1});
  CHECK(serialize_study(study, DisruptionTarget::Object) == text::read_file(dir / "o.json"));
  CHECK(run(base + "study-disruption --manifest " + manifest + " --ckpt " + ckpt + " --target elsewhere --out " +
            p(dir / "x.json")) == 2);

  REQUIRE(run("plot --study " + p(dir / "o.json") + " --out " + p(dir / "o.svg")) == 0);
  CHECK(text::read_file(dir / "o.svg").find("<svg") != std::string::npos);
  CHECK(run(base + "eval --manifest " + p(dir / "none.txt") + " --ckpt " + ckpt + " --out " + p(dir / "e.txt")) ==
        3);
  fs::remove_all(dir);
}

TEST_CASE("knn-sweep on explicit inputs") {
  const fs::path dir = scratch("knn");
  std::string index, tags, queries, labels;
  for (int q = 0; q < 8; ++q) {
    const int cls = q % 2;
    queries += std::to_string(q) + "\t" + std::to_string(100 * q) + " 0\n";
    labels += std::to_string(q) + "\t" + (cls ? "01" : "10") + "\t" + (q < 4 ? "train" : "test") + "\n";
    for (int r = 0; r < 4; ++r) {
      const int id = 10 * q + r;
      index += std::to_string(id) + "\t" + std::to_string(100 * q + r + 1) + " 0\n";
      tags += std::to_string(id) + "\t" + (cls ? "beach" : "city") + "\n";
    }
  }
  text::write_file(dir / "index.txt", index);
  text::write_file(dir / "tags.txt", tags);
  text::write_file(dir / "q.txt", queries);
  text::write_file(dir / "labels.txt", labels);
  text::write_file(dir / "dict.txt", "beach\ncity\n");
  text::write_file(dir / "emb.txt", "beach 1 0\ncity 0 1\n");
  text::write_file(dir / "cfg.json", R"({"version": 1, "hashtags": {"metric": "euclidean"}})");
  REQUIRE(run("--config " + p(dir / "cfg.json") + " knn-sweep --index " + p(dir / "index.txt") + " --tags " +
              p(dir / "tags.txt") + " --dict " + p(dir / "dict.txt") + " --embeddings " + p(dir / "emb.txt") +
              " --queries " + p(dir / "q.txt") + " --labels " + p(dir / "labels.txt") + " --k 1,2,4 --out " +
              p(dir / "sweep.txt") + " --plot " + p(dir / "sweep.svg")) == 0);
  const auto sweep = text::read_file(dir / "sweep.txt");
  CHECK(sweep.rfind("# knn-sweep v1", 0) == 0);
  CHECK(sweep.find("1\t1\n") != std::string::npos);
  CHECK(sweep.find("4\t1\n") != std::string::npos);
  CHECK(fs::exists(dir / "sweep.svg"));
  REQUIRE(run("plot --sweep " + p(dir / "sweep.txt") + " --out " + p(dir / "replot.svg")) == 0);
  CHECK(run("knn-sweep --k 1 --out " + p(dir / "x.txt")) == 2);
  fs::remove_all(dir);
}
