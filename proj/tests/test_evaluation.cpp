#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "doctest.h"
#include "intent/error.hpp"
#include "intent/evaluation.hpp"
#include "intent/synthetic.hpp"

using namespace intent;

namespace {

Grid<double> scores_of(std::initializer_list<std::initializer_list<double>> rows) {
  Grid<double> g(static_cast<int>(rows.size()), static_cast<int>(rows.begin()->size()));
  int r = 0;
  for (const auto& row : rows) {
    int c = 0;
    for (double v : row) g(r, c++) = v;
    ++r;
  }
  return g;
}

Grid<std::uint8_t> labels_of(std::initializer_list<std::initializer_list<int>> rows) {
  Grid<std::uint8_t> g(static_cast<int>(rows.size()), static_cast<int>(rows.begin()->size()));
  int r = 0;
  for (const auto& row : rows) {
    int c = 0;
    for (int v : row) g(r, c++) = static_cast<std::uint8_t>(v);
    ++r;
  }
  return g;
}

}  // namespace

TEST_CASE("macro F1 examples") {
  const auto labels = labels_of({{1, 0}, {0, 1}, {1, 1}});
  CHECK(macro_f1(scores_of({{1, 0}, {0, 1}, {1, 1}}), labels).macro == 1.0);
  CHECK(macro_f1(scores_of({{0, 0}, {0, 0}, {0, 0}}), labels).macro == 0.0);

  // Class 0: TP=1 (row 0), FP=1 (row 1), FN=1 (row 2).
  const auto r = macro_f1(scores_of({{0.9, 0.9}, {0.6, 0.9}, {0.1, 0.9}}), labels);
  CHECK(r.per_class[0] == doctest::Approx(0.5));
  CHECK(r.per_class[1] == doctest::Approx(0.8));
  CHECK(r.macro == doctest::Approx(0.65));

  // The threshold is inclusive.
  CHECK(macro_f1(scores_of({{0.5}}), labels_of({{1}})).macro == 1.0);
  CHECK_THROWS_AS(macro_f1(Grid<double>(0, 2), Grid<std::uint8_t>(0, 2)), InputError);
  CHECK_THROWS_AS(macro_f1(scores_of({{1, 0}}), labels), InputError);
}

TEST_CASE("macro F1 is invariant to sample order and class relabeling") {
  std::mt19937_64 rng(51);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const int n = 40, k = 5;
  Grid<double> s(n, k);
  Grid<std::uint8_t> l(n, k);
  for (auto& v : s.data()) v = u(rng);
  for (auto& v : l.data()) v = u(rng) < 0.4;
  const auto base = macro_f1(s, l);

  std::vector<int> rows(n), cols(k);
  std::iota(rows.begin(), rows.end(), 0);
  std::iota(cols.begin(), cols.end(), 0);
  std::shuffle(rows.begin(), rows.end(), rng);
  std::shuffle(cols.begin(), cols.end(), rng);
  Grid<double> s2(n, k);
  Grid<std::uint8_t> l2(n, k);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < k; ++j) {
      s2(i, j) = s(rows[i], cols[j]);
      l2(i, j) = l(rows[i], cols[j]);
    }
  }
  const auto moved = macro_f1(s2, l2);
  CHECK(moved.macro == doctest::Approx(base.macro).epsilon(1e-14));
  for (int j = 0; j < k; ++j) CHECK(moved.per_class[j] == base.per_class[cols[j]]);
}

TEST_CASE("threshold sweep") {
  const auto labels = labels_of({{1}, {0}});
  const auto pts = threshold_sweep(scores_of({{0.7}, {0.4}}), labels, {0.3, 0.5, 0.8});
  REQUIRE(pts.size() == 3);
  CHECK(pts[0].macro == doctest::Approx(2.0 / 3.0));
  CHECK(pts[1].macro == 1.0);
  CHECK(pts[2].macro == 0.0);
}

TEST_CASE("random guess F1") {
  CHECK(random_guess_f1(0.0) == 0.0);
  CHECK(random_guess_f1(1.0) == doctest::Approx(2.0 / 3.0));
  CHECK(random_guess_f1(0.1) == doctest::Approx(2 * 0.1 * 0.5 / 0.6));
}

TEST_CASE("group report") {
  const std::vector<double> f1{0.2, 0.4, 0.9, 0.5};
  Grouping one{{0, "g"}, {1, "g"}, {2, "g"}, {3, "g"}};
  const auto all = group_report(f1, one);
  CHECK(all.at("g") == doctest::Approx(0.5));
  CHECK(all.at("All") == doctest::Approx(0.5));

  Grouping split{{0, "Hard"}, {1, "Easy"}, {2, "Easy"}, {3, "Medium"}};
  const auto r = group_report(f1, split);
  CHECK(r.at("Hard") == 0.2);
  CHECK(r.at("Easy") == doctest::Approx(0.65));
  // Size-weighted group means recombine to All.
  CHECK((r.at("Hard") * 1 + r.at("Easy") * 2 + r.at("Medium") * 1) / 4 == doctest::Approx(r.at("All")));

  split.erase(3);
  CHECK_THROWS_AS(group_report(f1, split), ConfigError);
}

TEST_CASE("groupings from assignments") {
  std::vector<GroupAssignment> g(2);
  g[0] = {0, ContentGroup::ObjectDependent, DifficultyGroup::Hard, 20.0, 1.0, 0.0};
  g[1] = {1, ContentGroup::Others, DifficultyGroup::Easy, 1.0, 0.0, 0.0};
  const auto c = content_grouping(g);
  const auto d = difficulty_grouping(g);
  CHECK(c.at(0) == std::string(to_string(ContentGroup::ObjectDependent)));
  CHECK(d.at(1) == std::string(to_string(DifficultyGroup::Easy)));
}

TEST_CASE("run aggregation") {
  const auto same = aggregate_runs({{{"f1", 0.4}}, {{"f1", 0.4}}});
  CHECK(same.at("f1").stddev == 0.0);
  const auto three = aggregate_runs({{{"f1", 1.0}}, {{"f1", 2.0}}, {{"f1", 3.0}}});
  CHECK(three.at("f1").mean == doctest::Approx(2.0));
  CHECK(three.at("f1").stddev == doctest::Approx(1.0));
  CHECK(three.at("f1").runs == 3);
  const auto single = aggregate_runs({{{"f1", 0.7}}});
  CHECK(single.at("f1").mean == 0.7);
  CHECK(single.at("f1").stddev == 0.0);
  CHECK(single.at("f1").single_run);
}

TEST_CASE("image disruption removes whole components largest first") {
  Image img(3, 4, 6, 1.0);
  Raster mask(4, 6);
  // Component A: 6 pixels, component B: 2 pixels.
  for (int y = 0; y < 2; ++y) {
    for (int x = 0; x < 3; ++x) mask(y, x) = 1;
  }
  mask(3, 5) = 1;
  mask(2, 5) = 1;

  CHECK(disrupt_image(img, mask, 0.0) == img);

  const Image half = disrupt_image(img, mask, 0.5);
  CHECK(half.at(0, 0, 0) == 0.0);
  CHECK(half.at(2, 1, 2) == 0.0);
  CHECK(half.at(0, 3, 5) == 1.0);

  const Image full = disrupt_image(img, mask, 1.0);
  for (int c = 0; c < 3; ++c) {
    for (int y = 0; y < 4; ++y) {
      for (int x = 0; x < 6; ++x) CHECK(full.at(c, y, x) == (mask(y, x) ? 0.0 : 1.0));
    }
  }
}

TEST_CASE("dataset disruption targets the chosen mask") {
  synth::PlantedConfig pc;
  pc.images = 3;
  pc.size = 12;
  pc.patch_min = 3;
  pc.patch_max = 5;
  const Dataset data = synth::planted_dataset(pc);
  const Dataset same = disrupt_dataset(data, 0.0, DisruptionTarget::Object);
  for (std::size_t i = 0; i < data.size(); ++i) CHECK(same[i].image == data[i].image);

  const Dataset no_obj = disrupt_dataset(data, 1.0, DisruptionTarget::Object);
  for (std::size_t i = 0; i < data.size(); ++i) {
    const Raster& m = data[i].masks->object;
    for (int y = 0; y < m.rows(); ++y) {
      for (int x = 0; x < m.cols(); ++x) {
        if (m(y, x)) CHECK(no_obj[i].image.at(1, y, x) == 0.0);
      }
    }
  }

  Dataset missing = data;
  missing[0].masks.reset();
  CHECK_THROWS_AS(disrupt_dataset(missing, 0.5, DisruptionTarget::Context), ConfigError);
}

TEST_CASE("disruption study shape and level zero") {
  synth::PlantedConfig pc;
  pc.images = 6;
  pc.size = 12;
  pc.patch_min = 3;
  pc.patch_max = 5;
  const Dataset data = synth::planted_dataset(pc);
  ModelConfig mc;
  mc.num_classes = synth::kPlantedClasses;
  mc.backbone_channels = {4};
  mc.backbone_pools = 1;
  const IntentModel model(mc, 1);
  const auto series = run_disruption_study(model, data, {0.0, 0.5, 1.0}, DisruptionTarget::Object);
  REQUIRE(series.size() == static_cast<std::size_t>(synth::kPlantedClasses));
  const auto plain = macro_f1(predict(model, data, true), [&] {
    Grid<std::uint8_t> l(static_cast<int>(data.size()), synth::kPlantedClasses);
    for (std::size_t i = 0; i < data.size(); ++i) {
      for (int c = 0; c < synth::kPlantedClasses; ++c) l(static_cast<int>(i), c) = data[i].labels[c];
    }
    return l;
  }());
  for (int c = 0; c < synth::kPlantedClasses; ++c) {
    CHECK(series[c].axis == DisruptionAxis::Removed);
    CHECK(series[c].levels == std::vector<double>{0.0, 0.5, 1.0});
    CHECK(series[c].f1[0] == plain.per_class[c]);
  }
}

TEST_CASE("study file round trip") {
  DisruptionSeries a, b;
  a.axis = b.axis = DisruptionAxis::Removed;
  a.levels = b.levels = {0.0, 0.25, 1.0};
  a.f1 = {0.9, 1.0 / 3.0, 0.1};
  b.f1 = {0.2, 0.2, 0.3};
  const auto text = serialize_study({a, b}, DisruptionTarget::Context);
  const auto back = parse_study(text);
  REQUIRE(back.size() == 2);
  CHECK(back[0].levels == a.levels);
  CHECK(back[0].f1 == a.f1);
  CHECK(back[1].f1 == b.f1);
  CHECK(back[0].axis == DisruptionAxis::Removed);
  CHECK(serialize_study(back, DisruptionTarget::Context) == text);
  CHECK_THROWS(parse_study("{\"version\": 2}"));
}

TEST_CASE("centroid probe") {
  const std::vector<std::vector<double>> train{{0, 0}, {0, 1}, {4, 0}, {4, 1}};
  Grid<std::uint8_t> labels(4, 2);
  labels(2, 0) = labels(3, 0) = 1;
  const auto s = centroid_probe_scores(train, labels, {{3.5, 0.5}, {0.5, 0.5}});
  CHECK(s(0, 0) > 0.5);
  CHECK(s(1, 0) < 0.5);
  // Class 1 has no positives.
  CHECK(s(0, 1) == 0.0);
  CHECK(s(1, 1) == 0.0);
}

TEST_CASE("knn sweep reports one point per k") {
  synth::NeighborCorpusConfig nc;
  nc.queries = 24;
  nc.posts_per_query = 30;
  nc.noise_tags = 20;
  nc.seed = 3;
  const auto corpus = synth::neighbor_corpus(nc);
  std::vector<KnnQuery> queries;
  for (std::size_t i = 0; i < corpus.queries.size(); ++i) {
    queries.push_back({corpus.queries[i].vec, corpus.labels[i], corpus.is_train[i]});
  }
  HashtagFeatureConfig hc;
  hc.metric = Metric::Euclidean;
  const auto pts =
      knn_sweep(queries, corpus.index, corpus.tags, corpus.dictionary, corpus.embeddings, hc, {5, 10, 20});
  REQUIRE(pts.size() == 3);
  CHECK(pts[1].k == 10);
  for (const auto& p : pts) CHECK((p.macro_f1 >= 0.0 && p.macro_f1 <= 1.0));
  const auto again =
      knn_sweep(queries, corpus.index, corpus.tags, corpus.dictionary, corpus.embeddings, hc, {5, 10, 20});
  CHECK(again[2].macro_f1 == pts[2].macro_f1);
}
