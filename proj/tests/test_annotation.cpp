#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "doctest.h"
#include "intent/annotation.hpp"
#include "intent/error.hpp"

using namespace intent;

namespace {

RatingsMatrix worked_example() {
  const int rows[10][5] = {{0, 0, 0, 0, 14}, {0, 2, 6, 4, 2}, {0, 0, 3, 5, 6}, {0, 3, 9, 2, 0}, {2, 2, 8, 1, 1},
                           {7, 7, 0, 0, 0},  {3, 2, 6, 3, 0}, {2, 5, 3, 2, 2}, {6, 5, 2, 1, 0}, {0, 2, 2, 3, 7}};
  RatingsMatrix m{Grid<int>(10, 5), 14};
  for (int i = 0; i < 10; ++i) {
    for (int j = 0; j < 5; ++j) m.counts(i, j) = rows[i][j];
  }
  return m;
}

HitResult hit(std::string id, std::string catch_grid, std::vector<std::string> catch_answer) {
  HitResult h{std::move(id), "w", {}};
  h.grids.push_back({"real1", {"img1"}});
  h.grids.push_back({std::move(catch_grid), std::move(catch_answer)});
  return h;
}

}  // namespace

TEST_CASE("worked kappa example") {
  const auto r = fleiss_kappa(worked_example());
  CHECK(r.p_bar == doctest::Approx(0.378021978021978).epsilon(1e-12));
  CHECK(r.p_expected == doctest::Approx(0.21275510204081632).epsilon(1e-12));
  CHECK(r.kappa == doctest::Approx(0.20993070442195522).epsilon(1e-12));
  CHECK_FALSE(r.degenerate);
}

TEST_CASE("kappa edge cases") {
  RatingsMatrix agree{Grid<int>(3, 2), 4};
  agree.counts(0, 0) = 4;
  agree.counts(1, 1) = 4;
  agree.counts(2, 0) = 4;
  CHECK(fleiss_kappa(agree).kappa == doctest::Approx(1.0));

  RatingsMatrix single{Grid<int>(3, 2), 3};
  for (int i = 0; i < 3; ++i) single.counts(i, 0) = 3;
  const auto d = fleiss_kappa(single);
  CHECK(d.kappa == 1.0);
  CHECK(d.degenerate);

  RatingsMatrix bad{Grid<int>(2, 2), 3};
  bad.counts(0, 0) = 3;
  bad.counts(1, 0) = 2;
  CHECK_THROWS_AS(fleiss_kappa(bad), InputError);
  RatingsMatrix one_rater{Grid<int>(1, 2), 1};
  one_rater.counts(0, 0) = 1;
  CHECK_THROWS_AS(fleiss_kappa(one_rater), InputError);
  CHECK_THROWS_AS(fleiss_kappa(RatingsMatrix{Grid<int>(0, 2), 3}), InputError);
}

TEST_CASE("kappa near zero at chance") {
  std::mt19937_64 rng(61);
  std::bernoulli_distribution coin(0.5);
  RatingsMatrix m{Grid<int>(10000, 2), 5};
  for (int i = 0; i < 10000; ++i) {
    for (int r = 0; r < 5; ++r) ++m.counts(i, coin(rng) ? 1 : 0);
  }
  CHECK(std::abs(fleiss_kappa(m).kappa) < 0.02);
}

TEST_CASE("kappa is invariant to item and category permutations") {
  const auto base = fleiss_kappa(worked_example()).kappa;
  std::mt19937_64 rng(62);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<int> items(10), cats(5);
    std::iota(items.begin(), items.end(), 0);
    std::iota(cats.begin(), cats.end(), 0);
    std::shuffle(items.begin(), items.end(), rng);
    std::shuffle(cats.begin(), cats.end(), rng);
    const auto src = worked_example();
    RatingsMatrix m{Grid<int>(10, 5), 14};
    for (int i = 0; i < 10; ++i) {
      for (int j = 0; j < 5; ++j) m.counts(i, j) = src.counts(items[i], cats[j]);
    }
    CHECK(fleiss_kappa(m).kappa == doctest::Approx(base).epsilon(1e-12));
  }
}

TEST_CASE("ratings CSV and matrices") {
  const auto ratings = parse_ratings_csv(
      "rater_id,item_id,category,task_id\n"
      "r1,i1,yes,t1\nr2,i1,yes,t1\nr1,i2,no,t1\nr2,i2,yes,t1\n"
      "r3,i3,no,t2\nr4,i3,no,t2\nr3,i4,yes,t2\nr4,i4,yes,t2\n");
  REQUIRE(ratings.size() == 8);
  CHECK(ratings[0].item_id == "i1");
  CHECK(ratings[0].task_id == "t1");

  const auto m = ratings_matrix(ratings);
  CHECK(m.counts.rows() == 4);
  CHECK(m.counts.cols() == 2);
  CHECK(m.n_raters == 2);

  const auto mean = mean_task_kappa(ratings);
  REQUIRE(mean.per_task.size() == 2);
  CHECK(mean.per_task.at("t2").kappa == doctest::Approx(1.0));
  CHECK(mean.mean ==
        doctest::Approx((mean.per_task.at("t1").kappa + mean.per_task.at("t2").kappa) / 2.0));

  const auto no_task = parse_ratings_csv("item_id,rater_id,category\na,x,1\na,y,1\n");
  CHECK(no_task[0].task_id.empty());
  CHECK_THROWS_AS(parse_ratings_csv("item_id,category\na,1\n"), InputError);

  auto uneven = ratings;
  uneven.pop_back();
  CHECK_THROWS_AS(ratings_matrix(uneven), InputError);
}

TEST_CASE("catch trial filtering") {
  const CatchKey key{{"catchA", {"x", "y"}}, {"catchB", {}}};
  const std::vector<HitResult> pass{hit("h1", "catchA", {"y", "x"}), hit("h2", "catchB", {})};
  const auto kept = filter_catch_trials(pass, key);
  REQUIRE(kept.size() == 2);
  CHECK(kept[0].hit_id == "h1");

  std::vector<HitResult> mixed = pass;
  mixed.push_back(hit("h3", "catchA", {"x"}));
  mixed.push_back(hit("h4", "catchB", {"z"}));
  mixed.push_back(hit("h5", "catchA", {"x", "y", "x"}));
  const auto filtered = filter_catch_trials(mixed, key);
  std::vector<std::string> ids;
  for (const auto& h : filtered) ids.push_back(h.hit_id);
  CHECK(ids == std::vector<std::string>{"h1", "h2", "h5"});

  HitResult none{"h6", "w", {{"real1", {}}}};
  CHECK_THROWS_AS(filter_catch_trials({none}, key), InputError);
  HitResult two = hit("h7", "catchA", {"x", "y"});
  two.grids.push_back({"catchB", {}});
  CHECK_THROWS_AS(filter_catch_trials({two}, key), InputError);
}

TEST_CASE("label aggregation depends only on the count") {
  CHECK(aggregate_labels({true, true, true}) == LabelConfidence::DefiniteYes);
  CHECK(aggregate_labels({true, true, false}) == LabelConfidence::PossibleYes);
  CHECK(aggregate_labels({false, true, true}) == LabelConfidence::PossibleYes);
  CHECK(aggregate_labels({false, false, true}) == LabelConfidence::PossibleNo);
  CHECK(aggregate_labels({false, false, false}) == LabelConfidence::No);
  CHECK_THROWS_AS(aggregate_labels({true, true}), InputError);
  CHECK_THROWS_AS(aggregate_labels({true, true, true, true}), InputError);
  CHECK(to_string(LabelConfidence::PossibleNo) == "possible_no");
}

TEST_CASE("human-in-the-loop selection") {
  const std::map<std::string, std::vector<double>> zeros{{"a", {0, 0}}, {"b", {0, 0}}};
  const auto empty = hitl_select(zeros);
  CHECK(empty.at(0).empty());
  CHECK(empty.at(1).empty());

  const std::map<std::string, std::vector<double>> scores{{"a", {0.35, 0.9}}, {"b", {0.36, 0.1}}};
  const auto q = hitl_select(scores);
  CHECK(q.at(0) == std::vector<std::string>{"b"});
  CHECK(q.at(1) == std::vector<std::string>{"a"});

  std::mt19937_64 rng(63);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::map<std::string, std::vector<double>> many;
  for (int i = 0; i < 50; ++i) many["img" + std::to_string(i)] = {u(rng), u(rng), u(rng)};
  std::size_t prev = std::numeric_limits<std::size_t>::max();
  for (double tau = 0.0; tau <= 1.0; tau += 0.05) {
    std::size_t total = 0;
    for (const auto& [cls, images] : hitl_select(many, tau)) total += images.size();
    CHECK(total <= prev);
    prev = total;
  }
}
