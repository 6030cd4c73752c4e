#include <filesystem>

#include "doctest.h"
#include "intent/config.hpp"
#include "intent/error.hpp"
#include "intent/text_io.hpp"

using namespace intent;

TEST_CASE("defaults carry the published hyperparameters") {
  const auto cfg = parse_config(R"({"version": 1})");
  CHECK(cfg.loss.lambda_loc == 0.1);
  CHECK(cfg.model.prior_pi == 0.01);
  CHECK(cfg.panoptic.tau_p == 0.7);
  CHECK(cfg.panoptic.min_area == 0.10);
  CHECK(cfg.tau_det == 0.6);
  CHECK(cfg.saliency.tau_cam == 0.4);
  CHECK(cfg.hashtags.k == 150);
  CHECK(cfg.train.batch_size == 128);
  CHECK(cfg.train.momentum == 0.9);
  CHECK(cfg.train.warmup_epochs == 5);
  CHECK(cfg.train.base_lr == 1e-3);
  CHECK(cfg.train.crop_size == 224);
  CHECK(cfg.resize_longest == 1280);
  CHECK(cfg.annotation.hitl_tau == 0.35);
  CHECK(cfg.grouping.cuts.low_cut == 5.0);
  CHECK(cfg.grouping.cuts.high_cut == 15.0);
  CHECK(cfg.eval.knn_sweep == std::vector<int>{25, 50, 100, 150, 200, 250});
  CHECK(cfg.model.num_classes == 28);
}

TEST_CASE("values override defaults") {
  const auto cfg = parse_config(R"({"version": 1, "seed": 4,
    "model": {"num_classes": 4, "hashtag_dim": 8},
    "loss": {"lambda_loc": 0.5, "classification": "focal"},
    "train": {"schedule": "cosine", "epochs": 7},
    "saliency": {"resample": "cam_to_image"},
    "hashtags": {"metric": "euclidean", "word_break": false, "pooling": "frequency_weighted"},
    "classes": {"object": [0, 1], "context": [3]}})");
  CHECK(cfg.seed == 4);
  CHECK(cfg.model.hashtag_dim == 8);
  CHECK(cfg.loss.lambda_loc == 0.5);
  CHECK(cfg.loss.classification == ClassificationLoss::Focal);
  CHECK(cfg.train.schedule == LrSchedule::Cosine);
  CHECK(cfg.train.cam_resample == CamResample::CamToImage);
  CHECK(cfg.hashtags.metric == Metric::Euclidean);
  CHECK_FALSE(cfg.hashtags.use_word_break);
  CHECK(cfg.hashtags.pooling == Pooling::FrequencyWeighted);
  CHECK(cfg.classes.object == std::set<int>{0, 1});
  CHECK(cfg.classes.context == std::set<int>{3});
}

TEST_CASE("invalid configs are rejected") {
  CHECK_THROWS_AS(parse_config("{"), ConfigError);
  CHECK_THROWS_AS(parse_config("{}"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"version": 2})"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"version": 1, "bogus": 1})"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"version": 1, "train": {"lr": 0.1}})"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"version": 1, "train": {"epochs": "five"}})"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"version": 1, "loss": {"classification": "hinge"}})"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"version": 1, "train": {"warmup_epochs": 9, "epochs": 3}})"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"version": 1, "saliency": {"tau_cam": 1.0}})"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"version": 1, "classes": {"object": [1], "context": [1]}})"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"version": 1, "classes": {"object": [40]}})"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"version": 1, "model": {"backbone_pools": 9}})"), ConfigError);
  CHECK_THROWS_AS(load_config("/nonexistent/intent.json"), ConfigError);
}

TEST_CASE("config round trip") {
  const auto cfg = parse_config(R"({"version": 1, "seed": 12,
    "model": {"num_classes": 5, "mlp_hidden": [7]},
    "loss": {"lambda_loc": 0.25},
    "train": {"schedule": "step", "base_lr": 0.003},
    "eval": {"levels": [0, 0.5, 1]},
    "grouping": {"low_is_easy": false},
    "classes": {"object": [2]}})");
  const auto j = config_to_json(cfg);
  const auto back = parse_config(j.dump());
  CHECK(config_to_json(back) == j);
  CHECK(back.model.mlp_hidden == std::vector<int>{7});
  CHECK(back.train.schedule == LrSchedule::Step);
  CHECK_FALSE(back.grouping.cuts.low_is_easy);

  const auto path = std::filesystem::temp_directory_path() / "intent_test_config.json";
  text::write_file(path, j.dump(2));
  CHECK(config_to_json(load_config(path)) == j);
  std::filesystem::remove(path);
}

TEST_CASE("model config json") {
  ModelConfig mc;
  mc.num_classes = 6;
  mc.backbone_channels = {3, 5};
  mc.backbone_pools = 2;
  mc.input_mean.clear();
  mc.input_std.clear();
  const auto back = model_config_from_json(model_config_to_json(mc));
  CHECK(back.num_classes == 6);
  CHECK(back.backbone_channels == mc.backbone_channels);
  CHECK(back.backbone_pools == 2);
  CHECK(back.input_mean.empty());
}
