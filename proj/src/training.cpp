#include "intent/training.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "intent/config.hpp"
#include "intent/error.hpp"
#include "intent/evaluation.hpp"

namespace intent {

void TrainConfig::validate() const {
  if (!(base_lr > 0.0)) throw ConfigError("base_lr must be positive");
  if (batch_size <= 0) throw ConfigError("batch_size must be positive");
  if (epochs <= 0) throw ConfigError("epochs must be positive");
  if (warmup_epochs < 0 || warmup_epochs > epochs) throw ConfigError("warmup_epochs must lie in [0, epochs]");
  if (!(momentum >= 0.0 && momentum < 1.0)) throw ConfigError("momentum must lie in [0, 1)");
  if (random_crop && crop_size <= 0) throw ConfigError("crop_size must be positive");
  if (!(crop_scale_min > 0.0 && crop_scale_min <= 1.0)) throw ConfigError("crop_scale_min must lie in (0, 1]");
  if (schedule == LrSchedule::Step && step_every_epochs <= 0) throw ConfigError("step_every_epochs must be positive");
}

double lr_at(long long step, long long steps_per_epoch, const TrainConfig& cfg) {
  if (step < 0) step = 0;
  if (steps_per_epoch <= 0) throw ConfigError("steps_per_epoch must be positive");
  const long long warm = static_cast<long long>(cfg.warmup_epochs) * steps_per_epoch;
  if (step < warm) return cfg.base_lr * static_cast<double>(step) / static_cast<double>(warm);
  switch (cfg.schedule) {
    case LrSchedule::Constant:
      return cfg.base_lr;
    case LrSchedule::Step: {
      const long long epochs_after = (step - warm) / steps_per_epoch;
      return cfg.base_lr * std::pow(cfg.step_gamma, static_cast<double>(epochs_after / cfg.step_every_epochs));
    }
    case LrSchedule::Cosine: {
      const long long total = static_cast<long long>(cfg.epochs) * steps_per_epoch;
      if (total <= warm) return cfg.base_lr;
      const double t = std::min(1.0, static_cast<double>(step - warm) / static_cast<double>(total - warm));
      return cfg.base_lr * 0.5 * (1.0 + std::cos(std::numbers::pi * t));
    }
  }
  return cfg.base_lr;
}

namespace {

struct CropBox {
  int top = 0;
  int left = 0;
  int height = 0;
  int width = 0;
};

CropBox random_resized_crop_box(int h, int w, double scale_min, nn::Rng& rng) {
  const double area = static_cast<double>(h) * w;
  std::uniform_real_distribution<double> scale(scale_min, 1.0);
  std::uniform_real_distribution<double> log_ratio(std::log(3.0 / 4.0), std::log(4.0 / 3.0));
  for (int attempt = 0; attempt < 10; ++attempt) {
    const double target = area * scale(rng);
    const double aspect = std::exp(log_ratio(rng));
    const int cw = static_cast<int>(std::lround(std::sqrt(target * aspect)));
    const int ch = static_cast<int>(std::lround(std::sqrt(target / aspect)));
    if (cw > 0 && ch > 0 && cw <= w && ch <= h) {
      std::uniform_int_distribution<int> top(0, h - ch);
      std::uniform_int_distribution<int> left(0, w - cw);
      const int t = top(rng);
      return {t, left(rng), ch, cw};
    }
  }
  return {0, 0, h, w};
}

Image crop(const Image& img, const CropBox& b) {
  Image out(img.channels(), b.height, b.width);
  for (int c = 0; c < img.channels(); ++c) {
    for (int y = 0; y < b.height; ++y) {
      for (int x = 0; x < b.width; ++x) out.at(c, y, x) = img.at(c, b.top + y, b.left + x);
    }
  }
  return out;
}

Raster crop(const Raster& r, const CropBox& b) {
  Raster out(b.height, b.width);
  for (int y = 0; y < b.height; ++y) {
    for (int x = 0; x < b.width; ++x) out(y, x) = r(b.top + y, b.left + x);
  }
  return out;
}

void flip(Image& img) {
  for (int c = 0; c < img.channels(); ++c) {
    for (int y = 0; y < img.height(); ++y) {
      for (int x = 0; x < img.width() / 2; ++x) std::swap(img.at(c, y, x), img.at(c, y, img.width() - 1 - x));
    }
  }
}

void flip(Raster& r) {
  for (int y = 0; y < r.rows(); ++y) {
    for (int x = 0; x < r.cols() / 2; ++x) std::swap(r(y, x), r(y, r.cols() - 1 - x));
  }
}

}  // namespace

AugmentedSample augment(const Sample& sample, const TrainConfig& cfg, nn::Rng& rng) {
  AugmentedSample out{sample.image, sample.masks, sample.labels};
  if (cfg.random_crop) {
    const auto box = random_resized_crop_box(out.image.height(), out.image.width(), cfg.crop_scale_min, rng);
    out.image = resize_bilinear(crop(out.image, box), cfg.crop_size, cfg.crop_size);
    if (out.masks) {
      out.masks->object = resize_nearest(crop(out.masks->object, box), cfg.crop_size, cfg.crop_size);
      out.masks->context = resize_nearest(crop(out.masks->context, box), cfg.crop_size, cfg.crop_size);
    }
  }
  if (cfg.horizontal_flip) {
    std::bernoulli_distribution coin(0.5);
    if (coin(rng)) {
      flip(out.image);
      if (out.masks) {
        flip(out.masks->object);
        flip(out.masks->context);
      }
    }
  }
  return out;
}

BatchLoss batch_loss_and_grad(const IntentModel& model, const std::vector<AugmentedSample>& batch,
                              const std::vector<const std::vector<double>*>& hashtags, const LossConfig& loss,
                              const ClassSets& sets, CamResample resample, nn::Rng& rng) {
  BatchLoss out{0.0, 0.0, model.params().zeros_like()};
  if (batch.empty()) return out;
  std::set<int> penalised = sets.object;
  penalised.insert(sets.context.begin(), sets.context.end());
  const double inv_b = 1.0 / static_cast<double>(batch.size());

  for (std::size_t i = 0; i < batch.size(); ++i) {
    const auto& s = batch[i];
    ForwardTrace trace;
    const auto fwd = model.forward(s.image, hashtags[i], ForwardMode::Train, &trace, &rng);

    double loc = 0.0;
    Tensor3 grad_features;
    if (loss.lambda_loc > 0.0 && s.masks && !penalised.empty()) {
      const auto cams = model.cams(fwd, penalised);
      loc = localization_loss(cams, *s.masks, sets, resample);
      grad_features = Tensor3(fwd.features.channels(), fwd.features.height(), fwd.features.width());
      for (auto& [cls, g] : localization_loss_grad(cams, *s.masks, sets, resample)) {
        for (double& v : g.data()) v *= loss.lambda_loc * inv_b;
        const Tensor3 gf = model.cam_backward(fwd, cls, g, out.grads);
        for (std::size_t j = 0; j < gf.size(); ++j) grad_features.data()[j] += gf.data()[j];
      }
    }
    auto lv = total_loss(fwd.logits, s.labels, loc, loss);
    for (double& g : lv.grad_logits) g *= inv_b;
    model.backward(trace, fwd, lv.grad_logits, grad_features, out.grads);
    out.classification += lv.classification * inv_b;
    out.localization += lv.localization * inv_b;
  }
  return out;
}

SgdMomentum::SgdMomentum(const nn::ParameterSet& like, double momentum)
    : velocity_(like.zeros_like()), momentum_(momentum) {}

void SgdMomentum::step(nn::ParameterSet& params, const nn::ParameterSet& grads, double lr) {
  for (int t = 0; t < params.size(); ++t) {
    auto& p = params[t].data;
    auto& v = velocity_[t].data;
    const auto& g = grads[t].data;
    for (std::size_t i = 0; i < p.size(); ++i) {
      v[i] = momentum_ * v[i] + g[i];
      p[i] -= lr * v[i];
    }
  }
}

Grid<double> predict(const IntentModel& model, const Dataset& data, bool use_hashtags) {
  Grid<double> scores(static_cast<int>(data.size()), model.num_classes());
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto* h = use_hashtags && data[i].hashtag && model.config().hashtag_dim > 0 ? &*data[i].hashtag : nullptr;
    const auto out = model.forward(data[i].image, h);
    for (int k = 0; k < model.num_classes(); ++k) scores(static_cast<int>(i), k) = sigmoid(out.logits[k]);
  }
  return scores;
}

double mean_forbidden_cam_mass(const IntentModel& model, const Dataset& data, const ClassSets& sets,
                               bool use_hashtags) {
  double total = 0.0;
  long long count = 0;
  for (const auto& s : data) {
    if (!s.masks) continue;
    const auto* h = use_hashtags && s.hashtag && model.config().hashtag_dim > 0 ? &*s.hashtag : nullptr;
    const auto out = model.forward(s.image, h);
    for (int cls : sets.object) {
      total += cam_mass(model.cam(out, cls), s.masks->context);
      ++count;
    }
    for (int cls : sets.context) {
      total += cam_mass(model.cam(out, cls), s.masks->object);
      ++count;
    }
  }
  return count > 0 ? total / static_cast<double>(count) : 0.0;
}

namespace {

Grid<std::uint8_t> label_matrix(const Dataset& data, int num_classes) {
  Grid<std::uint8_t> labels(static_cast<int>(data.size()), num_classes);
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (static_cast<int>(data[i].labels.size()) != num_classes) {
      throw InputError("sample " + data[i].id + " has " + std::to_string(data[i].labels.size()) + " labels, model has " +
                       std::to_string(num_classes) + " classes");
    }
    for (int k = 0; k < num_classes; ++k) labels(static_cast<int>(i), k) = data[i].labels[k];
  }
  return labels;
}

}  // namespace

TrainResult train(IntentModel model, const Dataset& train_set, const Dataset* val, const TrainConfig& cfg,
                  const LossConfig& loss, const ClassSets& sets,
                  const std::function<void(const EpochRecord&)>& on_epoch) {
  cfg.validate();
  sets.validate();
  if (train_set.empty()) throw InputError("training set is empty");
  if (loss.lambda_loc > 0.0 && !sets.empty()) {
    for (const auto& s : train_set) {
      if (!s.masks) throw ConfigError("sample " + s.id + " has no masks but lambda_loc > 0");
    }
  }
  const auto train_labels = label_matrix(train_set, model.num_classes());
  std::optional<Grid<std::uint8_t>> val_labels;
  if (val != nullptr) val_labels = label_matrix(*val, model.num_classes());

  nn::Rng order_rng(cfg.seed);
  nn::Rng aug_rng(cfg.seed ^ 0x9e3779b97f4a7c15ULL);
  nn::Rng dropout_rng(cfg.seed ^ 0xbf58476d1ce4e5b9ULL);
  SgdMomentum opt(model.params(), cfg.momentum);

  const auto n = static_cast<long long>(train_set.size());
  const long long steps_per_epoch = (n + cfg.batch_size - 1) / cfg.batch_size;
  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  TrainResult result{model, -1, -1.0, {}};
  long long global_step = 0;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), order_rng);
    EpochRecord rec;
    rec.epoch = epoch;
    for (long long b = 0; b < steps_per_epoch; ++b) {
      const auto begin = static_cast<std::size_t>(b * cfg.batch_size);
      const auto end = std::min(order.size(), begin + static_cast<std::size_t>(cfg.batch_size));
      std::vector<AugmentedSample> batch;
      std::vector<const std::vector<double>*> hashtags;
      for (std::size_t i = begin; i < end; ++i) {
        const auto& s = train_set[order[i]];
        batch.push_back(augment(s, cfg, aug_rng));
        hashtags.push_back(cfg.use_hashtags && s.hashtag && model.config().hashtag_dim > 0 ? &*s.hashtag : nullptr);
      }
      const double lr = lr_at(global_step, steps_per_epoch, cfg);
      auto bl = batch_loss_and_grad(model, batch, hashtags, loss, sets, cfg.cam_resample, dropout_rng);
      if (!std::isfinite(bl.classification) || !std::isfinite(bl.localization) || !bl.grads.all_finite()) {
        throw NumericError("non-finite loss at epoch " + std::to_string(epoch) + " step " + std::to_string(b) +
                           " (classification " + std::to_string(bl.classification) + ", localization " +
                           std::to_string(bl.localization) + ", lr " + std::to_string(lr) + ")");
      }
      opt.step(model.params(), bl.grads, lr);
      rec.steps.push_back({bl.classification, bl.localization, lr});
      ++global_step;
    }
    for (const auto& s : rec.steps) {
      rec.mean_classification += s.classification / static_cast<double>(rec.steps.size());
      rec.mean_localization += s.localization / static_cast<double>(rec.steps.size());
    }
    rec.train_macro_f1 =
        macro_f1(predict(model, train_set, cfg.use_hashtags), train_labels, cfg.eval_threshold).macro;
    if (val != nullptr) {
      rec.val_macro_f1 = macro_f1(predict(model, *val, cfg.use_hashtags), *val_labels, cfg.eval_threshold).macro;
    }
    const double score = rec.val_macro_f1.value_or(rec.train_macro_f1);
    if (score > result.best_macro_f1) {
      result.best_macro_f1 = score;
      result.best_epoch = epoch;
      result.best = model;
    }
    if (on_epoch) on_epoch(rec);
    result.log.push_back(std::move(rec));
  }
  return result;
}

std::string serialize_epoch_log(const std::vector<EpochRecord>& log) {
  std::string out;
  for (const auto& rec : log) {
    nlohmann::json j;
    j["epoch"] = rec.epoch;
    j["mean_classification"] = rec.mean_classification;
    j["mean_localization"] = rec.mean_localization;
    j["train_macro_f1"] = rec.train_macro_f1;
    j["val_macro_f1"] = rec.val_macro_f1 ? nlohmann::json(*rec.val_macro_f1) : nlohmann::json(nullptr);
    j["steps"] = nlohmann::json::array();
    for (const auto& s : rec.steps) {
      j["steps"].push_back({{"classification", s.classification}, {"localization", s.localization}, {"lr", s.lr}});
    }
    out += j.dump() + "\n";
  }
  return out;
}

}  // namespace intent
