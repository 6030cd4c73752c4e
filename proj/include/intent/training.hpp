#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "intent/dataset.hpp"
#include "intent/model.hpp"
#include "intent/saliency.hpp"

namespace intent {

enum class LrSchedule { Constant, Step, Cosine };

struct TrainConfig {
  int batch_size = 128;
  double momentum = 0.9;
  double base_lr = 1e-3;  // 5e-4 for multimodal runs
  int warmup_epochs = 5;
  int epochs = 30;
  std::uint64_t seed = 0;
  LrSchedule schedule = LrSchedule::Constant;
  int step_every_epochs = 10;  // Step schedule: lr *= step_gamma every N epochs after warmup
  double step_gamma = 0.1;
  // Augmentation: random resized crop to crop_size x crop_size plus a
  // horizontal flip. Masks follow the image geometry; labels are untouched.
  bool random_crop = true;
  int crop_size = 224;
  double crop_scale_min = 0.08;
  bool horizontal_flip = true;
  bool use_hashtags = true;  // feed hashtag features when samples have them
  CamResample cam_resample = CamResample::MaskToCam;
  double eval_threshold = 0.5;

  void validate() const;
};

// Linear warmup from 0 to base_lr over warmup_epochs * steps_per_epoch
// steps, then the configured schedule (constant by default).
double lr_at(long long step, long long steps_per_epoch, const TrainConfig& cfg);

struct AugmentedSample {
  Image image;
  std::optional<MaskPair> masks;
  std::vector<std::uint8_t> labels;
};

AugmentedSample augment(const Sample& sample, const TrainConfig& cfg, nn::Rng& rng);

struct StepRecord {
  double classification = 0.0;  // batch mean
  double localization = 0.0;    // batch mean
  double lr = 0.0;
};

struct EpochRecord {
  int epoch = 0;
  std::vector<StepRecord> steps;
  double mean_classification = 0.0;
  double mean_localization = 0.0;
  double train_macro_f1 = 0.0;
  std::optional<double> val_macro_f1;
};

struct TrainResult {
  IntentModel best;
  int best_epoch = -1;
  double best_macro_f1 = -1.0;
  std::vector<EpochRecord> log;
};

// Mean over the batch of classification + lambda * localization, and the
// gradient of that mean. Samples lacking masks contribute no localization
// term.
struct BatchLoss {
  double classification = 0.0;
  double localization = 0.0;
  nn::ParameterSet grads;
};

BatchLoss batch_loss_and_grad(const IntentModel& model, const std::vector<AugmentedSample>& batch,
                              const std::vector<const std::vector<double>*>& hashtags, const LossConfig& loss,
                              const ClassSets& sets, CamResample resample, nn::Rng& rng);

// SGD with momentum: v = mu * v + g; p -= lr * v.
class SgdMomentum {
 public:
  SgdMomentum(const nn::ParameterSet& like, double momentum);
  void step(nn::ParameterSet& params, const nn::ParameterSet& grads, double lr);

 private:
  nn::ParameterSet velocity_;
  double momentum_;
};

// End-to-end training. Keeps the checkpoint with the best macro F1 on `val`
// (on the training set in eval mode when `val` is null). Throws ConfigError
// when lambda > 0 and a sample has no masks, NumericError on a NaN loss.
TrainResult train(IntentModel model, const Dataset& train_set, const Dataset* val, const TrainConfig& cfg,
                  const LossConfig& loss, const ClassSets& sets,
                  const std::function<void(const EpochRecord&)>& on_epoch = {});

// Sigmoid scores, one row per sample.
Grid<double> predict(const IntentModel& model, const Dataset& data, bool use_hashtags = true);

// Mean over samples and penalised classes of the normalised CAM mass inside
// each class's forbidden mask.
double mean_forbidden_cam_mass(const IntentModel& model, const Dataset& data, const ClassSets& sets,
                               bool use_hashtags = true);

// One JSON object per epoch, one per line.
std::string serialize_epoch_log(const std::vector<EpochRecord>& log);

}  // namespace intent
