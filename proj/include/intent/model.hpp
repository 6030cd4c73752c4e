#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "intent/grid.hpp"
#include "intent/nn.hpp"
#include "intent/saliency.hpp"

namespace intent {

// Activations a backbone keeps for its backward pass.
struct BackboneTrace {
  std::vector<Tensor3> activations;
};

// Image (3 x H x W) -> feature map (C x H' x W'). The pooled vector is the
// spatial mean of the feature map. Parameters live in the owning model's
// ParameterSet.
class Backbone {
 public:
  virtual ~Backbone() = default;
  virtual int channels() const = 0;
  virtual bool pretrained() const = 0;
  virtual std::unique_ptr<Backbone> clone() const = 0;
  virtual void init(nn::ParameterSet& params, nn::Rng& rng) const = 0;
  virtual Tensor3 forward(const nn::ParameterSet& params, const Image& image, BackboneTrace* trace) const = 0;
  virtual void backward(const nn::ParameterSet& params, const BackboneTrace& trace, const Tensor3& grad_features,
                        nn::ParameterSet& grads) const = 0;
};

// Small convolutional backbone for desk-scale runs: conv-relu blocks, the
// first `pools` of them followed by a 2x2 max pool.
class TinyConvBackbone final : public Backbone {
 public:
  TinyConvBackbone(nn::ParameterSet& params, const std::vector<int>& channels, int pools = 1);

  int channels() const override { return layers_.back().out; }
  bool pretrained() const override { return false; }
  std::unique_ptr<Backbone> clone() const override { return std::make_unique<TinyConvBackbone>(*this); }
  void init(nn::ParameterSet& params, nn::Rng& rng) const override;
  Tensor3 forward(const nn::ParameterSet& params, const Image& image, BackboneTrace* trace) const override;
  void backward(const nn::ParameterSet& params, const BackboneTrace& trace, const Tensor3& grad_features,
                nn::ParameterSet& grads) const override;

 private:
  std::vector<nn::Conv2d> layers_;
  int pools_ = 1;
};

struct ModelConfig {
  int num_classes = 28;
  int hashtag_dim = 0;  // 0 builds an image-only model
  std::vector<int> mlp_hidden{1024, 2048};
  double dropout = 0.25;
  std::vector<int> backbone_channels{16, 32, 32, 64};
  int backbone_pools = 3;
  double prior_pi = 0.01;
  // Per-channel (x - mean) / std applied to the input image. Empty disables.
  std::vector<double> input_mean{0.485, 0.456, 0.406};
  std::vector<double> input_std{0.229, 0.224, 0.225};
};

// b = -log((1 - pi) / pi). Throws ConfigError unless 0 < pi < 1.
double init_classifier_bias(double pi = 0.01);

enum class ForwardMode { Eval, Train };

struct ForwardOutput {
  std::vector<double> logits;
  Tensor3 features;
  std::vector<double> pooled;
};

struct ForwardTrace {
  BackboneTrace backbone;
  std::vector<double> hashtag;
  std::vector<std::vector<double>> mlp_out;   // post-activation, pre-dropout
  std::vector<std::vector<double>> dropouts;  // masks
  std::vector<double> classifier_input;
  bool multimodal = false;
};

// Visual backbone + optional hashtag MLP branch + multi-label classifier.
class IntentModel {
 public:
  IntentModel(const ModelConfig& cfg, std::uint64_t seed);
  IntentModel(const IntentModel& other);
  IntentModel& operator=(const IntentModel& other);
  IntentModel(IntentModel&&) noexcept = default;
  IntentModel& operator=(IntentModel&&) noexcept = default;

  const ModelConfig& config() const { return cfg_; }
  int num_classes() const { return cfg_.num_classes; }
  int visual_channels() const { return backbone_->channels(); }
  const Backbone& backbone() const { return *backbone_; }

  nn::ParameterSet& params() { return params_; }
  const nn::ParameterSet& params() const { return params_; }

  // Without a hashtag feature the MLP branch is bypassed and only the visual
  // part of the classifier contributes. Train mode samples dropout masks
  // from `rng` (required in that mode).
  ForwardOutput forward(const Image& image, const std::vector<double>* hashtag = nullptr,
                        ForwardMode mode = ForwardMode::Eval, ForwardTrace* trace = nullptr,
                        nn::Rng* rng = nullptr) const;

  // Classifier weights of class `cls` restricted to the visual channels.
  std::span<const double> visual_weights(int cls) const;

  Cam cam(const ForwardOutput& out, int cls) const;
  std::map<int, Cam> cams(const ForwardOutput& out, const std::set<int>& classes) const;
  std::map<int, Cam> all_cams(const ForwardOutput& out) const;

  // Backpropagates dL/dlogits plus any extra dL/dfeatures (e.g. from the
  // localization term; pass an empty tensor for none).
  void backward(const ForwardTrace& trace, const ForwardOutput& out, std::span<const double> grad_logits,
                const Tensor3& grad_features_extra, nn::ParameterSet& grads) const;

  // Chains dL/dcam for class `cls` through CAM normalisation into the
  // classifier's visual weights (accumulated in `grads`) and returns the
  // contribution to dL/dfeatures.
  Tensor3 cam_backward(const ForwardOutput& out, int cls, const RealGrid& grad_cam, nn::ParameterSet& grads) const;

  // Flat archive: "INTCKPT1" magic, 8-byte little-endian header length, JSON
  // header (format version, model config, tensor names/shapes), then raw
  // little-endian doubles in header order.
  void save(const std::filesystem::path& path) const;
  static IntentModel load(const std::filesystem::path& path);

 private:
  ModelConfig cfg_;
  nn::ParameterSet params_;
  std::unique_ptr<Backbone> backbone_;
  std::vector<nn::Linear> mlp_;
  nn::Linear classifier_;
};

enum class ClassificationLoss { Bce, Focal };

struct LossConfig {
  double lambda_loc = 0.1;
  double pi = 0.01;
  ClassificationLoss classification = ClassificationLoss::Bce;
  double focal_alpha = 0.25;
  double focal_gamma = 2.0;
};

struct LossValue {
  double classification = 0.0;
  double localization = 0.0;
  double total = 0.0;
  std::vector<double> grad_logits;  // d total / d logits
};

// Per-sample objective: classification loss summed over classes plus
// lambda * loc. Throws NumericError on NaN input.
LossValue total_loss(std::span<const double> logits, std::span<const std::uint8_t> labels, double loc,
                     const LossConfig& cfg);

double sigmoid(double z);

}  // namespace intent
