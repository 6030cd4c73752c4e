#include "intent/model.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>

#include "intent/config.hpp"
#include "intent/error.hpp"

namespace intent {

TinyConvBackbone::TinyConvBackbone(nn::ParameterSet& params, const std::vector<int>& channels, int pools)
    : pools_(pools) {
  if (channels.empty()) throw ConfigError("backbone needs at least one conv layer");
  if (pools < 0 || pools > static_cast<int>(channels.size())) {
    throw ConfigError("backbone pools must lie in [0, number of conv layers]");
  }
  int in = 3;
  for (std::size_t i = 0; i < channels.size(); ++i) {
    if (channels[i] <= 0) throw ConfigError("backbone channels must be positive");
    layers_.push_back(nn::Conv2d::create(params, "backbone.conv" + std::to_string(i), in, channels[i]));
    in = channels[i];
  }
}

void TinyConvBackbone::init(nn::ParameterSet& params, nn::Rng& rng) const {
  for (const auto& l : layers_) l.init(params, rng);
}

// Trace layout: input, then per layer its relu output followed by the pooled
// output for the first `pools_` layers.
Tensor3 TinyConvBackbone::forward(const nn::ParameterSet& params, const Image& image, BackboneTrace* trace) const {
  if (image.channels() != 3) throw InputError("backbone expects a 3-channel image");
  if (image.height() < (1 << pools_) || image.width() < (1 << pools_)) {
    throw InputError("image too small for the backbone");
  }
  if (trace) {
    trace->activations.clear();
    trace->activations.push_back(image);
  }
  Tensor3 x = image;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    x = layers_[i].forward(params, x);
    nn::relu_inplace(x.data());
    if (trace) trace->activations.push_back(x);
    if (static_cast<int>(i) < pools_) {
      x = nn::max_pool2(x);
      if (trace) trace->activations.push_back(x);
    }
  }
  return x;
}

void TinyConvBackbone::backward(const nn::ParameterSet& params, const BackboneTrace& trace,
                                const Tensor3& grad_features, nn::ParameterSet& grads) const {
  const auto& acts = trace.activations;
  std::size_t at = acts.size() - 1;
  Tensor3 g = grad_features;
  for (std::size_t i = layers_.size(); i-- > 0;) {
    if (static_cast<int>(i) < pools_) {
      --at;  // acts[at] is now the pre-pool relu output
      g = nn::max_pool2_backward(acts[at], g);
    }
    nn::relu_backward_inplace(acts[at].data(), g.data());
    --at;  // layer input
    g = layers_[i].backward(params, acts[at], g, grads);
  }
}

double init_classifier_bias(double pi) {
  if (!(pi > 0.0 && pi < 1.0)) throw ConfigError("prior probability pi must lie in (0, 1)");
  return -std::log((1.0 - pi) / pi);
}

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

IntentModel::IntentModel(const ModelConfig& cfg, std::uint64_t seed) : cfg_(cfg) {
  if (cfg_.num_classes <= 0) throw ConfigError("num_classes must be positive");
  if (cfg_.hashtag_dim < 0) throw ConfigError("hashtag_dim must be non-negative");
  if (!(cfg_.dropout >= 0.0 && cfg_.dropout < 1.0)) throw ConfigError("dropout must lie in [0, 1)");
  const double bias = init_classifier_bias(cfg_.prior_pi);

  backbone_ = std::make_unique<TinyConvBackbone>(params_, cfg_.backbone_channels, cfg_.backbone_pools);
  int fused = backbone_->channels();
  if (cfg_.hashtag_dim > 0) {
    if (cfg_.mlp_hidden.empty()) throw ConfigError("multimodal model needs MLP hidden sizes");
    int in = cfg_.hashtag_dim;
    for (std::size_t i = 0; i < cfg_.mlp_hidden.size(); ++i) {
      mlp_.push_back(nn::Linear::create(params_, "head.mlp" + std::to_string(i), in, cfg_.mlp_hidden[i]));
      in = cfg_.mlp_hidden[i];
    }
    fused += in;
  }
  classifier_ = nn::Linear::create(params_, "head.classifier", fused, cfg_.num_classes);

  nn::Rng rng(seed);
  backbone_->init(params_, rng);
  for (const auto& l : mlp_) l.init_he(params_, rng);
  classifier_.init_normal(params_, rng, 0.01, bias);
}

IntentModel::IntentModel(const IntentModel& other)
    : cfg_(other.cfg_),
      params_(other.params_),
      backbone_(other.backbone_->clone()),
      mlp_(other.mlp_),
      classifier_(other.classifier_) {}

IntentModel& IntentModel::operator=(const IntentModel& other) {
  if (this != &other) *this = IntentModel(other);
  return *this;
}

ForwardOutput IntentModel::forward(const Image& image, const std::vector<double>* hashtag, ForwardMode mode,
                                   ForwardTrace* trace, nn::Rng* rng) const {
  if (mode == ForwardMode::Train && rng == nullptr) throw ConfigError("train-mode forward needs an rng");
  ForwardOutput out;
  if (cfg_.input_mean.empty()) {
    out.features = backbone_->forward(params_, image, trace ? &trace->backbone : nullptr);
  } else {
    if (static_cast<int>(cfg_.input_mean.size()) != image.channels()) {
      throw InputError("image has " + std::to_string(image.channels()) + " channels, model expects " +
                       std::to_string(cfg_.input_mean.size()));
    }
    Image normalized = image;
    for (int c = 0; c < image.channels(); ++c) {
      for (double& v : normalized.channel(c)) v = (v - cfg_.input_mean[c]) / cfg_.input_std[c];
    }
    out.features = backbone_->forward(params_, normalized, trace ? &trace->backbone : nullptr);
  }
  out.pooled = nn::global_average_pool(out.features);

  std::vector<double> input = out.pooled;
  const bool multimodal = hashtag != nullptr && !mlp_.empty();
  if (hashtag != nullptr && mlp_.empty()) throw InputError("hashtag feature given to an image-only model");
  if (trace) {
    trace->multimodal = multimodal;
    trace->mlp_out.clear();
    trace->dropouts.clear();
  }
  if (multimodal) {
    if (static_cast<int>(hashtag->size()) != cfg_.hashtag_dim) {
      throw InputError("hashtag feature has dimension " + std::to_string(hashtag->size()) + ", expected " +
                       std::to_string(cfg_.hashtag_dim));
    }
    if (trace) trace->hashtag = *hashtag;
    std::vector<double> h = *hashtag;
    for (const auto& layer : mlp_) {
      h = layer.forward(params_, h);
      nn::relu_inplace(h);
      if (trace) trace->mlp_out.push_back(h);
      if (mode == ForwardMode::Train && cfg_.dropout > 0.0) {
        auto mask = nn::dropout_mask(h.size(), cfg_.dropout, *rng);
        for (std::size_t i = 0; i < h.size(); ++i) h[i] *= mask[i];
        if (trace) trace->dropouts.push_back(std::move(mask));
      } else if (trace) {
        trace->dropouts.emplace_back(h.size(), 1.0);
      }
    }
    input.insert(input.end(), h.begin(), h.end());
  }

  // Bypass mode uses the visual columns of the classifier only.
  const auto& w = params_[classifier_.weight].data;
  const auto& b = params_[classifier_.bias].data;
  out.logits.assign(b.begin(), b.end());
  for (int k = 0; k < cfg_.num_classes; ++k) {
    const double* row = w.data() + static_cast<std::size_t>(k) * classifier_.in;
    double acc = 0.0;
    for (std::size_t i = 0; i < input.size(); ++i) acc += row[i] * input[i];
    out.logits[k] += acc;
  }
  if (trace) trace->classifier_input = std::move(input);
  return out;
}

std::span<const double> IntentModel::visual_weights(int cls) const {
  if (cls < 0 || cls >= cfg_.num_classes) throw InputError("class id out of range");
  const auto& w = params_[classifier_.weight].data;
  return {w.data() + static_cast<std::size_t>(cls) * classifier_.in, static_cast<std::size_t>(visual_channels())};
}

Cam IntentModel::cam(const ForwardOutput& out, int cls) const {
  return compute_cam(out.features, visual_weights(cls), cls);
}

std::map<int, Cam> IntentModel::cams(const ForwardOutput& out, const std::set<int>& classes) const {
  std::map<int, Cam> m;
  for (int c : classes) m.emplace(c, cam(out, c));
  return m;
}

std::map<int, Cam> IntentModel::all_cams(const ForwardOutput& out) const {
  std::map<int, Cam> m;
  for (int c = 0; c < cfg_.num_classes; ++c) m.emplace(c, cam(out, c));
  return m;
}

Tensor3 IntentModel::cam_backward(const ForwardOutput& out, int cls, const RealGrid& grad_cam,
                                  nn::ParameterSet& grads) const {
  const auto g = compute_cam_backward(out.features, visual_weights(cls), grad_cam);
  auto& gw = grads[classifier_.weight].data;
  double* row = gw.data() + static_cast<std::size_t>(cls) * classifier_.in;
  for (std::size_t c = 0; c < g.weights.size(); ++c) row[c] += g.weights[c];
  return g.features;
}

void IntentModel::backward(const ForwardTrace& trace, const ForwardOutput& out, std::span<const double> grad_logits,
                           const Tensor3& grad_features_extra, nn::ParameterSet& grads) const {
  const auto& x = trace.classifier_input;
  const auto& w = params_[classifier_.weight].data;
  auto& gw = grads[classifier_.weight].data;
  auto& gb = grads[classifier_.bias].data;
  std::vector<double> gx(x.size(), 0.0);
  for (int k = 0; k < cfg_.num_classes; ++k) {
    const double g = grad_logits[k];
    if (g == 0.0) continue;
    gb[k] += g;
    const double* row = w.data() + static_cast<std::size_t>(k) * classifier_.in;
    double* grow = gw.data() + static_cast<std::size_t>(k) * classifier_.in;
    for (std::size_t i = 0; i < x.size(); ++i) {
      grow[i] += g * x[i];
      gx[i] += g * row[i];
    }
  }

  const int c = visual_channels();
  if (trace.multimodal) {
    // layer li consumes h_li = dropout(mlp_out[li-1]) (or the hashtag
    // feature for li = 0)
    std::vector<double> gh(gx.begin() + c, gx.end());
    for (std::size_t li = mlp_.size(); li-- > 0;) {
      const auto& mask = trace.dropouts[li];
      for (std::size_t i = 0; i < gh.size(); ++i) gh[i] *= mask[i];
      nn::relu_backward_inplace(trace.mlp_out[li], gh);
      std::vector<double> in = trace.hashtag;
      if (li > 0) {
        in = trace.mlp_out[li - 1];
        for (std::size_t i = 0; i < in.size(); ++i) in[i] *= trace.dropouts[li - 1][i];
      }
      gh = mlp_[li].backward(params_, in, gh, grads);
    }
  }

  Tensor3 gf = nn::global_average_pool_backward(std::span<const double>(gx.data(), c), c, out.features.height(),
                                                out.features.width());
  if (grad_features_extra.size() != 0) {
    if (!grad_features_extra.same_shape(gf)) throw InputError("extra feature gradient shape mismatch");
    for (std::size_t i = 0; i < gf.size(); ++i) gf.data()[i] += grad_features_extra.data()[i];
  }
  backbone_->backward(params_, trace.backbone, gf, grads);
}

namespace {

constexpr char kMagic[8] = {'I', 'N', 'T', 'C', 'K', 'P', 'T', '1'};

void write_u64(std::ostream& out, std::uint64_t v) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  out.write(reinterpret_cast<const char*>(b), 8);
}

std::uint64_t read_u64(std::istream& in) {
  unsigned char b[8];
  if (!in.read(reinterpret_cast<char*>(b), 8)) throw DataError("truncated checkpoint");
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return v;
}

}  // namespace

void IntentModel::save(const std::filesystem::path& path) const {
  nlohmann::json header;
  header["format"] = "intent-checkpoint";
  header["version"] = 1;
  header["model"] = model_config_to_json(cfg_);
  header["tensors"] = nlohmann::json::array();
  for (const auto& t : params_.tensors()) header["tensors"].push_back({{"name", t.name}, {"shape", t.shape}});
  const std::string h = header.dump();

  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write checkpoint " + path.string());
  out.write(kMagic, sizeof(kMagic));
  write_u64(out, h.size());
  out.write(h.data(), static_cast<std::streamsize>(h.size()));
  for (const auto& t : params_.tensors()) {
    for (double v : t.data) write_u64(out, std::bit_cast<std::uint64_t>(v));
  }
}

IntentModel IntentModel::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint " + path.string());
  char magic[8];
  if (!in.read(magic, 8) || std::memcmp(magic, kMagic, 8) != 0) throw DataError("not a checkpoint: " + path.string());
  const auto len = read_u64(in);
  std::string h(len, '\0');
  if (!in.read(h.data(), static_cast<std::streamsize>(len))) throw DataError("truncated checkpoint header");
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(h);
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("corrupt checkpoint header: ") + e.what());
  }
  if (header.value("version", 0) != 1) throw DataError("unsupported checkpoint version");
  IntentModel model(model_config_from_json(header.at("model")), 0);
  const auto& tensors = header.at("tensors");
  if (static_cast<int>(tensors.size()) != model.params_.size()) throw DataError("checkpoint tensor count mismatch");
  for (int i = 0; i < model.params_.size(); ++i) {
    auto& t = model.params_[i];
    if (tensors[i].at("name") != t.name || tensors[i].at("shape").get<std::vector<int>>() != t.shape) {
      throw DataError("checkpoint tensor " + t.name + " does not match the model layout");
    }
    for (double& v : t.data) v = std::bit_cast<double>(read_u64(in));
  }
  return model;
}

namespace {

// log(sigmoid(x)) computed without overflow.
double log_sigmoid(double x) {
  if (x >= 0.0) return -std::log1p(std::exp(-x));
  return x - std::log1p(std::exp(x));
}

}  // namespace

LossValue total_loss(std::span<const double> logits, std::span<const std::uint8_t> labels, double loc,
                     const LossConfig& cfg) {
  if (logits.size() != labels.size()) throw InputError("logits and labels differ in length");
  if (std::isnan(loc)) throw NumericError("localization loss is NaN");
  if (loc < 0.0) throw InputError("localization loss must be non-negative");
  LossValue v;
  v.grad_logits.assign(logits.size(), 0.0);
  for (std::size_t k = 0; k < logits.size(); ++k) {
    const double z = logits[k];
    if (std::isnan(z)) throw NumericError("NaN logit for class " + std::to_string(k));
    const double s = labels[k] ? 1.0 : -1.0;
    const double log_pt = log_sigmoid(s * z);
    const double pt = std::exp(log_pt);
    if (cfg.classification == ClassificationLoss::Bce) {
      v.classification -= log_pt;
      v.grad_logits[k] = -s * (1.0 - pt);
    } else {
      const double alpha_t = labels[k] ? cfg.focal_alpha : 1.0 - cfg.focal_alpha;
      const double gamma = cfg.focal_gamma;
      const double one_minus = 1.0 - pt;
      v.classification -= alpha_t * std::pow(one_minus, gamma) * log_pt;
      const double log_term = pt > 0.0 ? gamma * pt * std::pow(one_minus, gamma) * log_pt : 0.0;
      v.grad_logits[k] = s * alpha_t * (log_term - std::pow(one_minus, gamma + 1.0));
    }
  }
  v.localization = loc;
  v.total = v.classification + cfg.lambda_loc * loc;
  return v;
}

}  // namespace intent
