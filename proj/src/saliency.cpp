#include "intent/saliency.hpp"

#include <algorithm>

#include "intent/error.hpp"
#include "intent/image_io.hpp"

namespace intent {

RealGrid raw_class_map(const Tensor3& features, std::span<const double> weights) {
  if (static_cast<int>(weights.size()) != features.channels()) {
    throw InputError("CAM weights have " + std::to_string(weights.size()) + " entries for " +
                     std::to_string(features.channels()) + " feature channels");
  }
  RealGrid raw(features.height(), features.width());
  auto& out = raw.data();
  for (int c = 0; c < features.channels(); ++c) {
    const double w = weights[c];
    if (w == 0.0) continue;
    const auto ch = features.channel(c);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += w * ch[i];
  }
  return raw;
}

Cam normalize_cam(const RealGrid& raw, int class_id) {
  Cam cam{RealGrid(raw.rows(), raw.cols()), class_id};
  double peak = 0.0;
  for (double v : raw.data()) peak = std::max(peak, v);
  if (peak <= 0.0) return cam;
  auto& out = cam.values.data();
  const auto& in = raw.data();
  for (std::size_t i = 0; i < in.size(); ++i) out[i] = in[i] > 0.0 ? in[i] / peak : 0.0;
  return cam;
}

Cam compute_cam(const Tensor3& features, std::span<const double> weights, int class_id) {
  return normalize_cam(raw_class_map(features, weights), class_id);
}

RealGrid normalize_cam_backward(const RealGrid& raw, const RealGrid& grad_cam) {
  if (!raw.same_shape(grad_cam)) throw InputError("CAM gradient shape mismatch");
  RealGrid grad(raw.rows(), raw.cols());
  const auto& r = raw.data();
  std::size_t argmax = 0;
  for (std::size_t i = 1; i < r.size(); ++i) {
    if (r[i] > r[argmax]) argmax = i;
  }
  if (r.empty() || r[argmax] <= 0.0) return grad;
  const double peak = r[argmax];
  const auto& g = grad_cam.data();
  auto& out = grad.data();
  double weighted = 0.0;  // sum_p g_p * relu(r_p)
  for (std::size_t i = 0; i < r.size(); ++i) {
    if (r[i] > 0.0) {
      out[i] = g[i] / peak;
      weighted += g[i] * r[i];
    }
  }
  out[argmax] -= weighted / (peak * peak);
  return grad;
}

CamGradients compute_cam_backward(const Tensor3& features, std::span<const double> weights,
                                  const RealGrid& grad_cam) {
  const RealGrid raw = raw_class_map(features, weights);
  const RealGrid graw = normalize_cam_backward(raw, grad_cam);
  CamGradients out{Tensor3(features.channels(), features.height(), features.width()),
                   std::vector<double>(weights.size(), 0.0)};
  const auto& gr = graw.data();
  for (int c = 0; c < features.channels(); ++c) {
    const auto f = features.channel(c);
    auto gf = out.features.channel(c);
    double gw = 0.0;
    for (std::size_t i = 0; i < gr.size(); ++i) {
      gf[i] = weights[c] * gr[i];
      gw += f[i] * gr[i];
    }
    out.weights[c] = gw;
  }
  return out;
}

BinaryCam binarize_cam(const Cam& cam, double tau_cam) {
  if (!(tau_cam > 0.0 && tau_cam < 1.0)) throw ConfigError("tau_cam must lie in (0, 1)");
  BinaryCam out{Raster(cam.values.rows(), cam.values.cols()), tau_cam};
  const auto& v = cam.values.data();
  auto& b = out.values.data();
  for (std::size_t i = 0; i < v.size(); ++i) b[i] = v[i] >= tau_cam ? 1 : 0;
  return out;
}

void ClassSets::validate() const {
  for (int m : object) {
    if (context.contains(m)) {
      throw ConfigError("class " + std::to_string(m) + " is both object- and context-dependent");
    }
  }
}

RealGrid forbidden_weights(const Raster& mask, int cam_rows, int cam_cols, CamResample resample) {
  RealGrid w(cam_rows, cam_cols);
  if (resample == CamResample::MaskToCam) {
    const Raster small = resize_nearest(mask, cam_rows, cam_cols);
    for (std::size_t i = 0; i < small.size(); ++i) w.data()[i] = small.data()[i];
    return w;
  }
  for (int y = 0; y < mask.rows(); ++y) {
    const int cy = nearest_source_index(y, mask.rows(), cam_rows);
    for (int x = 0; x < mask.cols(); ++x) {
      if (mask(y, x)) w(cy, nearest_source_index(x, mask.cols(), cam_cols)) += 1.0;
    }
  }
  return w;
}

namespace {

template <typename Fn>
void for_each_penalised(const std::map<int, Cam>& cams, const MaskPair& masks, const ClassSets& sets,
                        Fn&& fn) {
  sets.validate();
  for (const auto& [cls, cam] : cams) {
    const Raster* forbidden = nullptr;
    if (sets.object.contains(cls)) {
      forbidden = &masks.context;
    } else if (sets.context.contains(cls)) {
      forbidden = &masks.object;
    }
    if (forbidden != nullptr) fn(cls, cam, *forbidden);
  }
}

}  // namespace

double localization_loss(const std::map<int, Cam>& cams, const MaskPair& masks, const ClassSets& sets,
                         CamResample resample) {
  double loss = 0.0;
  for_each_penalised(cams, masks, sets, [&](int, const Cam& cam, const Raster& forbidden) {
    const RealGrid w = forbidden_weights(forbidden, cam.values.rows(), cam.values.cols(), resample);
    const auto& v = cam.values.data();
    for (std::size_t i = 0; i < v.size(); ++i) loss += v[i] * w.data()[i];
  });
  return loss;
}

std::map<int, RealGrid> localization_loss_grad(const std::map<int, Cam>& cams, const MaskPair& masks,
                                               const ClassSets& sets, CamResample resample) {
  std::map<int, RealGrid> grads;
  for_each_penalised(cams, masks, sets, [&](int cls, const Cam& cam, const Raster& forbidden) {
    grads.emplace(cls, forbidden_weights(forbidden, cam.values.rows(), cam.values.cols(), resample));
  });
  return grads;
}

std::map<int, double> cam_content_association(const BinaryCam& cam,
                                              const std::vector<SegmentRegion>& regions) {
  const int rows = cam.values.rows();
  const int cols = cam.values.cols();
  std::map<int, Raster> by_category;
  for (const auto& r : regions) {
    const Raster aligned = r.raster.same_shape(cam.values) ? r.raster : resize_nearest(r.raster, rows, cols);
    auto [it, inserted] = by_category.try_emplace(r.category_id, rows, cols);
    for (std::size_t i = 0; i < aligned.size(); ++i) {
      if (aligned.data()[i]) it->second.data()[i] = 1;
    }
  }
  const auto& b = cam.values.data();
  const auto support = std::count(b.begin(), b.end(), std::uint8_t{1});
  std::map<int, double> out;
  for (const auto& [cat, raster] : by_category) {
    if (support == 0) {
      out[cat] = 0.0;
      continue;
    }
    std::size_t overlap = 0;
    for (std::size_t i = 0; i < b.size(); ++i) overlap += (b[i] && raster.data()[i]) ? 1 : 0;
    out[cat] = static_cast<double>(overlap) / static_cast<double>(support);
  }
  return out;
}

double cam_mass(const Cam& cam, const Raster& mask) {
  const RealGrid w = forbidden_weights(mask, cam.values.rows(), cam.values.cols());
  double total = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) total += w.data()[i] * cam.values.data()[i];
  return total;
}

void save_cam(const std::filesystem::path& path, const Cam& cam) { write_unit_map(path, cam.values); }

}  // namespace intent
