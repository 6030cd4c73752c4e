#pragma once

#include <filesystem>
#include <map>
#include <set>
#include <span>
#include <vector>

#include "intent/grid.hpp"
#include "intent/masks.hpp"

namespace intent {

// Class activation map normalised to [0, 1]: negatives clamped to zero,
// then divided by the maximum. Maps with no positive entry are all zeros.
struct Cam {
  RealGrid values;
  int class_id = -1;
};

struct BinaryCam {
  Raster values;
  double tau_cam = 0.4;
};

// sum_c weights[c] * features[c], before clamping and normalisation.
RealGrid raw_class_map(const Tensor3& features, std::span<const double> weights);

Cam normalize_cam(const RealGrid& raw, int class_id = -1);
Cam compute_cam(const Tensor3& features, std::span<const double> weights, int class_id = -1);

// Chain rule through clamp + max-normalisation for a single raw map: given
// dL/dcam returns dL/draw. The argmax pixel receives the normaliser term.
RealGrid normalize_cam_backward(const RealGrid& raw, const RealGrid& grad_cam);

struct CamGradients {
  Tensor3 features;
  std::vector<double> weights;
};

CamGradients compute_cam_backward(const Tensor3& features, std::span<const double> weights,
                                  const RealGrid& grad_cam);

// Inclusive threshold: 1 where cam >= tau_cam.
BinaryCam binarize_cam(const Cam& cam, double tau_cam = 0.4);

// Which side is resampled before the elementwise product. MaskToCam
// downsamples masks with nearest neighbour; CamToImage upsamples the CAM to
// mask resolution with nearest neighbour, which is equivalent to weighting
// each CAM cell by the number of mask pixels it covers.
enum class CamResample { MaskToCam, CamToImage };

struct ClassSets {
  std::set<int> object;   // classes penalised on the context mask
  std::set<int> context;  // classes penalised on the object mask

  // Throws ConfigError when a class is in both sets.
  void validate() const;
  bool empty() const { return object.empty() && context.empty(); }
};

// Per-cell weight of the forbidden mask at CAM resolution.
RealGrid forbidden_weights(const Raster& mask, int cam_rows, int cam_cols,
                           CamResample resample = CamResample::MaskToCam);

// Sum over M_O of CAM * Mask^C plus sum over M_C of CAM * Mask^O, summed
// over all entries. Classes absent from `cams` contribute nothing.
double localization_loss(const std::map<int, Cam>& cams, const MaskPair& masks, const ClassSets& sets,
                         CamResample resample = CamResample::MaskToCam);

// dL/dcam for every class in the sets that has a CAM. The loss is linear in
// each CAM so the gradient is the forbidden weight map.
std::map<int, RealGrid> localization_loss_grad(const std::map<int, Cam>& cams, const MaskPair& masks,
                                               const ClassSets& sets,
                                               CamResample resample = CamResample::MaskToCam);

// For each region category: |cam AND region| / |cam|, 0 for an empty CAM.
// Regions sharing a category are unioned first.
std::map<int, double> cam_content_association(const BinaryCam& cam,
                                              const std::vector<SegmentRegion>& regions);

// Sum of normalised CAM values inside `mask` (resampled to CAM resolution).
double cam_mass(const Cam& cam, const Raster& mask);

void save_cam(const std::filesystem::path& path, const Cam& cam);

}  // namespace intent
