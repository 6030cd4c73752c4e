#pragma once

#include <filesystem>
#include <vector>

#include "intent/grid.hpp"

namespace intent {

enum class RegionKind { Thing, Stuff };

struct SegmentRegion {
  Raster raster;  // 0/1
  int category_id = 0;
  RegionKind kind = RegionKind::Thing;
  double score = 0.0;
  double area_fraction = 0.0;
};

// Builds a region and fills area_fraction from the raster.
SegmentRegion make_region(Raster raster, int category_id, RegionKind kind, double score);
double area_fraction(const Raster& raster);

enum class MaskMode { Panoptic, Complement };

struct MaskPair {
  Raster object;
  Raster context;
  MaskMode mode = MaskMode::Panoptic;
};

enum class AreaFilterScope { AllRegions, StuffOnly };

struct PanopticConfig {
  double tau_p = 0.7;
  double min_area = 0.10;
  AreaFilterScope area_scope = AreaFilterScope::AllRegions;
};

// Union of qualifying thing rasters into the object mask and stuff rasters
// into the context mask. Pixels claimed by both go to the object mask.
MaskPair aggregate_masks_panoptic(const std::vector<SegmentRegion>& regions, int rows, int cols,
                                  const PanopticConfig& cfg = {});

// Object mask = union of thing rasters with score >= tau_det; context mask
// is its complement.
MaskPair aggregate_masks_complement(const std::vector<SegmentRegion>& regions, int rows, int cols,
                                    double tau_det = 0.6);

// Output size for a longest-side resize; the short side rounds half up.
std::pair<int, int> longest_side_dims(int rows, int cols, int target);

// Nearest neighbour for rasters, bilinear for images.
Raster resize_longest_side(const Raster& raster, int target = 1280);
Image resize_longest_side(const Image& image, int target = 1280);

// Nearest-neighbour resampling to an explicit size.
Raster resize_nearest(const Raster& raster, int rows, int cols);
Image resize_bilinear(const Image& image, int rows, int cols);

// Source index sampled for destination index `dst` when mapping `src_len`
// cells onto `dst_len` cells (pixel-centre convention).
int nearest_source_index(int dst, int dst_len, int src_len);

// Per-image segmentation dump: region_*.pgm rasters with a JSON sidecar of
// the same stem holding {category_id, kind, score}.
std::vector<SegmentRegion> load_segmentation_dump(const std::filesystem::path& dir);
void save_segmentation_dump(const std::filesystem::path& dir, const std::vector<SegmentRegion>& regions);

// mask_o.pgm / mask_c.pgm inside `dir`.
void save_mask_pair(const std::filesystem::path& dir, const MaskPair& masks);
MaskPair load_mask_pair(const std::filesystem::path& dir);

}  // namespace intent
