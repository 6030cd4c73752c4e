#include "intent/masks.hpp"

#include <algorithm>
#include <cmath>
#include "json.hpp"

#include "intent/error.hpp"
#include "intent/image_io.hpp"
#include "intent/text_io.hpp"

namespace intent {

namespace fs = std::filesystem;
using nlohmann::json;

double area_fraction(const Raster& raster) {
  if (raster.empty()) return 0.0;
  const auto on = std::count_if(raster.data().begin(), raster.data().end(),
                                [](std::uint8_t v) { return v != 0; });
  return static_cast<double>(on) / static_cast<double>(raster.size());
}

SegmentRegion make_region(Raster raster, int category_id, RegionKind kind, double score) {
  SegmentRegion r;
  r.area_fraction = area_fraction(raster);
  r.raster = std::move(raster);
  r.category_id = category_id;
  r.kind = kind;
  r.score = score;
  return r;
}

namespace {

void check_shape(const SegmentRegion& r, int rows, int cols) {
  if (r.raster.rows() != rows || r.raster.cols() != cols) {
    throw InputError("segment raster is " + std::to_string(r.raster.rows()) + "x" +
                     std::to_string(r.raster.cols()) + ", expected " + std::to_string(rows) + "x" +
                     std::to_string(cols));
  }
}

void union_into(Raster& dst, const Raster& src) {
  auto& d = dst.data();
  const auto& s = src.data();
  for (std::size_t i = 0; i < d.size(); ++i) d[i] = (d[i] | s[i]) ? 1 : 0;
}

}  // namespace

MaskPair aggregate_masks_panoptic(const std::vector<SegmentRegion>& regions, int rows, int cols,
                                  const PanopticConfig& cfg) {
  MaskPair out{Raster(rows, cols), Raster(rows, cols), MaskMode::Panoptic};
  for (const auto& r : regions) {
    check_shape(r, rows, cols);
    if (r.score < cfg.tau_p) continue;
    const bool area_applies = cfg.area_scope == AreaFilterScope::AllRegions || r.kind == RegionKind::Stuff;
    if (area_applies && r.area_fraction < cfg.min_area) continue;
    union_into(r.kind == RegionKind::Thing ? out.object : out.context, r.raster);
  }
  // Things occlude stuff.
  auto& ctx = out.context.data();
  const auto& obj = out.object.data();
  for (std::size_t i = 0; i < ctx.size(); ++i) {
    if (obj[i]) ctx[i] = 0;
  }
  return out;
}

MaskPair aggregate_masks_complement(const std::vector<SegmentRegion>& regions, int rows, int cols,
                                    double tau_det) {
  MaskPair out{Raster(rows, cols), Raster(rows, cols, 1), MaskMode::Complement};
  for (const auto& r : regions) {
    if (r.kind != RegionKind::Thing) throw InputError("complement masks accept thing regions only");
    check_shape(r, rows, cols);
    if (r.score >= tau_det) union_into(out.object, r.raster);
  }
  auto& ctx = out.context.data();
  const auto& obj = out.object.data();
  for (std::size_t i = 0; i < ctx.size(); ++i) ctx[i] = obj[i] ? 0 : 1;
  return out;
}

std::pair<int, int> longest_side_dims(int rows, int cols, int target) {
  if (rows <= 0 || cols <= 0) throw InputError("resize of an empty raster");
  if (target <= 0) throw ConfigError("resize target must be positive");
  const long long longest = std::max(rows, cols);
  const long long shortest = std::min(rows, cols);
  // round half up of shortest * target / longest, in integers
  const long long scaled = std::max<long long>(1, (2 * shortest * target + longest) / (2 * longest));
  if (rows >= cols) return {target, static_cast<int>(scaled)};
  return {static_cast<int>(scaled), target};
}

int nearest_source_index(int dst, int dst_len, int src_len) {
  const long long idx = (2LL * dst + 1) * src_len / (2LL * dst_len);
  return static_cast<int>(std::min<long long>(idx, src_len - 1));
}

Raster resize_nearest(const Raster& raster, int rows, int cols) {
  if (raster.empty() || rows <= 0 || cols <= 0) throw InputError("resize of an empty raster");
  if (raster.rows() == rows && raster.cols() == cols) return raster;
  Raster out(rows, cols);
  for (int y = 0; y < rows; ++y) {
    const int sy = nearest_source_index(y, rows, raster.rows());
    for (int x = 0; x < cols; ++x) {
      out(y, x) = raster(sy, nearest_source_index(x, cols, raster.cols()));
    }
  }
  return out;
}

Image resize_bilinear(const Image& image, int rows, int cols) {
  if (image.size() == 0 || rows <= 0 || cols <= 0) throw InputError("resize of an empty image");
  if (image.height() == rows && image.width() == cols) return image;
  Image out(image.channels(), rows, cols);
  const double sy = static_cast<double>(image.height()) / rows;
  const double sx = static_cast<double>(image.width()) / cols;
  for (int y = 0; y < rows; ++y) {
    const double fy = std::clamp((y + 0.5) * sy - 0.5, 0.0, image.height() - 1.0);
    const int y0 = static_cast<int>(fy);
    const int y1 = std::min(y0 + 1, image.height() - 1);
    const double wy = fy - y0;
    for (int x = 0; x < cols; ++x) {
      const double fx = std::clamp((x + 0.5) * sx - 0.5, 0.0, image.width() - 1.0);
      const int x0 = static_cast<int>(fx);
      const int x1 = std::min(x0 + 1, image.width() - 1);
      const double wx = fx - x0;
      for (int c = 0; c < image.channels(); ++c) {
        const double top = image.at(c, y0, x0) * (1 - wx) + image.at(c, y0, x1) * wx;
        const double bot = image.at(c, y1, x0) * (1 - wx) + image.at(c, y1, x1) * wx;
        out.at(c, y, x) = top * (1 - wy) + bot * wy;
      }
    }
  }
  return out;
}

Raster resize_longest_side(const Raster& raster, int target) {
  const auto [rows, cols] = longest_side_dims(raster.rows(), raster.cols(), target);
  return resize_nearest(raster, rows, cols);
}

Image resize_longest_side(const Image& image, int target) {
  const auto [rows, cols] = longest_side_dims(image.height(), image.width(), target);
  return resize_bilinear(image, rows, cols);
}

std::vector<SegmentRegion> load_segmentation_dump(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw DataError("segmentation dump not found: " + dir.string());
  std::vector<fs::path> sidecars;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.path().extension() == ".json" && e.path().stem().string().starts_with("region_")) {
      sidecars.push_back(e.path());
    }
  }
  std::sort(sidecars.begin(), sidecars.end());
  std::vector<SegmentRegion> regions;
  for (const auto& side : sidecars) {
    json j;
    try {
      j = json::parse(text::read_file(side));
    } catch (const json::exception& ex) {
      throw InputError(side.string() + ": " + ex.what());
    }
    const auto kind = j.at("kind").get<std::string>();
    if (kind != "thing" && kind != "stuff") throw InputError(side.string() + ": bad kind " + kind);
    auto raster_path = side;
    raster_path.replace_extension(".pgm");
    regions.push_back(make_region(read_raster(raster_path), j.at("category_id").get<int>(),
                                  kind == "thing" ? RegionKind::Thing : RegionKind::Stuff,
                                  j.at("score").get<double>()));
  }
  return regions;
}

void save_segmentation_dump(const fs::path& dir, const std::vector<SegmentRegion>& regions) {
  fs::create_directories(dir);
  for (std::size_t i = 0; i < regions.size(); ++i) {
    char stem[32];
    std::snprintf(stem, sizeof(stem), "region_%03zu", i);
    const auto& r = regions[i];
    write_raster(dir / (std::string(stem) + ".pgm"), r.raster);
    const json j = {{"category_id", r.category_id},
                    {"kind", r.kind == RegionKind::Thing ? "thing" : "stuff"},
                    {"score", r.score}};
    text::write_file(dir / (std::string(stem) + ".json"), j.dump() + "\n");
  }
}

void save_mask_pair(const fs::path& dir, const MaskPair& masks) {
  write_raster(dir / "mask_o.pgm", masks.object);
  write_raster(dir / "mask_c.pgm", masks.context);
}

MaskPair load_mask_pair(const fs::path& dir) {
  MaskPair m;
  m.object = read_raster(dir / "mask_o.pgm");
  m.context = read_raster(dir / "mask_c.pgm");
  if (!m.object.same_shape(m.context)) throw InputError("mask pair shapes differ in " + dir.string());
  bool complement = true;
  for (std::size_t i = 0; i < m.object.size() && complement; ++i) {
    complement = m.object.data()[i] != m.context.data()[i];
  }
  m.mode = complement ? MaskMode::Complement : MaskMode::Panoptic;
  return m;
}

}  // namespace intent
