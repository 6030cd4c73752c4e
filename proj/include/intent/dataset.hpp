#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "intent/grid.hpp"
#include "intent/masks.hpp"

namespace intent {

struct Sample {
  std::string id;
  Image image;
  std::vector<std::uint8_t> labels;  // multi-hot, one entry per class
  std::optional<MaskPair> masks;
  std::optional<std::vector<double>> hashtag;
};

using Dataset = std::vector<Sample>;

struct ManifestEntry {
  std::filesystem::path image;
  std::vector<std::uint8_t> labels;
  std::optional<std::filesystem::path> mask_dir;
  std::optional<std::filesystem::path> hashtag_feature;

  friend bool operator==(const ManifestEntry&, const ManifestEntry&) = default;
};

// "# intent-manifest v1" header, then tab-separated records:
// image_path, label bit string ('0'/'1' per class), mask_dir, hashtag
// feature path. '-' marks an absent optional field. Relative paths are
// resolved against the manifest's directory on load.
std::vector<ManifestEntry> parse_manifest(std::string_view text);
std::string serialize_manifest(const std::vector<ManifestEntry>& entries);
std::vector<ManifestEntry> load_manifest(const std::filesystem::path& path);
void save_manifest(const std::filesystem::path& path, const std::vector<ManifestEntry>& entries);

// Reads every image, mask pair and hashtag feature named by the manifest.
// Images are resized so the longest side is `resize_longest` when > 0, and
// masks are resampled to the image size.
Dataset load_dataset(const std::vector<ManifestEntry>& entries, int resize_longest = 0);

// Writes images, masks and features under `dir` plus dir/manifest.txt.
std::filesystem::path write_dataset(const std::filesystem::path& dir, const Dataset& data);

}  // namespace intent
