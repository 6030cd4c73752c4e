#pragma once

#include <filesystem>

#include "intent/grid.hpp"

namespace intent {

// Any format OpenCV decodes. Returned as RGB, values in [0, 1].
Image read_image(const std::filesystem::path& path);
void write_image(const std::filesystem::path& path, const Image& image);

// 8-bit single channel; nonzero pixels (> 127) read as 1, written as 255.
Raster read_raster(const std::filesystem::path& path);
void write_raster(const std::filesystem::path& path, const Raster& raster);

// [0, 1] real map quantised to 8 bits.
void write_unit_map(const std::filesystem::path& path, const RealGrid& map);

}  // namespace intent
