#include "intent/image_io.hpp"

#include <algorithm>
#include <cmath>
#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>

#include "intent/error.hpp"

namespace intent {

namespace {

void ensure_parent(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
}

void write_mat(const std::filesystem::path& path, const cv::Mat& m) {
  ensure_parent(path);
  if (!cv::imwrite(path.string(), m)) throw DataError("cannot write " + path.string());
}

std::uint8_t to_byte(double v) {
  return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
}

}  // namespace

Image read_image(const std::filesystem::path& path) {
  const cv::Mat m = cv::imread(path.string(), cv::IMREAD_COLOR);
  if (m.empty()) throw DataError("cannot read image " + path.string());
  Image img(3, m.rows, m.cols);
  for (int y = 0; y < m.rows; ++y) {
    const auto* row = m.ptr<cv::Vec3b>(y);
    for (int x = 0; x < m.cols; ++x) {
      // OpenCV stores BGR.
      for (int c = 0; c < 3; ++c) img.at(c, y, x) = row[x][2 - c] / 255.0;
    }
  }
  return img;
}

void write_image(const std::filesystem::path& path, const Image& image) {
  if (image.channels() != 3) throw InputError("write_image expects 3 channels");
  cv::Mat m(image.height(), image.width(), CV_8UC3);
  for (int y = 0; y < image.height(); ++y) {
    auto* row = m.ptr<cv::Vec3b>(y);
    for (int x = 0; x < image.width(); ++x) {
      for (int c = 0; c < 3; ++c) row[x][2 - c] = to_byte(image.at(c, y, x));
    }
  }
  write_mat(path, m);
}

Raster read_raster(const std::filesystem::path& path) {
  const cv::Mat m = cv::imread(path.string(), cv::IMREAD_GRAYSCALE);
  if (m.empty()) throw DataError("cannot read raster " + path.string());
  Raster r(m.rows, m.cols);
  for (int y = 0; y < m.rows; ++y) {
    const auto* row = m.ptr<std::uint8_t>(y);
    for (int x = 0; x < m.cols; ++x) r(y, x) = row[x] > 127 ? 1 : 0;
  }
  return r;
}

void write_raster(const std::filesystem::path& path, const Raster& raster) {
  cv::Mat m(raster.rows(), raster.cols(), CV_8UC1);
  for (int y = 0; y < raster.rows(); ++y) {
    auto* row = m.ptr<std::uint8_t>(y);
    for (int x = 0; x < raster.cols(); ++x) row[x] = raster(y, x) ? 255 : 0;
  }
  write_mat(path, m);
}

void write_unit_map(const std::filesystem::path& path, const RealGrid& map) {
  cv::Mat m(map.rows(), map.cols(), CV_8UC1);
  for (int y = 0; y < map.rows(); ++y) {
    auto* row = m.ptr<std::uint8_t>(y);
    for (int x = 0; x < map.cols(); ++x) row[x] = to_byte(map(y, x));
  }
  write_mat(path, m);
}

}  // namespace intent
