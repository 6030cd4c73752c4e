#include "intent/dataset.hpp"

#include <algorithm>
#include <sstream>

#include "intent/error.hpp"
#include "intent/hashtags.hpp"
#include "intent/image_io.hpp"
#include "intent/text_io.hpp"

namespace intent {

namespace fs = std::filesystem;

namespace {

constexpr std::string_view kManifestHeader = "# intent-manifest v1";

std::optional<fs::path> optional_path(const std::string& s) {
  if (s == "-" || s.empty()) return std::nullopt;
  return fs::path(s);
}

}  // namespace

std::vector<ManifestEntry> parse_manifest(std::string_view text) {
  const auto lines = text::split_lines(text);
  if (lines.empty() || text::trim(lines[0]) != kManifestHeader) {
    throw InputError("manifest must start with '" + std::string(kManifestHeader) + "'");
  }
  std::vector<ManifestEntry> out;
  std::size_t width = 0;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (text::trim(lines[i]).empty() || lines[i][0] == '#') continue;
    const auto f = text::split(lines[i], '\t');
    if (f.size() != 4) throw InputError("manifest line " + std::to_string(i + 1) + ": expected 4 fields");
    ManifestEntry e;
    e.image = f[0];
    for (char ch : f[1]) {
      if (ch != '0' && ch != '1') throw InputError("manifest line " + std::to_string(i + 1) + ": bad label mask");
      e.labels.push_back(ch == '1' ? 1 : 0);
    }
    if (e.labels.empty()) throw InputError("manifest line " + std::to_string(i + 1) + ": empty label mask");
    if (width == 0) width = e.labels.size();
    if (e.labels.size() != width) throw InputError("manifest line " + std::to_string(i + 1) + ": label width differs");
    e.mask_dir = optional_path(f[2]);
    e.hashtag_feature = optional_path(f[3]);
    out.push_back(std::move(e));
  }
  return out;
}

std::string serialize_manifest(const std::vector<ManifestEntry>& entries) {
  std::ostringstream out;
  out << kManifestHeader << '\n';
  for (const auto& e : entries) {
    out << e.image.generic_string() << '\t';
    for (auto l : e.labels) out << (l ? '1' : '0');
    out << '\t' << (e.mask_dir ? e.mask_dir->generic_string() : "-") << '\t'
        << (e.hashtag_feature ? e.hashtag_feature->generic_string() : "-") << '\n';
  }
  return out.str();
}

std::vector<ManifestEntry> load_manifest(const fs::path& path) {
  auto entries = parse_manifest(text::read_file(path));
  const auto base = path.parent_path();
  for (auto& e : entries) {
    if (e.image.is_relative()) e.image = base / e.image;
    if (e.mask_dir && e.mask_dir->is_relative()) e.mask_dir = base / *e.mask_dir;
    if (e.hashtag_feature && e.hashtag_feature->is_relative()) e.hashtag_feature = base / *e.hashtag_feature;
  }
  return entries;
}

void save_manifest(const fs::path& path, const std::vector<ManifestEntry>& entries) {
  text::write_file(path, serialize_manifest(entries));
}

Dataset load_dataset(const std::vector<ManifestEntry>& entries, int resize_longest) {
  Dataset data;
  data.reserve(entries.size());
  for (const auto& e : entries) {
    Sample s;
    s.id = e.image.stem().string();
    s.image = read_image(e.image);
    if (resize_longest > 0) s.image = resize_longest_side(s.image, resize_longest);
    s.labels = e.labels;
    if (e.mask_dir) {
      auto m = load_mask_pair(*e.mask_dir);
      m.object = resize_nearest(m.object, s.image.height(), s.image.width());
      m.context = resize_nearest(m.context, s.image.height(), s.image.width());
      s.masks = std::move(m);
    }
    if (e.hashtag_feature) s.hashtag = load_feature(*e.hashtag_feature).vector;
    data.push_back(std::move(s));
  }
  return data;
}

fs::path write_dataset(const fs::path& dir, const Dataset& data) {
  fs::create_directories(dir);
  std::vector<ManifestEntry> entries;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto& s = data[i];
    const std::string stem = s.id.empty() ? "img" + std::to_string(i) : s.id;
    ManifestEntry e;
    e.image = fs::path("images") / (stem + ".png");
    write_image(dir / e.image, s.image);
    e.labels = s.labels;
    if (s.masks) {
      e.mask_dir = fs::path("masks") / stem;
      save_mask_pair(dir / *e.mask_dir, *s.masks);
    }
    if (s.hashtag) {
      e.hashtag_feature = fs::path("hashtags") / (stem + ".txt");
      const bool any = std::any_of(s.hashtag->begin(), s.hashtag->end(), [](double v) { return v != 0.0; });
      text::write_file(dir / *e.hashtag_feature, serialize_feature({*s.hashtag, any ? 1 : 0}));
    }
    entries.push_back(std::move(e));
  }
  const auto manifest = dir / "manifest.txt";
  save_manifest(manifest, entries);
  return manifest;
}

}  // namespace intent
