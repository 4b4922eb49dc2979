#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace leakprobe {

/// A decoded 8-bit image: 1 channel (grayscale) or 3 (RGB), row-major with
/// interleaved channels.
struct ImageRecord {
  std::filesystem::path source_path;
  std::string label;
  int width = 0;
  int height = 0;
  int channels = 1;
  std::vector<std::uint8_t> pixels;

  std::size_t pixel_count() const {
    return static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
  }

  std::uint8_t at(int x, int y, int c = 0) const {
    return pixels[(static_cast<std::size_t>(y) * width + x) * channels + c];
  }

  std::uint8_t& at(int x, int y, int c = 0) {
    return pixels[(static_cast<std::size_t>(y) * width + x) * channels + c];
  }

  bool same_shape(const ImageRecord& other) const {
    return width == other.width && height == other.height &&
           channels == other.channels;
  }
};

/// An ordered image collection plus a dense class index. class_index is a
/// sorted map, so iteration order equals index order (class names are
/// indexed lexicographically).
struct LabeledImageSet {
  std::string name;
  std::vector<ImageRecord> records;
  std::map<std::string, int> class_index;

  std::size_t size() const { return records.size(); }
  int n_classes() const { return static_cast<int>(class_index.size()); }

  /// Dense class index of record i.
  int label_of(std::size_t i) const {
    return class_index.at(records[i].label);
  }
};

}  // namespace leakprobe
