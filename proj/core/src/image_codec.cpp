#include "leakprobe/image_codec.hpp"

#include <cstdint>
#include <string>
#include <vector>

#include "leakprobe/error.hpp"

#pragma GCC diagnostic push
#pragma GCC diagnostic ignored "-Wdeprecated-enum-enum-conversion"
#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>
#pragma GCC diagnostic pop

namespace leakprobe {

namespace {

// Integer round-half-up of c * a / 255; used to composite alpha over black.
inline std::uint8_t apply_alpha(std::uint8_t value, std::uint8_t alpha) {
  const unsigned scaled = static_cast<unsigned>(value) * alpha;
  return static_cast<std::uint8_t>((2 * scaled + 255) / 510);
}

ImageRecord from_mat(const cv::Mat& input, const std::filesystem::path& origin) {
  cv::Mat mat = input;
  if (mat.depth() == CV_16U) {
    // 16-bit samples rescale to the 8-bit range.
    mat.convertTo(mat, CV_8U, 255.0 / 65535.0);
  } else if (mat.depth() != CV_8U) {
    throw DataError("unsupported sample depth in image: " + origin.string());
  }

  ImageRecord record;
  record.source_path = origin;
  record.width = mat.cols;
  record.height = mat.rows;

  const int in_channels = mat.channels();
  record.channels = (in_channels == 1) ? 1 : 3;
  record.pixels.resize(record.pixel_count() * record.channels);

  std::size_t out = 0;
  for (int y = 0; y < mat.rows; ++y) {
    const std::uint8_t* row = mat.ptr<std::uint8_t>(y);
    for (int x = 0; x < mat.cols; ++x) {
      const std::uint8_t* px = row + static_cast<std::size_t>(x) * in_channels;
      switch (in_channels) {
        case 1:
          record.pixels[out++] = px[0];
          break;
        case 2:  // gray + alpha, composited over black
          record.pixels[out++] = apply_alpha(px[0], px[1]);
          record.pixels[out++] = apply_alpha(px[0], px[1]);
          record.pixels[out++] = apply_alpha(px[0], px[1]);
          break;
        case 3:  // BGR -> RGB
          record.pixels[out++] = px[2];
          record.pixels[out++] = px[1];
          record.pixels[out++] = px[0];
          break;
        case 4:  // BGRA -> RGB over black
          record.pixels[out++] = apply_alpha(px[2], px[3]);
          record.pixels[out++] = apply_alpha(px[1], px[3]);
          record.pixels[out++] = apply_alpha(px[0], px[3]);
          break;
        default:
          throw DataError("unsupported channel count (" +
                          std::to_string(in_channels) +
                          ") in image: " + origin.string());
      }
    }
  }
  return record;
}

}  // namespace

ImageRecord decode_image_file(const std::filesystem::path& path) {
  cv::Mat mat = cv::imread(path.string(), cv::IMREAD_UNCHANGED);
  if (mat.empty()) {
    throw DataError("cannot decode image file: " + path.string());
  }
  return from_mat(mat, path);
}

ImageRecord decode_image_buffer(std::span<const std::uint8_t> bytes,
                                const std::filesystem::path& origin) {
  const cv::Mat buffer(1, static_cast<int>(bytes.size()), CV_8UC1,
                       const_cast<std::uint8_t*>(bytes.data()));
  cv::Mat mat = cv::imdecode(buffer, cv::IMREAD_UNCHANGED);
  if (mat.empty()) {
    throw DataError("cannot decode image buffer: " + origin.string());
  }
  return from_mat(mat, origin);
}

void write_png(const std::filesystem::path& path, const ImageRecord& image) {
  if (image.channels != 1 && image.channels != 3) {
    throw InvalidArgument("write_png: image must have 1 or 3 channels");
  }
  if (image.width < 1 || image.height < 1 ||
      image.pixels.size() != image.pixel_count() * image.channels) {
    throw InvalidArgument("write_png: inconsistent image dimensions");
  }

  cv::Mat mat(image.height, image.width,
              image.channels == 1 ? CV_8UC1 : CV_8UC3);
  for (int y = 0; y < image.height; ++y) {
    std::uint8_t* row = mat.ptr<std::uint8_t>(y);
    for (int x = 0; x < image.width; ++x) {
      if (image.channels == 1) {
        row[x] = image.at(x, y, 0);
      } else {  // RGB -> BGR
        row[3 * x + 0] = image.at(x, y, 2);
        row[3 * x + 1] = image.at(x, y, 1);
        row[3 * x + 2] = image.at(x, y, 0);
      }
    }
  }

  if (path.has_parent_path()) {
    std::filesystem::create_directories(path.parent_path());
  }
  if (!cv::imwrite(path.string(), mat)) {
    throw DataError("cannot write PNG file: " + path.string());
  }
}

}  // namespace leakprobe
