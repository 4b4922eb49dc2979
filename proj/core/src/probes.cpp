#include "leakprobe/probes.hpp"

#include <algorithm>
#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

#include "csv.hpp"
#include "leakprobe/error.hpp"
#include "parallel_for.hpp"

namespace leakprobe {

namespace {

std::vector<double> luma_plane(const ImageRecord& image) {
  std::vector<double> luma(image.pixel_count());
  if (image.channels == 1) {
    for (std::size_t i = 0; i < luma.size(); ++i) {
      luma[i] = static_cast<double>(image.pixels[i]);
    }
  } else {
    for (std::size_t i = 0; i < luma.size(); ++i) {
      const std::uint8_t* px = image.pixels.data() + i * 3;
      luma[i] = 0.299 * px[0] + 0.587 * px[1] + 0.114 * px[2];
    }
  }
  return luma;
}

bool is_black(const ImageRecord& image, std::size_t pixel) {
  const std::uint8_t* px =
      image.pixels.data() + pixel * static_cast<std::size_t>(image.channels);
  for (int c = 0; c < image.channels; ++c) {
    if (px[c] != 0) {
      return false;
    }
  }
  return true;
}

std::string describe(const ImageRecord& image, std::size_t index) {
  std::string where = "record " + std::to_string(index);
  if (!image.source_path.empty()) {
    where += " (" + image.source_path.string() + ")";
  }
  return where;
}

}  // namespace

const char* probe_name(ProbeKind kind) {
  switch (kind) {
    case ProbeKind::kEightPixel:
      return "8px";
    case ProbeKind::kBlur:
      return "blur";
  }
  throw InvalidArgument("unknown probe kind");
}

ProbeKind parse_probe(const std::string& name) {
  if (name == "8px") {
    return ProbeKind::kEightPixel;
  }
  if (name == "blur") {
    return ProbeKind::kBlur;
  }
  throw InvalidArgument("unknown probe \"" + name +
                        "\" (expected \"8px\" or \"blur\")");
}

std::array<std::pair<int, int>, 8> eight_pixel_coords(int width, int height) {
  if (width < 2 || height < 2) {
    throw InvalidArgument("eight_pixel_coords: needs width and height >= 2, "
                          "got " +
                          std::to_string(width) + "x" +
                          std::to_string(height));
  }
  const int cx = width / 2;
  const int cy = height / 2;
  return {{{0, 0},
           {width - 1, 0},
           {0, height - 1},
           {width - 1, height - 1},
           {cx, 0},
           {cx, height - 1},
           {0, cy},
           {width - 1, cy}}};
}

ProbeVector eight_pixel_probe(const ImageRecord& image) {
  const auto coords = eight_pixel_coords(image.width, image.height);
  ProbeVector vec;
  vec.probe = ProbeKind::kEightPixel;
  vec.features.reserve(coords.size() * image.channels);
  for (const auto& [x, y] : coords) {
    for (int c = 0; c < image.channels; ++c) {
      vec.features.push_back(static_cast<double>(image.at(x, y, c)));
    }
  }
  return vec;
}

double blur_metric(const ImageRecord& image) {
  if (image.width < 3 || image.height < 3) {
    throw InvalidArgument("blur_metric: needs width and height >= 3, got " +
                          std::to_string(image.width) + "x" +
                          std::to_string(image.height));
  }
  const std::vector<double> luma = luma_plane(image);
  const int w = image.width;
  const int h = image.height;

  std::vector<double> responses;
  responses.reserve(static_cast<std::size_t>(w - 2) * (h - 2));
  for (int y = 1; y < h - 1; ++y) {
    const double* above = luma.data() + static_cast<std::size_t>(y - 1) * w;
    const double* row = luma.data() + static_cast<std::size_t>(y) * w;
    const double* below = luma.data() + static_cast<std::size_t>(y + 1) * w;
    for (int x = 1; x < w - 1; ++x) {
      responses.push_back(above[x] + row[x - 1] + row[x + 1] + below[x] -
                          4.0 * row[x]);
    }
  }

  const double n = static_cast<double>(responses.size());
  double mean = 0.0;
  for (double r : responses) {
    mean += r;
  }
  mean /= n;
  double variance = 0.0;
  for (double r : responses) {
    const double d = r - mean;
    variance += d * d;
  }
  return variance / n;
}

ImageRecord separate_background(const ImageRecord& original,
                                const ImageRecord& foreground) {
  if (!original.same_shape(foreground)) {
    throw InvalidArgument(
        "separate_background: shape mismatch, " +
        std::to_string(original.width) + "x" + std::to_string(original.height) +
        "x" + std::to_string(original.channels) + " vs " +
        std::to_string(foreground.width) + "x" +
        std::to_string(foreground.height) + "x" +
        std::to_string(foreground.channels));
  }
  ImageRecord out = original;
  const std::size_t channels = static_cast<std::size_t>(original.channels);
  for (std::size_t i = 0; i < original.pixel_count(); ++i) {
    if (!is_black(foreground, i)) {
      for (std::size_t c = 0; c < channels; ++c) {
        out.pixels[i * channels + c] = 0;
      }
    }
  }
  return out;
}

ImageRecord box_blur(const ImageRecord& image, int radius) {
  if (radius < 0) {
    throw InvalidArgument("box_blur: radius must be >= 0");
  }
  if (radius == 0) {
    return image;
  }
  const int w = image.width;
  const int h = image.height;
  const int channels = image.channels;
  ImageRecord out = image;

  // Integral image per channel; window sums are then four lookups, so the
  // rounded mean is exact for any clipped window.
  const std::size_t stride = static_cast<std::size_t>(w) + 1;
  std::vector<std::uint64_t> integral(stride * (h + 1));
  for (int c = 0; c < channels; ++c) {
    for (int y = 0; y < h; ++y) {
      std::uint64_t row_sum = 0;
      for (int x = 0; x < w; ++x) {
        row_sum += image.at(x, y, c);
        integral[(y + 1) * stride + (x + 1)] =
            integral[y * stride + (x + 1)] + row_sum;
      }
    }
    for (int y = 0; y < h; ++y) {
      const int y0 = std::max(0, y - radius);
      const int y1 = std::min(h - 1, y + radius);
      for (int x = 0; x < w; ++x) {
        const int x0 = std::max(0, x - radius);
        const int x1 = std::min(w - 1, x + radius);
        const std::uint64_t sum = integral[(y1 + 1) * stride + (x1 + 1)] -
                                  integral[y0 * stride + (x1 + 1)] -
                                  integral[(y1 + 1) * stride + x0] +
                                  integral[y0 * stride + x0];
        const std::uint64_t count =
            static_cast<std::uint64_t>(x1 - x0 + 1) * (y1 - y0 + 1);
        out.at(x, y, c) =
            static_cast<std::uint8_t>((2 * sum + count) / (2 * count));
      }
    }
  }
  return out;
}

FeatureMatrix build_feature_matrix(const LabeledImageSet& set, ProbeKind probe,
                                   unsigned threads) {
  if (set.records.empty()) {
    throw InvalidArgument("build_feature_matrix: the set is empty");
  }

  FeatureMatrix matrix;
  matrix.probe = probe;
  matrix.rows = set.size();
  matrix.cols = probe == ProbeKind::kBlur
                    ? 1
                    : 8 * static_cast<std::size_t>(set.records[0].channels);
  matrix.values.resize(matrix.rows * matrix.cols);
  matrix.labels.resize(matrix.rows);
  matrix.n_classes = set.n_classes();

  detail::parallel_for(set.size(), threads, [&](std::size_t i) {
    const ImageRecord& record = set.records[i];
    double* row = matrix.values.data() + i * matrix.cols;
    try {
      if (probe == ProbeKind::kBlur) {
        row[0] = blur_metric(record);
      } else {
        const ProbeVector vec = eight_pixel_probe(record);
        if (vec.features.size() != matrix.cols) {
          throw DataError("feature width " +
                          std::to_string(vec.features.size()) +
                          " does not match the set's " +
                          std::to_string(matrix.cols) +
                          " (mixed channel counts)");
        }
        std::copy(vec.features.begin(), vec.features.end(), row);
      }
    } catch (const Error& e) {
      throw DataError(describe(record, i) + ": " + e.what());
    }
    matrix.labels[i] = set.label_of(i);
  });
  return matrix;
}

void write_probe_csv(const LabeledImageSet& set, ProbeKind probe,
                     std::ostream& out, unsigned threads) {
  const FeatureMatrix matrix = build_feature_matrix(set, probe, threads);
  out << "path,label";
  for (std::size_t j = 0; j < matrix.cols; ++j) {
    out << ",f" << j;
  }
  out << '\n';
  for (std::size_t i = 0; i < matrix.rows; ++i) {
    const ImageRecord& record = set.records[i];
    out << detail::csv_field(record.source_path.string()) << ','
        << detail::csv_field(record.label);
    for (std::size_t j = 0; j < matrix.cols; ++j) {
      out << ',' << detail::format_double(matrix.at(i, j));
    }
    out << '\n';
  }
}

}  // namespace leakprobe
