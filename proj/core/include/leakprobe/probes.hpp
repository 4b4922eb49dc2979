#pragma once

#include <array>
#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "leakprobe/image.hpp"

namespace leakprobe {

/// Deliberately label-uninformative feature extractors. A probe that beats
/// the chance baseline reveals label-correlated noise in the dataset, since
/// the features carry no task signal by construction.
enum class ProbeKind {
  kEightPixel,  // 8 border pixels (corners + side centers)
  kBlur,        // scalar sharpness estimate
};

/// Canonical probe names as used by the CLI and reports: "8px" and "blur".
const char* probe_name(ProbeKind kind);
ProbeKind parse_probe(const std::string& name);

/// Name of the sharpness estimator behind the blur probe, echoed in reports.
inline constexpr const char* kBlurMetricName = "variance_of_3x3_laplacian";

/// The eight sampling positions for a width x height frame, as (x, y) pairs
/// in emission order: the four corners, then the centers of the top, bottom,
/// left and right sides. Side centers round down (pixel floor(W/2) /
/// floor(H/2)).
std::array<std::pair<int, int>, 8> eight_pixel_coords(int width, int height);

struct ProbeVector {
  ProbeKind probe = ProbeKind::kEightPixel;
  std::vector<double> features;
};

/// Samples the eight border pixels; each pixel's channels are emitted
/// consecutively, so the vector has 8 entries for grayscale and 24 for RGB.
/// Requires width >= 2 and height >= 2.
ProbeVector eight_pixel_probe(const ImageRecord& image);

/// Sharpness estimate: population variance of the 3x3 Laplacian response
/// over the image interior (no padding), computed on luma
/// (0.299 R + 0.587 G + 0.114 B; identity for grayscale). Requires
/// width >= 3 and height >= 3.
double blur_metric(const ImageRecord& image);

/// Complements a foreground mask: where the foreground image is pure black
/// the original pixel is kept, everywhere else the output is pure black.
/// The two images must have identical dimensions and channel counts.
ImageRecord separate_background(const ImageRecord& original,
                                const ImageRecord& foreground);

/// Mean filter over a (2r+1)^2 window clipped to the frame, with exact
/// integer rounding (half up). radius 0 is the identity.
ImageRecord box_blur(const ImageRecord& image, int radius);

/// N x D feature matrix with dense class labels; the classifier's input.
struct FeatureMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> values;  // row-major
  std::vector<int> labels;     // dense class indices, one per row
  int n_classes = 0;
  ProbeKind probe = ProbeKind::kEightPixel;

  double at(std::size_t i, std::size_t j) const {
    return values[i * cols + j];
  }
  std::span<const double> row(std::size_t i) const {
    return {values.data() + i * cols, cols};
  }
};

/// Applies the chosen probe to every record. Throws naming the first record
/// (by index order) that violates the probe's preconditions or produces a
/// different feature width than the rest of the set.
FeatureMatrix build_feature_matrix(const LabeledImageSet& set, ProbeKind probe,
                                   unsigned threads = 0);

/// CSV dump `path,label,f0..f{D-1}` for inspection and cross-implementation
/// diffing. Feature values use shortest round-trip formatting.
void write_probe_csv(const LabeledImageSet& set, ProbeKind probe,
                     std::ostream& out, unsigned threads = 0);

}  // namespace leakprobe
