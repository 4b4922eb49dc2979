#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <vector>

#include "leakprobe/image.hpp"

namespace leakprobe {

/// Seeded train/test partition request. The split is globally random, not
/// stratified per class.
struct SplitSpec {
  double train_fraction = 0.8;
  std::uint64_t seed = 0;

  bool operator==(const SplitSpec&) const = default;
};

struct SplitIndices {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};

/// Loads a folder-per-class image tree: `root/<class_name>/<image>.{png,jpg,
/// jpeg}` (extensions case-insensitive). Class indices follow lexicographic
/// class-name order and records are ordered by (class, filename), so two
/// loads of the same tree are identical. Decoding runs on `threads` workers
/// (0 = one per hardware thread); assembly order does not depend on thread
/// scheduling.
LabeledImageSet load_image_folder(const std::filesystem::path& root,
                                  unsigned threads = 0);

/// Loads an IDX image/label file pair (big-endian, magic 0x00000803 for
/// images and 0x00000801 for labels). Labels are the digit strings "0".."9"
/// and the class index always maps digit d to index d (K = 10).
LabeledImageSet load_idx_pair(const std::filesystem::path& images_path,
                              const std::filesystem::path& labels_path);

/// Shuffles indices 0..N-1 with a Fisher-Yates pass over a xoshiro256**
/// stream derived from spec.seed; the first floor(train_fraction * N)
/// indices form the train partition, the rest the test partition. Throws
/// when either partition would be empty.
SplitIndices split(const LabeledImageSet& set, const SplitSpec& spec);

/// Same split procedure for a bare element count.
SplitIndices split_count(std::size_t n, const SplitSpec& spec);

/// The chance baseline for a balanced K-class problem, as a percentage.
double random_guess_accuracy(int n_classes);

/// Writes a provenance manifest: CSV `path,label,width,height,channels`.
void write_manifest_csv(const LabeledImageSet& set, std::ostream& out);

}  // namespace leakprobe
