#include "leakprobe/dataset.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <numeric>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "csv.hpp"
#include "leakprobe/error.hpp"
#include "leakprobe/image_codec.hpp"
#include "leakprobe/rng.hpp"
#include "parallel_for.hpp"

namespace leakprobe {

namespace {

namespace fs = std::filesystem;

bool has_image_extension(const fs::path& path) {
  std::string ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  return ext == ".png" || ext == ".jpg" || ext == ".jpeg";
}

std::uint32_t read_be32(std::istream& in, const fs::path& path) {
  unsigned char bytes[4];
  if (!in.read(reinterpret_cast<char*>(bytes), 4)) {
    throw DataError("truncated IDX header in " + path.string());
  }
  return (std::uint32_t{bytes[0]} << 24) | (std::uint32_t{bytes[1]} << 16) |
         (std::uint32_t{bytes[2]} << 8) | std::uint32_t{bytes[3]};
}

constexpr std::uint32_t kIdxImagesMagic = 0x00000803;
constexpr std::uint32_t kIdxLabelsMagic = 0x00000801;

}  // namespace

LabeledImageSet load_image_folder(const fs::path& root, unsigned threads) {
  if (!fs::is_directory(root)) {
    throw DataError("dataset root is not a directory: " + root.string());
  }

  std::vector<std::string> class_names;
  for (const auto& entry : fs::directory_iterator(root)) {
    if (entry.is_directory()) {
      class_names.push_back(entry.path().filename().string());
    }
  }
  if (class_names.empty()) {
    throw DataError("no class directories under " + root.string());
  }
  std::sort(class_names.begin(), class_names.end());

  LabeledImageSet set;
  set.name = root.filename().string();
  if (set.name.empty()) {
    set.name = root.parent_path().filename().string();
  }

  std::vector<std::pair<fs::path, std::string>> files;  // (path, label)
  int next_index = 0;
  for (const auto& class_name : class_names) {
    set.class_index.emplace(class_name, next_index++);
    std::vector<fs::path> class_files;
    for (const auto& entry : fs::directory_iterator(root / class_name)) {
      if (entry.is_regular_file() && has_image_extension(entry.path())) {
        class_files.push_back(entry.path());
      }
    }
    if (class_files.empty()) {
      throw DataError("class directory has no PNG/JPEG files: " +
                      (root / class_name).string());
    }
    std::sort(class_files.begin(), class_files.end(),
              [](const fs::path& a, const fs::path& b) {
                return a.filename().string() < b.filename().string();
              });
    for (auto& path : class_files) {
      files.emplace_back(std::move(path), class_name);
    }
  }

  set.records.resize(files.size());
  detail::parallel_for(files.size(), threads, [&](std::size_t i) {
    ImageRecord record = decode_image_file(files[i].first);
    record.label = files[i].second;
    set.records[i] = std::move(record);
  });
  return set;
}

LabeledImageSet load_idx_pair(const fs::path& images_path,
                              const fs::path& labels_path) {
  std::ifstream images(images_path, std::ios::binary);
  if (!images) {
    throw DataError("cannot open IDX images file: " + images_path.string());
  }
  std::ifstream labels(labels_path, std::ios::binary);
  if (!labels) {
    throw DataError("cannot open IDX labels file: " + labels_path.string());
  }

  const std::uint32_t images_magic = read_be32(images, images_path);
  if (images_magic != kIdxImagesMagic) {
    throw DataError("wrong magic number in IDX images file " +
                    images_path.string() + " (expected 0x00000803)");
  }
  const std::uint32_t n_images = read_be32(images, images_path);
  const std::uint32_t rows = read_be32(images, images_path);
  const std::uint32_t cols = read_be32(images, images_path);

  const std::uint32_t labels_magic = read_be32(labels, labels_path);
  if (labels_magic != kIdxLabelsMagic) {
    throw DataError("wrong magic number in IDX labels file " +
                    labels_path.string() + " (expected 0x00000801)");
  }
  const std::uint32_t n_labels = read_be32(labels, labels_path);

  if (n_images != n_labels) {
    throw DataError("IDX item count mismatch: " + std::to_string(n_images) +
                    " images vs " + std::to_string(n_labels) + " labels");
  }
  if (rows == 0 || cols == 0) {
    throw DataError("IDX images file declares zero-sized items: " +
                    images_path.string());
  }

  std::vector<std::uint8_t> label_bytes(n_labels);
  if (n_labels > 0 &&
      !labels.read(reinterpret_cast<char*>(label_bytes.data()), n_labels)) {
    throw DataError("truncated payload in IDX labels file " +
                    labels_path.string());
  }

  LabeledImageSet set;
  set.name = images_path.stem().string();
  for (int d = 0; d < 10; ++d) {
    set.class_index.emplace(std::to_string(d), d);
  }

  const std::size_t item_size = static_cast<std::size_t>(rows) * cols;
  set.records.resize(n_images);
  for (std::uint32_t i = 0; i < n_images; ++i) {
    ImageRecord& record = set.records[i];
    record.width = static_cast<int>(cols);
    record.height = static_cast<int>(rows);
    record.channels = 1;
    record.pixels.resize(item_size);
    if (!images.read(reinterpret_cast<char*>(record.pixels.data()),
                     static_cast<std::streamsize>(item_size))) {
      throw DataError("truncated payload in IDX images file " +
                      images_path.string() + " (item " + std::to_string(i) +
                      " of " + std::to_string(n_images) + ")");
    }
    if (label_bytes[i] > 9) {
      throw DataError("IDX label byte out of range 0..9 at item " +
                      std::to_string(i) + " in " + labels_path.string());
    }
    record.label = std::to_string(label_bytes[i]);
    record.source_path = images_path.string() + "#" + std::to_string(i);
  }
  return set;
}

SplitIndices split_count(std::size_t n, const SplitSpec& spec) {
  if (!(spec.train_fraction > 0.0 && spec.train_fraction < 1.0)) {
    throw InvalidArgument("split: train_fraction must be in (0, 1)");
  }
  const auto n_train = static_cast<std::size_t>(
      std::floor(spec.train_fraction * static_cast<double>(n)));
  if (n_train == 0 || n_train == n) {
    throw InvalidArgument(
        "split: cannot form both partitions (train fraction " +
        std::to_string(spec.train_fraction) + " of " + std::to_string(n) +
        " records leaves one side empty)");
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Xoshiro256ss rng(Xoshiro256ss::derive_seed(spec.seed, kSplitSeedDomain, 0));
  shuffle(order, rng);

  SplitIndices indices;
  indices.train.assign(order.begin(), order.begin() + n_train);
  indices.test.assign(order.begin() + n_train, order.end());
  return indices;
}

SplitIndices split(const LabeledImageSet& set, const SplitSpec& spec) {
  if (set.records.empty()) {
    throw InvalidArgument("split: the set is empty");
  }
  return split_count(set.size(), spec);
}

double random_guess_accuracy(int n_classes) {
  if (n_classes < 1) {
    throw InvalidArgument("random_guess_accuracy: class count must be >= 1");
  }
  return 100.0 / static_cast<double>(n_classes);
}

void write_manifest_csv(const LabeledImageSet& set, std::ostream& out) {
  out << "path,label,width,height,channels\n";
  for (const auto& record : set.records) {
    out << detail::csv_field(record.source_path.string()) << ','
        << detail::csv_field(record.label) << ',' << record.width << ','
        << record.height << ',' << record.channels << '\n';
  }
}

}  // namespace leakprobe
