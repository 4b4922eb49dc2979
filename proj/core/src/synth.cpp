#include "leakprobe/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <map>
#include <string>
#include <vector>

#include "leakprobe/error.hpp"
#include "leakprobe/image_codec.hpp"
#include "leakprobe/probes.hpp"
#include "leakprobe/rng.hpp"
#include "parallel_for.hpp"

namespace leakprobe {

namespace {

void validate(const SynthConfig& config) {
  if (config.n_classes < 2) {
    throw InvalidArgument("synth: n_classes must be >= 2");
  }
  if (config.n_per_class < 1) {
    throw InvalidArgument("synth: n_per_class must be >= 1");
  }
  if (config.width < 16 || config.height < 16) {
    throw InvalidArgument("synth: width and height must be >= 16, got " +
                          std::to_string(config.width) + "x" +
                          std::to_string(config.height));
  }
  if (!(config.bias_strength >= 0.0 && config.bias_strength <= 1.0)) {
    throw InvalidArgument("synth: bias_strength must be in [0, 1]");
  }
  if (!(config.background_noise_sd >= 0.0)) {
    throw InvalidArgument("synth: background_noise_sd must be >= 0");
  }
}

std::string class_name(int k, int n_classes) {
  std::string digits = std::to_string(k);
  const std::size_t width = std::to_string(n_classes - 1).size();
  return "class_" + std::string(width - digits.size(), '0') + digits;
}

std::uint8_t clip_round(double value) {
  const auto v = std::llround(value);
  return static_cast<std::uint8_t>(std::clamp<long long>(v, 0, 255));
}

/// One synthetic frame plus its blob mask. Per-image stream: three uniform
/// draws (two semi-axes, blob intensity), then one normal per pixel in
/// row-major order when the noise sd is positive.
void render_image(const SynthConfig& config, int k, std::uint64_t image_index,
                  ImageRecord& full, ImageRecord& foreground) {
  Xoshiro256ss rng(
      Xoshiro256ss::derive_seed(config.seed, kSynthSeedDomain, image_index));

  const double extent = static_cast<double>(std::min(config.width,
                                                     config.height));
  const double ax = (0.2 + 0.15 * rng.uniform_real()) * extent;
  const double ay = (0.2 + 0.15 * rng.uniform_real()) * extent;
  const double intensity = 50.0 + 20.0 * rng.uniform_real();
  const double cx = (config.width - 1) / 2.0;
  const double cy = (config.height - 1) / 2.0;

  const double K = config.n_classes;
  const double delta = config.bias_channel == BiasChannel::kBackgroundLevel
                           ? config.bias_strength * (k - (K - 1) / 2.0) *
                                 (60.0 / K)
                           : 0.0;
  const double level = 120.0 + delta;

  full.width = config.width;
  full.height = config.height;
  full.channels = 1;
  full.pixels.resize(full.pixel_count());
  std::vector<char> blob(full.pixel_count());

  std::size_t i = 0;
  for (int y = 0; y < config.height; ++y) {
    for (int x = 0; x < config.width; ++x, ++i) {
      const double dx = (x - cx) / ax;
      const double dy = (y - cy) / ay;
      blob[i] = dx * dx + dy * dy <= 1.0;
      double value = blob[i] ? intensity : level;
      if (config.background_noise_sd > 0.0) {
        value += rng.normal(0.0, config.background_noise_sd);
      }
      full.pixels[i] = clip_round(value);
    }
  }

  if (config.bias_channel == BiasChannel::kBlur) {
    const int radius =
        static_cast<int>(std::llround(config.bias_strength * k));
    full = box_blur(full, radius);
  }

  foreground = full;
  for (std::size_t p = 0; p < blob.size(); ++p) {
    if (!blob[p]) {
      foreground.pixels[p] = 0;
    }
  }
}

}  // namespace

const char* bias_channel_name(BiasChannel channel) {
  switch (channel) {
    case BiasChannel::kBackgroundLevel:
      return "bg";
    case BiasChannel::kBlur:
      return "blur";
  }
  throw InvalidArgument("unknown bias channel");
}

BiasChannel parse_bias_channel(const std::string& name) {
  if (name == "bg") {
    return BiasChannel::kBackgroundLevel;
  }
  if (name == "blur") {
    return BiasChannel::kBlur;
  }
  throw InvalidArgument("unknown bias channel \"" + name +
                        "\" (expected \"bg\" or \"blur\")");
}

SynthPair generate_with_foreground(const SynthConfig& config,
                                   unsigned threads) {
  validate(config);

  SynthPair pair;
  pair.full.name = std::string("synthetic_") +
                   bias_channel_name(config.bias_channel);
  pair.foreground.name = pair.full.name + "_fg";

  const std::size_t total = static_cast<std::size_t>(config.n_classes) *
                            static_cast<std::size_t>(config.n_per_class);
  pair.full.records.resize(total);
  pair.foreground.records.resize(total);
  for (int k = 0; k < config.n_classes; ++k) {
    pair.full.class_index.emplace(class_name(k, config.n_classes), k);
  }
  pair.foreground.class_index = pair.full.class_index;

  detail::parallel_for(total, threads, [&](std::size_t i) {
    const int k = static_cast<int>(i / config.n_per_class);
    ImageRecord& full = pair.full.records[i];
    ImageRecord& foreground = pair.foreground.records[i];
    render_image(config, k, static_cast<std::uint64_t>(i), full, foreground);
    full.label = class_name(k, config.n_classes);
    foreground.label = full.label;
  });
  return pair;
}

LabeledImageSet generate(const SynthConfig& config, unsigned threads) {
  return generate_with_foreground(config, threads).full;
}

void write_image_folder(const LabeledImageSet& set,
                        const std::filesystem::path& root) {
  std::map<std::string, int> counters;
  for (const ImageRecord& record : set.records) {
    const int n = counters[record.label]++;
    char name[32];
    std::snprintf(name, sizeof(name), "img_%05d.png", n);
    write_png(root / record.label / name, record);
  }
}

}  // namespace leakprobe
