#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "leakprobe/image.hpp"

namespace leakprobe {

/// Which capture condition the injected bias rides on.
enum class BiasChannel {
  kBackgroundLevel,  // class-dependent background gray level
  kBlur,             // class-dependent box-blur radius over the whole frame
};

const char* bias_channel_name(BiasChannel channel);
BiasChannel parse_bias_channel(const std::string& name);

/// Knobs for synthetic datasets with bias that is known by construction.
/// The foreground blob carries zero class signal; any probe accuracy above
/// chance is attributable to the injected bias.
struct SynthConfig {
  int n_classes = 5;
  int n_per_class = 200;
  int width = 64;
  int height = 64;
  double bias_strength = 1.0;  // in [0, 1]
  BiasChannel bias_channel = BiasChannel::kBackgroundLevel;
  double background_noise_sd = 5.0;
  std::uint64_t seed = 0;
};

struct SynthPair {
  LabeledImageSet full;        // complete frames
  LabeledImageSet foreground;  // blob pixels only, pure black elsewhere
};

/// Generates the dataset, byte-identical for a given config. Each grayscale
/// image holds a centered random ellipse over a noisy background at base
/// level 120; with the BackgroundLevel channel the background shifts by
/// bias_strength * (k - (K-1)/2) * (60/K) for class k, with the Blur channel
/// the whole frame is box-blurred with radius round(bias_strength * k)
/// before masking.
LabeledImageSet generate(const SynthConfig& config, unsigned threads = 0);

/// Like generate, also returning the aligned foreground variant (same order,
/// labels and dimensions) for background-removal experiments.
SynthPair generate_with_foreground(const SynthConfig& config,
                                   unsigned threads = 0);

/// Writes a set as a folder-per-class PNG tree consumable by
/// load_image_folder: `root/<class>/img_#####.png` in record order.
void write_image_folder(const LabeledImageSet& set,
                        const std::filesystem::path& root);

}  // namespace leakprobe
