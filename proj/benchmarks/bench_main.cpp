#include <cstdint>
#include <vector>

#include <benchmark/benchmark.h>

#include "leakprobe/dataset.hpp"
#include "leakprobe/forest.hpp"
#include "leakprobe/probes.hpp"
#include "leakprobe/rng.hpp"
#include "leakprobe/synth.hpp"

namespace {

using namespace leakprobe;

ImageRecord make_rgb(int width, int height, std::uint64_t seed) {
  ImageRecord image;
  image.width = width;
  image.height = height;
  image.channels = 3;
  image.pixels.resize(image.pixel_count() * 3);
  Xoshiro256ss rng(seed);
  for (auto& px : image.pixels) {
    px = static_cast<std::uint8_t>(rng.uniform_below(256));
  }
  return image;
}

FeatureMatrix make_matrix(std::size_t rows, std::size_t cols, int n_classes,
                          std::uint64_t seed) {
  FeatureMatrix matrix;
  matrix.rows = rows;
  matrix.cols = cols;
  matrix.n_classes = n_classes;
  matrix.values.resize(rows * cols);
  matrix.labels.resize(rows);
  Xoshiro256ss rng(seed);
  for (auto& v : matrix.values) {
    v = rng.uniform_real();
  }
  for (auto& label : matrix.labels) {
    label = static_cast<int>(rng.uniform_below(n_classes));
  }
  return matrix;
}

void BM_EightPixelProbe(benchmark::State& state) {
  const ImageRecord image = make_rgb(256, 256, 1);
  for (auto _ : state) {
    benchmark::DoNotOptimize(eight_pixel_probe(image));
  }
}
BENCHMARK(BM_EightPixelProbe);

void BM_BlurMetric(benchmark::State& state) {
  const ImageRecord image = make_rgb(256, 256, 2);
  for (auto _ : state) {
    benchmark::DoNotOptimize(blur_metric(image));
  }
}
BENCHMARK(BM_BlurMetric);

void BM_BoxBlur(benchmark::State& state) {
  const ImageRecord image = make_rgb(256, 256, 3);
  const int radius = static_cast<int>(state.range(0));
  for (auto _ : state) {
    benchmark::DoNotOptimize(box_blur(image, radius));
  }
}
BENCHMARK(BM_BoxBlur)->Arg(1)->Arg(4);

void BM_Split(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  SplitSpec spec;
  spec.seed = 42;
  for (auto _ : state) {
    benchmark::DoNotOptimize(split_count(n, spec));
  }
}
BENCHMARK(BM_Split)->Arg(54305);

void BM_ForestFit(benchmark::State& state) {
  const FeatureMatrix matrix =
      make_matrix(static_cast<std::size_t>(state.range(0)), 8, 5, 4);
  ForestConfig config;
  config.n_trees = 20;
  config.seed = 42;
  for (auto _ : state) {
    benchmark::DoNotOptimize(fit(matrix, config, 1));
  }
}
BENCHMARK(BM_ForestFit)->Arg(200)->Arg(1000);

void BM_ForestPredict(benchmark::State& state) {
  const FeatureMatrix train = make_matrix(1000, 8, 5, 4);
  const FeatureMatrix test = make_matrix(200, 8, 5, 5);
  ForestConfig config;
  config.n_trees = 20;
  config.seed = 42;
  const RandomForestModel model = fit(train, config, 1);
  for (auto _ : state) {
    benchmark::DoNotOptimize(predict_all(model, test, 1));
  }
}
BENCHMARK(BM_ForestPredict);

void BM_SynthGenerate(benchmark::State& state) {
  SynthConfig config;
  config.n_classes = 5;
  config.n_per_class = static_cast<int>(state.range(0));
  config.seed = 42;
  for (auto _ : state) {
    benchmark::DoNotOptimize(generate(config, 1));
  }
}
BENCHMARK(BM_SynthGenerate)->Arg(4)->Arg(20);

}  // namespace

BENCHMARK_MAIN();
