#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <doctest.h>

#include "leakprobe/error.hpp"
#include "leakprobe/probes.hpp"
#include "leakprobe/rng.hpp"

using namespace leakprobe;

namespace {

ImageRecord make_image(int width, int height, int channels,
                       std::vector<std::uint8_t> pixels) {
  ImageRecord image;
  image.source_path = "synthetic";
  image.label = "a";
  image.width = width;
  image.height = height;
  image.channels = channels;
  image.pixels = std::move(pixels);
  return image;
}

ImageRecord gradient_image(int width, int height) {
  std::vector<std::uint8_t> pixels;
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      pixels.push_back(static_cast<std::uint8_t>(10 * x + y));
    }
  }
  return make_image(width, height, 1, std::move(pixels));
}

ImageRecord random_image(int width, int height, int channels,
                         std::uint64_t seed) {
  Xoshiro256ss rng(seed);
  std::vector<std::uint8_t> pixels;
  const std::size_t n =
      static_cast<std::size_t>(width) * height * channels;
  for (std::size_t i = 0; i < n; ++i) {
    pixels.push_back(static_cast<std::uint8_t>(rng.uniform_below(256)));
  }
  return make_image(width, height, channels, std::move(pixels));
}

/// Windowed mean with clipping, recomputed per pixel. Slow but obviously
/// faithful to the definition; the production code uses integral images.
ImageRecord reference_box_blur(const ImageRecord& image, int radius) {
  ImageRecord out = image;
  for (int y = 0; y < image.height; ++y) {
    for (int x = 0; x < image.width; ++x) {
      for (int c = 0; c < image.channels; ++c) {
        long long sum = 0;
        long long count = 0;
        for (int dy = -radius; dy <= radius; ++dy) {
          for (int dx = -radius; dx <= radius; ++dx) {
            const int sx = x + dx;
            const int sy = y + dy;
            if (sx < 0 || sy < 0 || sx >= image.width || sy >= image.height) {
              continue;
            }
            sum += image.at(sx, sy, c);
            ++count;
          }
        }
        out.at(x, y, c) =
            static_cast<std::uint8_t>((2 * sum + count) / (2 * count));
      }
    }
  }
  return out;
}

LabeledImageSet singleton_set(ImageRecord record) {
  LabeledImageSet set;
  set.name = "test";
  record.label = "a";
  set.records.push_back(std::move(record));
  set.class_index["a"] = 0;
  return set;
}

}  // namespace

TEST_CASE("probe names round-trip") {
  CHECK(probe_name(ProbeKind::kEightPixel) == std::string("8px"));
  CHECK(probe_name(ProbeKind::kBlur) == std::string("blur"));
  CHECK(parse_probe("8px") == ProbeKind::kEightPixel);
  CHECK(parse_probe("blur") == ProbeKind::kBlur);
  CHECK_THROWS_AS(parse_probe("corner"), InvalidArgument);
}

TEST_CASE("eight_pixel_coords on a 4x4 frame") {
  const auto coords = eight_pixel_coords(4, 4);
  const std::array<std::pair<int, int>, 8> expected = {
      std::pair{0, 0}, {3, 0}, {0, 3}, {3, 3},
      {2, 0}, {2, 3}, {0, 2}, {3, 2}};
  CHECK(coords == expected);
}

TEST_CASE("eight_pixel_probe reads the documented positions") {
  SUBCASE("4x4 gradient") {
    const ProbeVector probe = eight_pixel_probe(gradient_image(4, 4));
    CHECK(probe.probe == ProbeKind::kEightPixel);
    CHECK(probe.features ==
          std::vector<double>{0, 30, 3, 33, 20, 23, 2, 32});
  }
  SUBCASE("constant RGB image yields 24 repeating channel values") {
    const ImageRecord image = make_image(
        256, 256, 3,
        [] {
          std::vector<std::uint8_t> p;
          for (int i = 0; i < 256 * 256; ++i) {
            p.insert(p.end(), {7, 8, 9});
          }
          return p;
        }());
    const ProbeVector probe = eight_pixel_probe(image);
    REQUIRE(probe.features.size() == 24);
    for (std::size_t i = 0; i < 24; i += 3) {
      CHECK(probe.features[i] == 7);
      CHECK(probe.features[i + 1] == 8);
      CHECK(probe.features[i + 2] == 9);
    }
  }
  SUBCASE("2x2 frame degenerates to the four corners twice") {
    const ProbeVector probe =
        eight_pixel_probe(make_image(2, 2, 1, {1, 2, 3, 4}));
    // corners (0,0)(1,0)(0,1)(1,1) then side centers (1,0)(1,1)(0,1)(1,1)
    CHECK(probe.features == std::vector<double>{1, 2, 3, 4, 2, 4, 3, 4});
  }
}

TEST_CASE("eight_pixel_probe rejects frames thinner than 2 pixels") {
  CHECK_THROWS_AS(eight_pixel_probe(make_image(1, 5, 1,
                                               std::vector<std::uint8_t>(5))),
                  InvalidArgument);
  CHECK_THROWS_AS(eight_pixel_probe(make_image(5, 1, 1,
                                               std::vector<std::uint8_t>(5))),
                  InvalidArgument);
  CHECK_NOTHROW(eight_pixel_probe(
      make_image(2, 2, 1, std::vector<std::uint8_t>(4))));
}

TEST_CASE("eight_pixel_probe ignores every non-probe pixel") {
  ImageRecord image = random_image(9, 7, 3, 11);
  const ProbeVector before = eight_pixel_probe(image);

  const auto coords = eight_pixel_coords(image.width, image.height);
  auto is_probe_pixel = [&](int x, int y) {
    return std::any_of(coords.begin(), coords.end(), [&](const auto& c) {
      return c.first == x && c.second == y;
    });
  };
  for (int y = 0; y < image.height; ++y) {
    for (int x = 0; x < image.width; ++x) {
      if (is_probe_pixel(x, y)) continue;
      for (int c = 0; c < 3; ++c) {
        image.at(x, y, c) = static_cast<std::uint8_t>(255 - image.at(x, y, c));
      }
    }
  }
  CHECK(eight_pixel_probe(image).features == before.features);
}

TEST_CASE("eight_pixel_probe is equivariant under 180-degree rotation") {
  // With odd dimensions every probe position maps onto another probe
  // position under rotation, so the features form the same multiset.
  const ImageRecord image = random_image(7, 5, 1, 3);
  ImageRecord rotated = image;
  for (int y = 0; y < image.height; ++y) {
    for (int x = 0; x < image.width; ++x) {
      rotated.at(x, y) = image.at(image.width - 1 - x, image.height - 1 - y);
    }
  }
  std::vector<double> a = eight_pixel_probe(image).features;
  std::vector<double> b = eight_pixel_probe(rotated).features;
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  CHECK(a == b);
}

TEST_CASE("blur_metric on closed-form images") {
  SUBCASE("constant image has zero response variance") {
    CHECK(blur_metric(make_image(16, 16, 1,
                                 std::vector<std::uint8_t>(256, 77))) == 0.0);
  }
  SUBCASE("4x4 checkerboard") {
    // Laplacian of a 0/255 checkerboard is +-1020 at every interior pixel
    // (interior of 4x4 = the 4 center pixels, alternating signs), so the
    // population variance is 1020^2 = 1040400.
    std::vector<std::uint8_t> pixels(16);
    for (int y = 0; y < 4; ++y) {
      for (int x = 0; x < 4; ++x) {
        pixels[y * 4 + x] = ((x + y) % 2 == 0) ? 0 : 255;
      }
    }
    CHECK(blur_metric(make_image(4, 4, 1, std::move(pixels))) ==
          doctest::Approx(1040400.0).epsilon(1e-12));
  }
  SUBCASE("grayscale metric is invariant under intensity offset") {
    ImageRecord image = random_image(12, 9, 1, 21);
    for (auto& p : image.pixels) {
      p = static_cast<std::uint8_t>(std::min(200, int{p}));
    }
    ImageRecord shifted = image;
    for (auto& p : shifted.pixels) {
      p = static_cast<std::uint8_t>(p + 40);
    }
    CHECK(blur_metric(shifted) ==
          doctest::Approx(blur_metric(image)).epsilon(1e-9));
  }
}

TEST_CASE("blur_metric uses the rec601 luma for RGB input") {
  // An RGB image whose channels all equal v has luma v, so the metric must
  // match the grayscale metric of the same plane.
  ImageRecord gray = random_image(10, 10, 1, 5);
  ImageRecord rgb = make_image(10, 10, 3, {});
  for (const std::uint8_t v : gray.pixels) {
    rgb.pixels.insert(rgb.pixels.end(), {v, v, v});
  }
  CHECK(blur_metric(rgb) == doctest::Approx(blur_metric(gray)).epsilon(1e-9));

  // A pure-red plane contributes through the 0.299 weight only.
  std::vector<std::uint8_t> red;
  for (int i = 0; i < 16; ++i) {
    red.insert(red.end(), {static_cast<std::uint8_t>(i % 2 ? 200 : 0), 0, 0});
  }
  const double red_metric = blur_metric(make_image(4, 4, 3, std::move(red)));
  std::vector<std::uint8_t> gray_scaled;
  for (int i = 0; i < 16; ++i) {
    gray_scaled.push_back(i % 2 ? 200 : 0);
  }
  const double gray_metric =
      blur_metric(make_image(4, 4, 1, std::move(gray_scaled)));
  CHECK(red_metric ==
        doctest::Approx(gray_metric * 0.299 * 0.299).epsilon(1e-9));
}

TEST_CASE("blur_metric needs a 3x3 interior") {
  CHECK_THROWS_AS(blur_metric(make_image(2, 5, 1,
                                         std::vector<std::uint8_t>(10))),
                  InvalidArgument);
  CHECK_THROWS_AS(blur_metric(make_image(5, 2, 1,
                                         std::vector<std::uint8_t>(10))),
                  InvalidArgument);
  CHECK_NOTHROW(blur_metric(make_image(3, 3, 1,
                                       std::vector<std::uint8_t>(9))));
}

TEST_CASE("box_blur matches the windowed-mean reference") {
  for (const int radius : {0, 1, 2, 5}) {
    for (const int channels : {1, 3}) {
      const ImageRecord image =
          random_image(13, 8, channels,
                       static_cast<std::uint64_t>(radius * 10 + channels));
      const ImageRecord fast = box_blur(image, radius);
      const ImageRecord slow = reference_box_blur(image, radius);
      CHECK(fast.pixels == slow.pixels);
      CHECK(fast.width == image.width);
      CHECK(fast.height == image.height);
      CHECK(fast.channels == image.channels);
    }
  }
}

TEST_CASE("box_blur special cases") {
  const ImageRecord image = random_image(9, 9, 1, 99);
  SUBCASE("radius 0 is the identity") {
    CHECK(box_blur(image, 0).pixels == image.pixels);
  }
  SUBCASE("negative radius is rejected") {
    CHECK_THROWS_AS(box_blur(image, -1), InvalidArgument);
  }
  SUBCASE("blurring strictly reduces checkerboard sharpness") {
    std::vector<std::uint8_t> pixels(64);
    for (int y = 0; y < 8; ++y) {
      for (int x = 0; x < 8; ++x) {
        pixels[y * 8 + x] = ((x + y) % 2 == 0) ? 0 : 255;
      }
    }
    const ImageRecord board = make_image(8, 8, 1, std::move(pixels));
    CHECK(blur_metric(box_blur(board, 1)) < blur_metric(board));
    CHECK(blur_metric(box_blur(board, 2)) < blur_metric(board));
  }
}

TEST_CASE("separate_background keeps exactly the masked-out pixels") {
  SUBCASE("2x2 worked example") {
    const ImageRecord original = make_image(2, 2, 1, {10, 20, 30, 40});
    const ImageRecord foreground = make_image(2, 2, 1, {0, 20, 0, 40});
    const ImageRecord background = separate_background(original, foreground);
    CHECK(background.pixels == std::vector<std::uint8_t>{10, 0, 30, 0});
  }
  SUBCASE("all-black foreground returns the original") {
    const ImageRecord original = random_image(6, 6, 3, 1);
    const ImageRecord foreground =
        make_image(6, 6, 3, std::vector<std::uint8_t>(6 * 6 * 3, 0));
    CHECK(separate_background(original, foreground).pixels == original.pixels);
  }
  SUBCASE("foreground with no black pixel blanks everything") {
    const ImageRecord original = random_image(6, 6, 1, 2);
    const ImageRecord foreground =
        make_image(6, 6, 1, std::vector<std::uint8_t>(36, 1));
    CHECK(separate_background(original, foreground).pixels ==
          std::vector<std::uint8_t>(36, 0));
  }
  SUBCASE("shape mismatch is rejected") {
    const ImageRecord original = random_image(6, 6, 1, 3);
    CHECK_THROWS_AS(separate_background(original, random_image(6, 5, 1, 3)),
                    InvalidArgument);
    CHECK_THROWS_AS(separate_background(original, random_image(6, 6, 3, 3)),
                    InvalidArgument);
  }
  SUBCASE("an RGB pixel is foreground unless all channels are zero") {
    const ImageRecord original = make_image(2, 1, 3, {9, 9, 9, 8, 8, 8});
    const ImageRecord foreground = make_image(2, 1, 3, {0, 0, 1, 0, 0, 0});
    CHECK(separate_background(original, foreground).pixels ==
          std::vector<std::uint8_t>{0, 0, 0, 8, 8, 8});
  }
  SUBCASE("foreground and background tile the original") {
    const ImageRecord original = random_image(16, 11, 3, 7);
    ImageRecord foreground = original;
    // Mask out an arbitrary region to act as "background" in the fg image.
    for (int y = 0; y < 11; ++y) {
      for (int x = 0; x < 16; ++x) {
        if ((x * 31 + y * 17) % 3 == 0) {
          for (int c = 0; c < 3; ++c) foreground.at(x, y, c) = 0;
        }
      }
    }
    const ImageRecord background = separate_background(original, foreground);
    for (std::size_t i = 0; i < original.pixels.size(); i += 3) {
      const bool fg_black = foreground.pixels[i] == 0 &&
                            foreground.pixels[i + 1] == 0 &&
                            foreground.pixels[i + 2] == 0;
      for (std::size_t c = 0; c < 3; ++c) {
        if (fg_black) {
          CHECK(background.pixels[i + c] == original.pixels[i + c]);
        } else {
          CHECK(background.pixels[i + c] == 0);
        }
      }
    }
  }
}

TEST_CASE("build_feature_matrix shapes and labels") {
  LabeledImageSet set;
  set.name = "shapes";
  for (int i = 0; i < 5; ++i) {
    ImageRecord r = random_image(8, 8, 1, static_cast<std::uint64_t>(i));
    r.label = (i < 2) ? "a" : "b";
    r.source_path = "img" + std::to_string(i);
    set.records.push_back(std::move(r));
  }
  set.class_index = {{"a", 0}, {"b", 1}};

  SUBCASE("eight-pixel probe emits 8 columns for grayscale") {
    const FeatureMatrix m = build_feature_matrix(set, ProbeKind::kEightPixel);
    CHECK(m.rows == 5);
    CHECK(m.cols == 8);
    CHECK(m.values.size() == 40);
    CHECK(m.labels == std::vector<int>{0, 0, 1, 1, 1});
    CHECK(m.n_classes == 2);
    CHECK(m.probe == ProbeKind::kEightPixel);
    const ProbeVector direct = eight_pixel_probe(set.records[3]);
    for (std::size_t j = 0; j < 8; ++j) {
      CHECK(m.at(3, j) == direct.features[j]);
    }
  }
  SUBCASE("blur probe emits a single column") {
    const FeatureMatrix m = build_feature_matrix(set, ProbeKind::kBlur);
    CHECK(m.rows == 5);
    CHECK(m.cols == 1);
    CHECK(m.at(2, 0) == blur_metric(set.records[2]));
  }
  SUBCASE("failures name the offending record") {
    set.records[3] = make_image(1, 4, 1, std::vector<std::uint8_t>(4));
    set.records[3].label = "b";
    set.records[3].source_path = "bad_one";
    for (const unsigned threads : {1u, 0u}) {
      CHECK_THROWS_WITH_AS(
          build_feature_matrix(set, ProbeKind::kEightPixel, threads),
          doctest::Contains("bad_one"), DataError);
      CHECK_THROWS_WITH_AS(
          build_feature_matrix(set, ProbeKind::kEightPixel, threads),
          doctest::Contains("record 3"), DataError);
    }
  }
  SUBCASE("mixed channel counts are rejected") {
    set.records[4] = random_image(8, 8, 3, 4);
    set.records[4].label = "b";
    CHECK_THROWS_WITH_AS(build_feature_matrix(set, ProbeKind::kEightPixel),
                         doctest::Contains("mixed"), DataError);
  }
  SUBCASE("empty set is rejected") {
    CHECK_THROWS_AS(build_feature_matrix(LabeledImageSet{},
                                         ProbeKind::kEightPixel),
                    InvalidArgument);
  }
}

TEST_CASE("write_probe_csv golden output") {
  LabeledImageSet set = singleton_set(gradient_image(4, 4));
  set.records[0].source_path = "data/a/img.png";

  std::ostringstream out;
  write_probe_csv(set, ProbeKind::kEightPixel, out);
  CHECK(out.str() ==
        "path,label,f0,f1,f2,f3,f4,f5,f6,f7\n"
        "data/a/img.png,a,0,30,3,33,20,23,2,32\n");

  std::ostringstream blur_out;
  write_probe_csv(set, ProbeKind::kBlur, blur_out);
  const std::string text = blur_out.str();
  CHECK(text.starts_with("path,label,f0\n"));
  CHECK(text.find("data/a/img.png,a,") != std::string::npos);
}
