#include <doctest.h>

#include <algorithm>
#include <bit>
#include <functional>
#include <map>
#include <vector>

#include "asl/dataset.hpp"
#include "asl/image.hpp"
#include "support/oracles.hpp"

using asl::RawImage;
using asl::Shape;
using asl::Tensor;

namespace {

std::vector<std::uint8_t> pnm_bytes(const std::string& header,
                                    const std::vector<std::uint8_t>& payload) {
  std::vector<std::uint8_t> bytes(header.begin(), header.end());
  bytes.insert(bytes.end(), payload.begin(), payload.end());
  return bytes;
}

RawImage gray(std::size_t side, std::uint8_t value) {
  RawImage img;
  img.width = img.height = side;
  img.channels = 1;
  img.pixels.assign(side * side, value);
  return img;
}

// Order-independent fingerprint of one sample (image bytes + class).
std::uint64_t sample_hash(const asl::Dataset<float>& d, std::size_t i) {
  std::uint64_t h = 1469598103934665603ull;
  auto mix = [&h](std::uint64_t v) {
    h ^= v;
    h *= 1099511628211ull;
  };
  const float* row = d.images.data() + i * 64 * 64;
  for (std::size_t j = 0; j < 64 * 64; ++j) {
    mix(std::bit_cast<std::uint32_t>(row[j]));
  }
  mix(d.class_of(i));
  return h;
}

std::vector<std::uint64_t> sorted_hashes(const asl::Dataset<float>& d) {
  std::vector<std::uint64_t> hs(d.size());
  for (std::size_t i = 0; i < d.size(); ++i) hs[i] = sample_hash(d, i);
  std::sort(hs.begin(), hs.end());
  return hs;
}

// n samples, classes assigned round-robin, each image filled with a unique
// value so hashes distinguish samples.
asl::Dataset<float> make_dataset(std::size_t n, std::size_t classes = 10) {
  asl::Dataset<float> d{Tensor<float>(Shape{n, 64, 64}),
                        Tensor<float>(Shape{n, classes})};
  for (std::size_t i = 0; i < n; ++i) {
    const float v = static_cast<float>(i % 251) / 255.0f;
    std::fill(d.images.data() + i * 64 * 64,
              d.images.data() + (i + 1) * 64 * 64, v);
    d.images[i * 64 * 64] = static_cast<float>(i) / 4096.0f;  // unique pixel
    d.labels.at(i, i % classes) = 1.0f;
  }
  return d;
}

}  // namespace

TEST_CASE("read_pnm handles P5 and P6") {
  const auto p5 = pnm_bytes("P5 2 2 255 ", {10, 20, 30, 40});
  const RawImage g = asl::read_pnm(p5);
  CHECK(g.width == 2);
  CHECK(g.height == 2);
  CHECK(g.channels == 1);
  CHECK(g.pixels == std::vector<std::uint8_t>{10, 20, 30, 40});

  const auto p6 = pnm_bytes("P6 1 1 255\n", {255, 0, 0});
  const RawImage c = asl::read_pnm(p6);
  CHECK(c.channels == 3);
  CHECK(c.pixels == std::vector<std::uint8_t>{255, 0, 0});

  const auto commented = pnm_bytes("P5\n# a comment\n2 1 255\n", {7, 8});
  CHECK(asl::read_pnm(commented).pixels == std::vector<std::uint8_t>{7, 8});
}

TEST_CASE("read_pnm rejections") {
  CHECK_THROWS_AS(asl::read_pnm(pnm_bytes("P4 2 2 255 ", {0})), asl::Error);
  CHECK_THROWS_AS(asl::read_pnm(pnm_bytes("GIF89a", {})), asl::Error);
  CHECK_THROWS_AS(asl::read_pnm(pnm_bytes("P5 2 2 65535 ", {0, 0, 0, 0})),
                  asl::Error);
  CHECK_THROWS_AS(asl::read_pnm(pnm_bytes("P5 2 2 255 ", {1, 2, 3})),
                  asl::Error);
}

TEST_CASE("to_grayscale uses BT.601 weights") {
  RawImage rgb;
  rgb.width = rgb.height = 1;
  rgb.channels = 3;

  rgb.pixels = {255, 255, 255};
  CHECK(asl::to_grayscale(rgb).pixels[0] == 255);
  rgb.pixels = {0, 0, 0};
  CHECK(asl::to_grayscale(rgb).pixels[0] == 0);
  rgb.pixels = {255, 0, 0};
  CHECK(asl::to_grayscale(rgb).pixels[0] == 76);  // round(0.299 * 255)
  rgb.pixels = {0, 255, 0};
  CHECK(asl::to_grayscale(rgb).pixels[0] == 150);  // round(0.587 * 255)

  CHECK_THROWS_AS(asl::to_grayscale(gray(2, 0)), asl::Error);
}

TEST_CASE("resize identity and box averaging") {
  const RawImage id = gray(64, 93);
  CHECK(asl::resize(id, 64).pixels == id.pixels);

  CHECK(asl::resize(gray(128, 77), 64).pixels ==
        std::vector<std::uint8_t>(64 * 64, 77));

  // Pixel-scale checkerboard averages to 127.5 per 2x2 box; lround gives 128.
  RawImage checker = gray(128, 0);
  for (std::size_t y = 0; y < 128; ++y) {
    for (std::size_t x = 0; x < 128; ++x) {
      checker.pixels[y * 128 + x] = ((x + y) % 2 == 0) ? 0 : 255;
    }
  }
  CHECK(asl::resize(checker, 64).pixels ==
        std::vector<std::uint8_t>(64 * 64, 128));
}

TEST_CASE("resize bilinear path and input validation") {
  // 96 is not a multiple of 64, so box centers are sampled bilinearly.
  CHECK(asl::resize(gray(96, 200), 64).pixels ==
        std::vector<std::uint8_t>(64 * 64, 200));

  RawImage rect = gray(64, 0);
  rect.width = 32;
  rect.pixels.resize(32 * 64);
  CHECK_THROWS_AS(asl::resize(rect, 64), asl::Error);
  CHECK_THROWS_AS(asl::resize(gray(32, 0), 64), asl::Error);

  RawImage rgb = gray(64, 0);
  rgb.channels = 3;
  rgb.pixels.resize(64 * 64 * 3);
  CHECK_THROWS_AS(asl::resize(rgb, 64), asl::Error);
}

TEST_CASE("normalize maps bytes to [0, 1] exactly and monotonically") {
  RawImage img = gray(64, 0);
  for (std::size_t i = 0; i < 256; ++i) {
    img.pixels[i] = static_cast<std::uint8_t>(i);
  }
  const Tensor<float> t = asl::normalize<float>(img);
  CHECK(t.shape() == Shape{64, 64});
  CHECK(t[0] == 0.0f);
  CHECK(t[255] == 1.0f);
  CHECK(t[51] == doctest::Approx(0.2));
  for (std::size_t i = 1; i < 256; ++i) {
    CHECK(t[i] > t[i - 1]);
    CHECK(t[i] * 255.0f == float(i));  // exact round trip
  }
}

TEST_CASE("one_hot") {
  const Tensor<float> e0 = asl::one_hot<float>(0);
  CHECK(e0.shape() == Shape{10});
  CHECK(e0[0] == 1.0f);
  for (std::size_t k = 1; k < 10; ++k) CHECK(e0[k] == 0.0f);

  const Tensor<float> e9 = asl::one_hot<float>(9);
  CHECK(e9[9] == 1.0f);

  double sum = 0;
  for (long long label = 0; label < 10; ++label) {
    const auto v = asl::one_hot<double>(label);
    sum = 0;
    for (std::size_t k = 0; k < 10; ++k) sum += v[k];
    CHECK(sum == 1.0);
  }

  CHECK_THROWS_AS(asl::one_hot<float>(10), asl::Error);
  CHECK_THROWS_AS(asl::one_hot<float>(-1), asl::Error);
}

TEST_CASE("stratified split: counts, determinism, partition") {
  const auto d = make_dataset(100);
  auto [train, test] = asl::stratified_split(d, 0.2, 42);
  CHECK(test.size() == 20);
  CHECK(train.size() == 80);

  std::map<std::size_t, std::size_t> histogram;
  for (std::size_t i = 0; i < test.size(); ++i) ++histogram[test.class_of(i)];
  for (std::size_t k = 0; k < 10; ++k) CHECK(histogram[k] == 2);

  // Same seed, same split, bitwise.
  auto [train2, test2] = asl::stratified_split(d, 0.2, 42);
  CHECK(train2.images == train.images);
  CHECK(test2.labels == test.labels);

  // Partition: train and test together are exactly the input multiset.
  auto all = sorted_hashes(train);
  const auto test_hashes = sorted_hashes(test);
  all.insert(all.end(), test_hashes.begin(), test_hashes.end());
  std::sort(all.begin(), all.end());
  CHECK(all == sorted_hashes(d));
}

TEST_CASE("stratified split histogram is uniform for many seeds") {
  const auto d = make_dataset(103);  // unbalanced remainder
  for (std::uint64_t seed = 0; seed < 25; ++seed) {
    auto [train, test] = asl::stratified_split(d, 0.2, seed);
    CHECK(train.size() + test.size() == d.size());
    std::map<std::size_t, std::size_t> histogram;
    for (std::size_t i = 0; i < test.size(); ++i) {
      ++histogram[test.class_of(i)];
    }
    for (std::size_t k = 0; k < 10; ++k) CHECK(histogram[k] == 2);
  }
}

TEST_CASE("stratified split rejects undersized classes") {
  // 10 classes, one sample each: t = floor(0.2 * 10 / 10) = 0 works,
  // but a 0.5 fraction demanding 1 every class is fine while 12 samples
  // needing 2 in a 1-sample class must fail.
  auto d = make_dataset(12);  // classes 0 and 1 have 2 samples, rest 1
  CHECK_THROWS_AS(asl::stratified_split(d, 0.9, 1), asl::Error);
}
