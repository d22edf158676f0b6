#include <doctest.h>

#include <cstring>
#include <vector>

#include "asl/npy.hpp"
#include "support/oracles.hpp"
#include "support/testutil.hpp"

using asl::Shape;
using asl::Tensor;
namespace npy = asl::npy;

namespace {

std::vector<std::uint8_t> fixture(const std::string& name) {
  return npy::read_bytes(testutil::fixtures_dir() / name);
}

asl::ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const asl::Error& e) {
    return e.code();
  }
  FAIL("expected an asl::Error");
  return asl::ErrorCode::Io;
}

}  // namespace

TEST_CASE("reference-written f8 vector parses byte-exactly") {
  const auto bytes = fixture("f8_vec.npy");
  auto [header, t] = npy::parse<double>(bytes);
  CHECK(header.version_major == 1);
  CHECK(header.descr == "<f8");
  CHECK_FALSE(header.fortran_order);
  CHECK(t.shape() == Shape{2});
  CHECK(t[0] == 1.0);
  CHECK(t[1] == 2.0);
}

TEST_CASE("reference-written fixtures load with correct shape and values") {
  auto [h4, mat] = npy::parse<float>(fixture("f4_mat.npy"));
  CHECK(mat.shape() == Shape{3, 4});
  for (std::size_t i = 0; i < 12; ++i) CHECK(mat[i] == float(i));

  auto [hu, img] = npy::parse<float>(fixture("u1_img.npy"));
  CHECK(hu.descr == "|u1");
  CHECK(img.shape() == Shape{2, 3});
  CHECK(img[0] == 0.0f);
  CHECK(img[1] == 7.0f);
  CHECK(img[2] == 255.0f);
  CHECK(img[3] == 128.0f);

  auto [h4d, t4] = npy::parse<double>(fixture("f8_4d.npy"));
  CHECK(t4.shape() == Shape{2, 3, 4, 5});
  for (std::size_t i = 0; i < t4.size(); ++i) {
    CHECK(t4[i] >= 0.0);
    CHECK(t4[i] < 1.0);
  }
}

TEST_CASE("version 2.0 headers are accepted on read") {
  auto [h, t] = npy::parse<float>(fixture("f4_big_header.npy"));
  CHECK(h.version_major == 2);
  CHECK(t.shape() == Shape{2, 2});
  for (std::size_t i = 0; i < 4; ++i) CHECK(t[i] == 1.0f);
}

TEST_CASE("rejections: magic, layout, dtype, truncation, version") {
  auto bad_magic = fixture("f8_vec.npy");
  bad_magic[0] = 0x00;
  CHECK(code_of([&] { npy::parse<double>(bad_magic); }) ==
        asl::ErrorCode::Format);

  CHECK(code_of([&] { npy::parse<double>(fixture("f8_fortran.npy")); }) ==
        asl::ErrorCode::UnsupportedLayout);

  CHECK(code_of([&] { npy::parse<double>(fixture("i4_unsupported.npy")); }) ==
        asl::ErrorCode::UnsupportedDtype);

  auto truncated = fixture("f8_vec.npy");
  truncated.pop_back();
  CHECK(code_of([&] { npy::parse<double>(truncated); }) ==
        asl::ErrorCode::Truncation);
  auto padded = fixture("f8_vec.npy");
  padded.push_back(0);
  CHECK(code_of([&] { npy::parse<double>(padded); }) ==
        asl::ErrorCode::Truncation);

  auto bad_version = fixture("f8_vec.npy");
  bad_version[6] = 3;
  CHECK(code_of([&] { npy::parse<double>(bad_version); }) ==
        asl::ErrorCode::Format);
}

TEST_CASE("write then parse round-trips bitwise for random tensors") {
  asl::Rng rng(99);
  const std::vector<Shape> shapes = {Shape{7}, Shape{3, 5}, Shape{2, 3, 4},
                                     Shape{2, 2, 3, 2}};
  for (const Shape& s : shapes) {
    const auto td = oracle::random_tensor<double>(s, rng, -100.0, 100.0);
    auto [hd, back_d] = npy::parse<double>(npy::write(td, npy::Dtype::F8));
    CHECK(back_d == td);
    CHECK(hd.shape == s);

    const auto tf = oracle::random_tensor<float>(s, rng, -100.0, 100.0);
    auto [hf, back_f] = npy::parse<float>(npy::write(tf, npy::Dtype::F4));
    CHECK(back_f == tf);
  }
}

TEST_CASE("written header block is canonical") {
  const Tensor<double> t(Shape{1}, {0.0});
  const auto bytes = npy::write(t, npy::Dtype::F8);
  // 80-byte header block plus one f8 payload value.
  CHECK(bytes.size() == 88);
  const std::string dict(bytes.begin() + 10, bytes.end() - 8);
  CHECK(dict.substr(0, 57) ==
        "{'descr': '<f8', 'fortran_order': False, 'shape': (1,), }");

  // Re-serializing a parsed file reproduces it byte for byte.
  asl::Rng rng(5);
  const auto t2 = oracle::random_tensor<float>(Shape{4, 6}, rng);
  const auto first = npy::write(t2, npy::Dtype::F4);
  auto [h, parsed] = npy::parse<float>(first);
  const auto second = npy::write(parsed, npy::Dtype::F4);
  CHECK(first == second);
}

TEST_CASE("header block length is a multiple of 16 for every written file") {
  asl::Rng rng(17);
  for (int trial = 0; trial < 30; ++trial) {
    std::vector<std::size_t> dims(1 + rng.below(4));
    for (auto& d : dims) d = 1 + rng.below(9);
    const auto t = oracle::random_tensor<float>(Shape(dims), rng);
    const auto bytes = npy::write(t, npy::Dtype::F4);
    const std::size_t header_len = bytes[8] | std::size_t(bytes[9]) << 8;
    CHECK((10 + header_len) % 16 == 0);
    // Payload starts right after the padded dict.
    CHECK(bytes.size() == 10 + header_len + t.size() * 4);
  }
}

TEST_CASE("load_dataset validates shapes, pairing, range and labels") {
  const std::size_t n = 5;
  Tensor<float> x(Shape{n, 64, 64}, 0.5f);
  Tensor<float> y(Shape{n, 10});
  for (std::size_t i = 0; i < n; ++i) y.at(i, i % 10) = 1.0f;

  const auto xb = npy::write(x, npy::Dtype::F4);
  const auto yb = npy::write(y, npy::Dtype::F4);
  const auto ds = npy::load_dataset<float>(xb, yb);
  CHECK(ds.size() == n);
  CHECK(ds.class_of(3) == 3);

  // Rank-4 (N, 64, 64, 1) is squeezed.
  const auto xb4 = npy::write(asl::reshape(x, Shape{n, 64, 64, 1}),
                              npy::Dtype::F4);
  CHECK(npy::load_dataset<float>(xb4, yb).images.shape() == Shape{n, 64, 64});

  // Pairing error.
  Tensor<float> y4(Shape{4, 10});
  for (std::size_t i = 0; i < 4; ++i) y4.at(i, i) = 1.0f;
  CHECK(code_of([&] {
          npy::load_dataset<float>(xb, npy::write(y4, npy::Dtype::F4));
        }) == asl::ErrorCode::Pairing);

  // Label error: a 0.5/0.5 row is not one-hot.
  Tensor<float> ybad = y;
  ybad.at(0, 0) = 0.5f;
  ybad.at(0, 1) = 0.5f;
  CHECK(code_of([&] {
          npy::load_dataset<float>(xb, npy::write(ybad, npy::Dtype::F4));
        }) == asl::ErrorCode::Label);

  // Normalization error: a value outside [0, 1].
  Tensor<float> xbad = x;
  xbad[0] = 1.5f;
  CHECK(code_of([&] {
          npy::load_dataset<float>(npy::write(xbad, npy::Dtype::F4), yb);
        }) == asl::ErrorCode::Normalization);

  // Wrong spatial size.
  Tensor<float> xsmall(Shape{n, 32, 32}, 0.1f);
  CHECK(code_of([&] {
          npy::load_dataset<float>(npy::write(xsmall, npy::Dtype::F4), yb);
        }) == asl::ErrorCode::Shape);
}
