#pragma once

#include <cstdint>
#include <vector>

#include "asl/errors.hpp"
#include "asl/tensor.hpp"

namespace asl {

// 8-bit image, row-major with interleaved channels.
struct RawImage {
  std::size_t width = 0;
  std::size_t height = 0;
  std::size_t channels = 1;
  std::vector<std::uint8_t> pixels;
};

// Binary PGM (P5) / PPM (P6), maxval 255.
RawImage read_pnm(const std::vector<std::uint8_t>& bytes);

// BT.601 luma: round(0.299 R + 0.587 G + 0.114 B).
RawImage to_grayscale(const RawImage& img);

// Square single-channel source down to target x target. Integer ratios use
// exact box averaging; otherwise bilinear sampling at box centers.
RawImage resize(const RawImage& img, std::size_t target);

// Pixel value v -> v / 255.
template <typename T>
Tensor<T> normalize(const RawImage& img) {
  if (img.channels != 1) {
    raise(ErrorCode::Input, "normalize expects a single-channel image");
  }
  Tensor<T> out(Shape{img.height, img.width});
  for (std::size_t i = 0; i < img.pixels.size(); ++i) {
    out[i] = static_cast<T>(img.pixels[i]) / T(255);
  }
  return out;
}

}  // namespace asl
