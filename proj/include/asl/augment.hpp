#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "asl/dataset.hpp"
#include "asl/errors.hpp"
#include "asl/rng.hpp"
#include "asl/tensor.hpp"

namespace asl {

// Rotation angles are capped at 15 degrees: larger rotations can change the
// meaning of a sign. Noise stays small enough to keep the image readable.
struct AugmentConfig {
  std::vector<double> rotation_degrees{-10.0, -5.0, 5.0, 10.0};
  double noise_sigma = 0.05;
  std::size_t noise_copies = 1;
  std::uint64_t seed = 0;

  void validate() const {
    for (double a : rotation_degrees) {
      if (std::abs(a) > 15.0) {
        raise(ErrorCode::Parameter,
              "rotation angle " + std::to_string(a) + " exceeds 15 degrees");
      }
    }
    if (!(noise_sigma >= 0.0 && noise_sigma <= 0.2)) {
      raise(ErrorCode::Parameter, "noise_sigma must be in [0, 0.2]");
    }
  }
};

// Inverse-mapping rotation about the image center ((H-1)/2, (W-1)/2) with
// bilinear interpolation; samples outside the source are filled with 1.0,
// the dataset's white background.
template <typename T>
Tensor<T> rotate(const Tensor<T>& img, double degrees) {
  if (img.shape().rank() != 2) {
    raise(ErrorCode::Shape, "rotate expects a (H, W) image");
  }
  if (degrees == 0.0) return img;
  const std::size_t h = img.shape()[0];
  const std::size_t w = img.shape()[1];
  const double cy = (static_cast<double>(h) - 1.0) / 2.0;
  const double cx = (static_cast<double>(w) - 1.0) / 2.0;
  const double rad = degrees * 3.14159265358979323846 / 180.0;
  const double c = std::cos(rad);
  const double s = std::sin(rad);

  Tensor<T> out(img.shape());
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      const double dy = static_cast<double>(y) - cy;
      const double dx = static_cast<double>(x) - cx;
      const double sy = cy + c * dy - s * dx;
      const double sx = cx + s * dy + c * dx;
      T v;
      if (sy < 0.0 || sy > static_cast<double>(h - 1) || sx < 0.0 ||
          sx > static_cast<double>(w - 1)) {
        v = T(1);
      } else {
        const auto y0 = static_cast<std::size_t>(sy);
        const auto x0 = static_cast<std::size_t>(sx);
        const std::size_t y1 = (y0 + 1 < h) ? y0 + 1 : y0;
        const std::size_t x1 = (x0 + 1 < w) ? x0 + 1 : x0;
        const double fy = sy - static_cast<double>(y0);
        const double fx = sx - static_cast<double>(x0);
        const double v00 = img.at(y0, x0);
        const double v01 = img.at(y0, x1);
        const double v10 = img.at(y1, x0);
        const double v11 = img.at(y1, x1);
        v = static_cast<T>((1 - fy) * ((1 - fx) * v00 + fx * v01) +
                           fy * ((1 - fx) * v10 + fx * v11));
      }
      out.at(y, x) = v;
    }
  }
  return out;
}

// i.i.d. Gaussian noise per pixel, clamped back to [0, 1].
template <typename T>
Tensor<T> add_noise(const Tensor<T>& img, double sigma, std::uint64_t seed) {
  if (sigma < 0.0) {
    raise(ErrorCode::Parameter, "noise sigma must be non-negative");
  }
  if (sigma == 0.0) return img;
  Rng rng(seed);
  Tensor<T> out(img.shape());
  for (std::size_t i = 0; i < img.size(); ++i) {
    double v = static_cast<double>(img[i]) + sigma * rng.normal();
    if (v < 0.0) v = 0.0;
    if (v > 1.0) v = 1.0;
    out[i] = static_cast<T>(v);
  }
  return out;
}

// Expansion of a training set: the originals, one rotated copy per angle,
// and noise_copies noisy copies. Labels are carried over unchanged. Output
// size is N * (1 + |angles| + noise_copies). Noise seeds derive from the
// per-image index, so per-image parallelism cannot change the result.
template <typename T>
Dataset<T> augment_dataset(const Dataset<T>& train, const AugmentConfig& cfg) {
  cfg.validate();
  const std::size_t n = train.size();
  const std::size_t groups = 1 + cfg.rotation_degrees.size() + cfg.noise_copies;
  const std::size_t total = n * groups;
  const std::size_t img_row = 64 * 64;
  const std::size_t lab_row = train.num_classes();

  Dataset<T> out{Tensor<T>(Shape{total, std::size_t(64), std::size_t(64)}),
                 Tensor<T>(Shape{total, lab_row})};

  auto copy_label = [&](std::size_t dst, std::size_t src) {
    std::copy(train.labels.data() + src * lab_row,
              train.labels.data() + (src + 1) * lab_row,
              out.labels.data() + dst * lab_row);
  };
  auto image_of = [&](std::size_t i) {
    return Tensor<T>(Shape{std::size_t(64), std::size_t(64)},
                     std::vector<T>(train.images.data() + i * img_row,
                                    train.images.data() + (i + 1) * img_row));
  };
  auto store = [&](std::size_t dst, const Tensor<T>& img) {
    std::copy(img.data(), img.data() + img_row,
              out.images.data() + dst * img_row);
  };

  std::copy(train.images.data(), train.images.data() + n * img_row,
            out.images.data());
  for (std::size_t i = 0; i < n; ++i) copy_label(i, i);

  std::size_t base = n;
  for (double angle : cfg.rotation_degrees) {
#pragma omp parallel for schedule(static)
    for (long long li = 0; li < static_cast<long long>(n); ++li) {
      const auto i = static_cast<std::size_t>(li);
      store(base + i, rotate(image_of(i), angle));
    }
    for (std::size_t i = 0; i < n; ++i) copy_label(base + i, i);
    base += n;
  }

  for (std::size_t copy = 0; copy < cfg.noise_copies; ++copy) {
#pragma omp parallel for schedule(static)
    for (long long li = 0; li < static_cast<long long>(n); ++li) {
      const auto i = static_cast<std::size_t>(li);
      const std::uint64_t noise_index = copy * n + i;
      store(base + i,
            add_noise(image_of(i), cfg.noise_sigma, cfg.seed ^ noise_index));
    }
    for (std::size_t i = 0; i < n; ++i) copy_label(base + i, i);
    base += n;
  }
  return out;
}

}  // namespace asl
