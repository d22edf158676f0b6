#pragma once

#include <cmath>
#include <cstdint>
#include <utility>
#include <vector>

#include "asl/errors.hpp"
#include "asl/rng.hpp"
#include "asl/tensor.hpp"

namespace asl {

// Paired samples and one-hot labels. Invariants: images (N, 64, 64) with
// values in [0, 1]; labels (N, 10) with exactly one 1.0 per row.
template <typename T>
struct Dataset {
  Tensor<T> images;
  Tensor<T> labels;

  std::size_t size() const {
    return images.shape().rank() ? images.shape()[0] : 0;
  }

  std::size_t num_classes() const { return labels.shape()[1]; }

  std::size_t class_of(std::size_t i) const {
    const std::size_t c = num_classes();
    const T* row = labels.data() + i * c;
    std::size_t best = 0;
    for (std::size_t k = 1; k < c; ++k) {
      if (row[k] > row[best]) best = k;
    }
    return best;
  }

  Dataset<T> gather(const std::vector<std::size_t>& indices) const {
    const std::size_t img_row = images.size() / size();
    const std::size_t lab_row = labels.size() / size();
    std::vector<std::size_t> img_dims = images.shape().dims();
    std::vector<std::size_t> lab_dims = labels.shape().dims();
    img_dims[0] = indices.size();
    lab_dims[0] = indices.size();
    Dataset<T> out{Tensor<T>(Shape(img_dims)), Tensor<T>(Shape(lab_dims))};
    for (std::size_t i = 0; i < indices.size(); ++i) {
      const std::size_t s = indices[i];
      std::copy(images.data() + s * img_row, images.data() + (s + 1) * img_row,
                out.images.data() + i * img_row);
      std::copy(labels.data() + s * lab_row, labels.data() + (s + 1) * lab_row,
                out.labels.data() + i * lab_row);
    }
    return out;
  }
};

using DatasetF = Dataset<float>;
using DatasetD = Dataset<double>;

// Length-num_classes vector with a single 1.0 at the label index.
template <typename T>
Tensor<T> one_hot(long long label, std::size_t num_classes = 10) {
  if (label < 0 || static_cast<std::size_t>(label) >= num_classes) {
    raise(ErrorCode::Label, "label " + std::to_string(label) +
                                " outside [0, " + std::to_string(num_classes) +
                                ")");
  }
  Tensor<T> v(Shape{num_classes});
  v[static_cast<std::size_t>(label)] = T(1);
  return v;
}

// Test side gets exactly floor(test_fraction * N / C) samples per class,
// picked by seeded sampling without replacement; train is the complement.
// Both halves keep the original dataset order.
template <typename T>
std::pair<Dataset<T>, Dataset<T>> stratified_split(const Dataset<T>& d,
                                                   double test_fraction,
                                                   std::uint64_t seed) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
    raise(ErrorCode::Split, "test_fraction must be in (0, 1)");
  }
  const std::size_t n = d.size();
  const std::size_t c = d.num_classes();
  // The nudge keeps mathematically integral values integral; 0.2 * 100 / 10
  // lands a hair above 2.0 in binary floating point.
  const double exact = test_fraction * static_cast<double>(n) /
                       static_cast<double>(c);
  const auto per_class =
      static_cast<std::size_t>(std::floor(exact + 1e-9));
  const auto needed = static_cast<std::size_t>(std::ceil(exact - 1e-9));

  std::vector<std::vector<std::size_t>> by_class(c);
  for (std::size_t i = 0; i < n; ++i) by_class[d.class_of(i)].push_back(i);
  for (std::size_t k = 0; k < c; ++k) {
    if (by_class[k].size() < needed) {
      raise(ErrorCode::Split, "class " + std::to_string(k) + " has only " +
                                  std::to_string(by_class[k].size()) +
                                  " samples, need " + std::to_string(needed));
    }
  }

  Rng rng(seed);
  std::vector<bool> in_test(n, false);
  for (std::size_t k = 0; k < c; ++k) {
    rng.shuffle(by_class[k].begin(), by_class[k].end());
    for (std::size_t j = 0; j < per_class; ++j) in_test[by_class[k][j]] = true;
  }

  std::vector<std::size_t> train_idx, test_idx;
  train_idx.reserve(n - per_class * c);
  test_idx.reserve(per_class * c);
  for (std::size_t i = 0; i < n; ++i) {
    (in_test[i] ? test_idx : train_idx).push_back(i);
  }
  return {d.gather(train_idx), d.gather(test_idx)};
}

}  // namespace asl
