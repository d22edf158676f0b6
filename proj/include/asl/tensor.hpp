#pragma once

#include <cstddef>
#include <initializer_list>
#include <sstream>
#include <string>
#include <type_traits>
#include <utility>
#include <vector>

#include "asl/errors.hpp"

namespace asl {

// Row-major dimension list. Every dim is >= 1; an empty list is the scalar
// shape with one element.
class Shape {
 public:
  Shape() = default;

  Shape(std::initializer_list<std::size_t> dims) : dims_(dims) { validate(); }

  explicit Shape(std::vector<std::size_t> dims) : dims_(std::move(dims)) {
    validate();
  }

  std::size_t rank() const { return dims_.size(); }

  std::size_t operator[](std::size_t i) const { return dims_[i]; }

  const std::vector<std::size_t>& dims() const { return dims_; }

  std::size_t elements() const {
    std::size_t n = 1;
    for (std::size_t d : dims_) n *= d;
    return n;
  }

  bool operator==(const Shape& other) const = default;

  std::string str() const {
    std::ostringstream os;
    os << '(';
    for (std::size_t i = 0; i < dims_.size(); ++i) {
      if (i) os << ", ";
      os << dims_[i];
    }
    os << ')';
    return os.str();
  }

 private:
  void validate() const {
    for (std::size_t d : dims_) {
      if (d == 0) raise(ErrorCode::Shape, "shape dims must be positive");
    }
  }

  std::vector<std::size_t> dims_;
};

// Dense n-dimensional array of floats, row-major. Immutable by convention
// once built: the free functions below return fresh tensors. Mutation
// through data() is reserved for code that exclusively owns the tensor
// (parameter updates, buffer fills).
template <typename T>
class Tensor {
  static_assert(std::is_floating_point_v<T>, "Tensor is float/double only");

 public:
  Tensor() = default;

  explicit Tensor(Shape shape, T fill = T(0))
      : shape_(std::move(shape)), data_(shape_.elements(), fill) {}

  Tensor(Shape shape, std::vector<T> data)
      : shape_(std::move(shape)), data_(std::move(data)) {
    if (data_.size() != shape_.elements()) {
      raise(ErrorCode::Shape,
            "data length " + std::to_string(data_.size()) +
                " does not match shape " + shape_.str());
    }
  }

  const Shape& shape() const { return shape_; }

  std::size_t size() const { return data_.size(); }

  T* data() { return data_.data(); }
  const T* data() const { return data_.data(); }

  T operator[](std::size_t i) const { return data_[i]; }
  T& operator[](std::size_t i) { return data_[i]; }

  // Row-major multi-index access; rank must match the index count.
  template <typename... Ix>
  T& at(Ix... ix) {
    return data_[offset(ix...)];
  }

  template <typename... Ix>
  T at(Ix... ix) const {
    return data_[offset(ix...)];
  }

  bool operator==(const Tensor& other) const = default;

 private:
  template <typename... Ix>
  std::size_t offset(Ix... ix) const {
    constexpr std::size_t n = sizeof...(Ix);
    if (n != shape_.rank()) {
      raise(ErrorCode::Shape, "index rank does not match tensor rank");
    }
    const std::size_t idx[n] = {static_cast<std::size_t>(ix)...};
    std::size_t off = 0;
    for (std::size_t d = 0; d < n; ++d) off = off * shape_[d] + idx[d];
    return off;
  }

  Shape shape_;
  std::vector<T> data_;
};

using TensorF = Tensor<float>;
using TensorD = Tensor<double>;

namespace detail {

// C(m x n) = op(A) * op(B) + beta * C over raw row-major buffers.
// op(A) is m x k and op(B) is k x n; a transposed operand is stored as the
// (k x m) / (n x k) row-major buffer. C must not alias A or B.
template <typename T>
void gemm(bool trans_a, bool trans_b, std::size_t m, std::size_t n,
          std::size_t k, const T* a, const T* b, T beta, T* c);

}  // namespace detail

template <typename T>
inline void require_same_shape(const Tensor<T>& a, const Tensor<T>& b,
                               const char* op) {
  if (a.shape() != b.shape()) {
    raise(ErrorCode::Shape, std::string(op) + ": shape mismatch " +
                                a.shape().str() + " vs " + b.shape().str());
  }
}

// Standard matrix product of two rank-2 tensors.
template <typename T>
Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b) {
  if (a.shape().rank() != 2 || b.shape().rank() != 2) {
    raise(ErrorCode::Shape, "matmul: operands must be rank-2");
  }
  if (a.shape()[1] != b.shape()[0]) {
    raise(ErrorCode::Shape, "matmul: inner dims differ, " + a.shape().str() +
                                " vs " + b.shape().str());
  }
  Tensor<T> c(Shape{a.shape()[0], b.shape()[1]});
  detail::gemm(false, false, a.shape()[0], b.shape()[1], a.shape()[1],
               a.data(), b.data(), T(0), c.data());
  return c;
}

template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b) {
  require_same_shape(a, b, "add");
  Tensor<T> out(a.shape());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] + b[i];
  return out;
}

template <typename T>
Tensor<T> sub(const Tensor<T>& a, const Tensor<T>& b) {
  require_same_shape(a, b, "sub");
  Tensor<T> out(a.shape());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] - b[i];
  return out;
}

template <typename T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b) {
  require_same_shape(a, b, "mul");
  Tensor<T> out(a.shape());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] * b[i];
  return out;
}

template <typename T>
Tensor<T> scale(const Tensor<T>& a, T s) {
  Tensor<T> out(a.shape());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] * s;
  return out;
}

template <typename T, typename F>
Tensor<T> map(const Tensor<T>& a, F f) {
  Tensor<T> out(a.shape());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = f(a[i]);
  return out;
}

// Same flat data under a new shape; element counts must agree.
template <typename T>
Tensor<T> reshape(const Tensor<T>& t, Shape new_shape) {
  if (new_shape.elements() != t.shape().elements()) {
    raise(ErrorCode::Shape, "reshape: element count mismatch, " +
                                t.shape().str() + " -> " + new_shape.str());
  }
  return Tensor<T>(std::move(new_shape),
                   std::vector<T>(t.data(), t.data() + t.size()));
}

}  // namespace asl
