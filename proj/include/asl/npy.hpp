#pragma once

#include <bit>
#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "asl/dataset.hpp"
#include "asl/errors.hpp"
#include "asl/tensor.hpp"

namespace asl::npy {

enum class Dtype { F4, F8, U1 };

inline const char* dtype_descr(Dtype d) {
  switch (d) {
    case Dtype::F4: return "<f4";
    case Dtype::F8: return "<f8";
    case Dtype::U1: return "|u1";
  }
  return "";
}

inline std::size_t dtype_itemsize(Dtype d) {
  return d == Dtype::F8 ? 8 : d == Dtype::F4 ? 4 : 1;
}

struct Header {
  int version_major = 1;
  int version_minor = 0;
  std::string descr;
  bool fortran_order = false;
  Shape shape;
  Dtype dtype = Dtype::F4;
};

// Parses the magic, version, length field and header dict; sets
// payload_offset to the first payload byte.
Header parse_header(const std::vector<std::uint8_t>& bytes,
                    std::size_t& payload_offset);

// Canonical v1.0 header block: magic, 0x01 0x00, little-endian length,
// "{'descr': ..., 'fortran_order': False, 'shape': ..., }" space-padded so
// the whole block is a multiple of 16 bytes, terminated by '\n'.
std::vector<std::uint8_t> serialize_header(const std::string& descr,
                                           const Shape& shape);

template <typename T>
std::pair<Header, Tensor<T>> parse(const std::vector<std::uint8_t>& bytes) {
  std::size_t offset = 0;
  Header header = parse_header(bytes, offset);
  const std::size_t count = header.shape.elements();
  const std::size_t item = dtype_itemsize(header.dtype);
  if (bytes.size() - offset != count * item) {
    raise(ErrorCode::Truncation,
          "payload is " + std::to_string(bytes.size() - offset) +
              " bytes, header implies " + std::to_string(count * item));
  }
  Tensor<T> t(header.shape);
  const std::uint8_t* p = bytes.data() + offset;
  switch (header.dtype) {
    case Dtype::F4:
      for (std::size_t i = 0; i < count; ++i, p += 4) {
        const std::uint32_t u = static_cast<std::uint32_t>(p[0]) |
                                static_cast<std::uint32_t>(p[1]) << 8 |
                                static_cast<std::uint32_t>(p[2]) << 16 |
                                static_cast<std::uint32_t>(p[3]) << 24;
        t[i] = static_cast<T>(std::bit_cast<float>(u));
      }
      break;
    case Dtype::F8:
      for (std::size_t i = 0; i < count; ++i, p += 8) {
        std::uint64_t u = 0;
        for (int b = 7; b >= 0; --b) u = u << 8 | p[b];
        t[i] = static_cast<T>(std::bit_cast<double>(u));
      }
      break;
    case Dtype::U1:
      for (std::size_t i = 0; i < count; ++i, ++p) {
        t[i] = static_cast<T>(*p);
      }
      break;
  }
  return {std::move(header), std::move(t)};
}

template <typename T>
std::vector<std::uint8_t> write(const Tensor<T>& t, Dtype dtype) {
  if (dtype == Dtype::U1) {
    raise(ErrorCode::UnsupportedDtype, "write supports <f4 and <f8 only");
  }
  std::vector<std::uint8_t> out =
      serialize_header(dtype_descr(dtype), t.shape());
  const std::size_t count = t.size();
  out.reserve(out.size() + count * dtype_itemsize(dtype));
  if (dtype == Dtype::F4) {
    for (std::size_t i = 0; i < count; ++i) {
      const auto u = std::bit_cast<std::uint32_t>(static_cast<float>(t[i]));
      for (int b = 0; b < 4; ++b) out.push_back((u >> (8 * b)) & 0xff);
    }
  } else {
    for (std::size_t i = 0; i < count; ++i) {
      const auto u = std::bit_cast<std::uint64_t>(static_cast<double>(t[i]));
      for (int b = 0; b < 8; ++b) out.push_back((u >> (8 * b)) & 0xff);
    }
  }
  return out;
}

std::vector<std::uint8_t> read_bytes(const std::filesystem::path& path);
void write_bytes(const std::filesystem::path& path,
                 const std::vector<std::uint8_t>& bytes);

template <typename T>
Tensor<T> read_file(const std::filesystem::path& path) {
  return parse<T>(read_bytes(path)).second;
}

template <typename T>
void write_file(const std::filesystem::path& path, const Tensor<T>& t,
                Dtype dtype) {
  write_bytes(path, write(t, dtype));
}

// Validated dataset ingestion: X must be (N, 64, 64) or (N, 64, 64, 1) with
// values in [0, 1]; Y must be (N, 10) with exactly one-hot rows.
template <typename T>
Dataset<T> load_dataset(const std::vector<std::uint8_t>& x_bytes,
                        const std::vector<std::uint8_t>& y_bytes) {
  auto [hx, images] = parse<T>(x_bytes);
  auto [hy, labels] = parse<T>(y_bytes);

  const Shape& xs = images.shape();
  const bool rank3 = xs.rank() == 3;
  const bool rank4 = xs.rank() == 4 && xs[3] == 1;
  if (!(rank3 || rank4) || xs[1] != 64 || xs[2] != 64) {
    raise(ErrorCode::Shape,
          "X must be (N, 64, 64) or (N, 64, 64, 1), got " + xs.str());
  }
  if (rank4) {
    images = reshape(images, Shape{xs[0], std::size_t(64), std::size_t(64)});
  }
  if (labels.shape().rank() != 2 || labels.shape()[1] != 10) {
    raise(ErrorCode::Shape,
          "Y must be (N, 10), got " + labels.shape().str());
  }
  const std::size_t n = images.shape()[0];
  if (labels.shape()[0] != n) {
    raise(ErrorCode::Pairing,
          "X has " + std::to_string(n) + " samples but Y has " +
              std::to_string(labels.shape()[0]));
  }

  constexpr double tol = 1e-6;
  for (std::size_t i = 0; i < images.size(); ++i) {
    const double v = static_cast<double>(images[i]);
    if (!(v >= -tol && v <= 1.0 + tol)) {
      raise(ErrorCode::Normalization,
            "X value " + std::to_string(v) + " outside [0, 1]");
    }
    if (v < 0) images[i] = T(0);
    if (v > 1) images[i] = T(1);
  }
  for (std::size_t r = 0; r < n; ++r) {
    int ones = 0;
    for (std::size_t k = 0; k < 10; ++k) {
      const T v = labels[r * 10 + k];
      if (v == T(1)) {
        ++ones;
      } else if (v != T(0)) {
        raise(ErrorCode::Label,
              "Y row " + std::to_string(r) + " is not one-hot");
      }
    }
    if (ones != 1) {
      raise(ErrorCode::Label,
            "Y row " + std::to_string(r) + " is not one-hot");
    }
  }
  return Dataset<T>{std::move(images), std::move(labels)};
}

}  // namespace asl::npy
