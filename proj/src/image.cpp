#include "asl/image.hpp"

#include <cctype>
#include <cmath>
#include <string>

namespace asl {

namespace {

// Reads the next whitespace-delimited token, skipping '#' comment lines.
std::string next_token(const std::vector<std::uint8_t>& bytes,
                       std::size_t& pos) {
  while (pos < bytes.size()) {
    const char ch = static_cast<char>(bytes[pos]);
    if (ch == '#') {
      while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
    } else if (std::isspace(static_cast<unsigned char>(ch))) {
      ++pos;
    } else {
      break;
    }
  }
  std::string tok;
  while (pos < bytes.size() &&
         !std::isspace(static_cast<unsigned char>(bytes[pos])) &&
         bytes[pos] != '#') {
    tok.push_back(static_cast<char>(bytes[pos++]));
  }
  return tok;
}

std::size_t parse_dim(const std::string& tok, const char* what) {
  if (tok.empty()) raise(ErrorCode::Format, std::string("missing ") + what);
  for (char ch : tok) {
    if (!std::isdigit(static_cast<unsigned char>(ch))) {
      raise(ErrorCode::Format, std::string("bad ") + what + " '" + tok + "'");
    }
  }
  const unsigned long long v = std::stoull(tok);
  if (v == 0) raise(ErrorCode::Format, std::string(what) + " must be positive");
  return static_cast<std::size_t>(v);
}

}  // namespace

RawImage read_pnm(const std::vector<std::uint8_t>& bytes) {
  std::size_t pos = 0;
  const std::string magic = next_token(bytes, pos);
  std::size_t channels = 0;
  if (magic == "P5") {
    channels = 1;
  } else if (magic == "P6") {
    channels = 3;
  } else if (!magic.empty() && magic[0] == 'P' && magic.size() == 2) {
    raise(ErrorCode::Format, "unsupported PNM type '" + magic +
                                 "', only binary P5/P6 are handled");
  } else {
    raise(ErrorCode::Format, "not a PNM file");
  }

  RawImage img;
  img.channels = channels;
  img.width = parse_dim(next_token(bytes, pos), "width");
  img.height = parse_dim(next_token(bytes, pos), "height");
  const std::size_t maxval = parse_dim(next_token(bytes, pos), "maxval");
  if (maxval != 255) {
    raise(ErrorCode::Format,
          "maxval " + std::to_string(maxval) + " unsupported, must be 255");
  }
  // Exactly one whitespace byte separates the header from the payload.
  if (pos >= bytes.size() ||
      !std::isspace(static_cast<unsigned char>(bytes[pos]))) {
    raise(ErrorCode::Format, "malformed PNM header");
  }
  ++pos;

  const std::size_t expect = img.width * img.height * channels;
  if (bytes.size() - pos < expect) {
    raise(ErrorCode::Format,
          "truncated PNM payload: expected " + std::to_string(expect) +
              " bytes, got " + std::to_string(bytes.size() - pos));
  }
  img.pixels.assign(bytes.begin() + static_cast<std::ptrdiff_t>(pos),
                    bytes.begin() + static_cast<std::ptrdiff_t>(pos + expect));
  return img;
}

RawImage to_grayscale(const RawImage& img) {
  if (img.channels != 3) {
    raise(ErrorCode::Input, "to_grayscale expects a 3-channel image");
  }
  RawImage out;
  out.width = img.width;
  out.height = img.height;
  out.channels = 1;
  out.pixels.resize(img.width * img.height);
  for (std::size_t i = 0; i < out.pixels.size(); ++i) {
    const double r = img.pixels[3 * i + 0];
    const double g = img.pixels[3 * i + 1];
    const double b = img.pixels[3 * i + 2];
    long luma = std::lround(0.299 * r + 0.587 * g + 0.114 * b);
    if (luma < 0) luma = 0;
    if (luma > 255) luma = 255;
    out.pixels[i] = static_cast<std::uint8_t>(luma);
  }
  return out;
}

RawImage resize(const RawImage& img, std::size_t target) {
  if (img.channels != 1) {
    raise(ErrorCode::Input, "resize expects a single-channel image");
  }
  if (img.width != img.height) {
    raise(ErrorCode::Input, "resize expects a square image, got " +
                                std::to_string(img.width) + "x" +
                                std::to_string(img.height));
  }
  if (img.width < target) {
    raise(ErrorCode::Input, "source side " + std::to_string(img.width) +
                                " smaller than target " +
                                std::to_string(target));
  }
  if (img.width == target) return img;

  RawImage out;
  out.width = out.height = target;
  out.channels = 1;
  out.pixels.resize(target * target);

  const std::size_t side = img.width;
  if (side % target == 0) {
    // Box mean over an exact partition of the source.
    const std::size_t box = side / target;
    const double inv = 1.0 / static_cast<double>(box * box);
    for (std::size_t ty = 0; ty < target; ++ty) {
      for (std::size_t tx = 0; tx < target; ++tx) {
        double sum = 0.0;
        for (std::size_t by = 0; by < box; ++by) {
          const std::uint8_t* row = img.pixels.data() + (ty * box + by) * side;
          for (std::size_t bx = 0; bx < box; ++bx) {
            sum += row[tx * box + bx];
          }
        }
        out.pixels[ty * target + tx] =
            static_cast<std::uint8_t>(std::lround(sum * inv));
      }
    }
    return out;
  }

  // Bilinear sample at the center of each target box.
  const double scale = static_cast<double>(side) / static_cast<double>(target);
  const double top = static_cast<double>(side - 1);
  for (std::size_t ty = 0; ty < target; ++ty) {
    double sy = (static_cast<double>(ty) + 0.5) * scale - 0.5;
    if (sy < 0) sy = 0;
    if (sy > top) sy = top;
    const auto y0 = static_cast<std::size_t>(sy);
    const std::size_t y1 = (y0 + 1 < side) ? y0 + 1 : y0;
    const double fy = sy - static_cast<double>(y0);
    for (std::size_t tx = 0; tx < target; ++tx) {
      double sx = (static_cast<double>(tx) + 0.5) * scale - 0.5;
      if (sx < 0) sx = 0;
      if (sx > top) sx = top;
      const auto x0 = static_cast<std::size_t>(sx);
      const std::size_t x1 = (x0 + 1 < side) ? x0 + 1 : x0;
      const double fx = sx - static_cast<double>(x0);
      const double v00 = img.pixels[y0 * side + x0];
      const double v01 = img.pixels[y0 * side + x1];
      const double v10 = img.pixels[y1 * side + x0];
      const double v11 = img.pixels[y1 * side + x1];
      const double v = (1 - fy) * ((1 - fx) * v00 + fx * v01) +
                       fy * ((1 - fx) * v10 + fx * v11);
      out.pixels[ty * target + tx] =
          static_cast<std::uint8_t>(std::lround(v));
    }
  }
  return out;
}

}  // namespace asl
