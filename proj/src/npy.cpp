#include "asl/npy.hpp"

#include <cctype>
#include <cstring>
#include <fstream>

namespace asl::npy {

namespace {

constexpr std::uint8_t kMagic[6] = {0x93, 'N', 'U', 'M', 'P', 'Y'};

std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t");
  return s.substr(b, e - b + 1);
}

// Extracts the value string for 'key' from a Python dict literal. Values are
// either a quoted string, a parenthesized tuple, or a bare word.
std::string dict_value(const std::string& dict, const std::string& key) {
  const std::string quoted = "'" + key + "'";
  std::size_t pos = dict.find(quoted);
  if (pos == std::string::npos) {
    raise(ErrorCode::Format, "header dict missing key '" + key + "'");
  }
  pos = dict.find(':', pos + quoted.size());
  if (pos == std::string::npos) {
    raise(ErrorCode::Format, "header dict malformed near '" + key + "'");
  }
  ++pos;
  while (pos < dict.size() && (dict[pos] == ' ' || dict[pos] == '\t')) ++pos;
  if (pos >= dict.size()) {
    raise(ErrorCode::Format, "header dict malformed near '" + key + "'");
  }
  if (dict[pos] == '\'') {
    const std::size_t end = dict.find('\'', pos + 1);
    if (end == std::string::npos) {
      raise(ErrorCode::Format, "unterminated string in header dict");
    }
    return dict.substr(pos + 1, end - pos - 1);
  }
  if (dict[pos] == '(') {
    const std::size_t end = dict.find(')', pos + 1);
    if (end == std::string::npos) {
      raise(ErrorCode::Format, "unterminated tuple in header dict");
    }
    return dict.substr(pos, end - pos + 1);
  }
  std::size_t end = pos;
  while (end < dict.size() && dict[end] != ',' && dict[end] != '}') ++end;
  return trim(dict.substr(pos, end - pos));
}

Shape parse_shape_tuple(const std::string& tuple) {
  if (tuple.size() < 2 || tuple.front() != '(' || tuple.back() != ')') {
    raise(ErrorCode::Format, "bad shape tuple '" + tuple + "'");
  }
  std::vector<std::size_t> dims;
  std::string body = tuple.substr(1, tuple.size() - 2);
  std::size_t start = 0;
  while (start <= body.size()) {
    std::size_t comma = body.find(',', start);
    std::string item = trim(body.substr(
        start, comma == std::string::npos ? std::string::npos : comma - start));
    if (!item.empty()) {
      for (char ch : item) {
        if (!std::isdigit(static_cast<unsigned char>(ch))) {
          raise(ErrorCode::Format, "bad shape entry '" + item + "'");
        }
      }
      const unsigned long long d = std::stoull(item);
      if (d == 0) {
        raise(ErrorCode::Format, "zero-length dimensions are not supported");
      }
      dims.push_back(static_cast<std::size_t>(d));
    }
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return Shape(dims);
}

Dtype parse_descr(const std::string& descr) {
  if (descr == "<f4") return Dtype::F4;
  if (descr == "<f8") return Dtype::F8;
  if (descr == "|u1" || descr == "u1") return Dtype::U1;
  if (descr == ">f4" || descr == ">f8") {
    raise(ErrorCode::UnsupportedDtype,
          "big-endian dtype '" + descr + "' is not supported");
  }
  raise(ErrorCode::UnsupportedDtype, "dtype '" + descr + "' is not supported");
}

}  // namespace

Header parse_header(const std::vector<std::uint8_t>& bytes,
                    std::size_t& payload_offset) {
  if (bytes.size() < 8 || std::memcmp(bytes.data(), kMagic, 6) != 0) {
    raise(ErrorCode::Format, "not an NPY file (bad magic)");
  }
  Header h;
  h.version_major = bytes[6];
  h.version_minor = bytes[7];

  std::size_t len_field;
  std::size_t header_len;
  if (h.version_major == 1 && h.version_minor == 0) {
    len_field = 2;
    if (bytes.size() < 10) raise(ErrorCode::Format, "truncated NPY header");
    header_len = bytes[8] | static_cast<std::size_t>(bytes[9]) << 8;
  } else if (h.version_major == 2 && h.version_minor == 0) {
    len_field = 4;
    if (bytes.size() < 12) raise(ErrorCode::Format, "truncated NPY header");
    header_len = bytes[8] | static_cast<std::size_t>(bytes[9]) << 8 |
                 static_cast<std::size_t>(bytes[10]) << 16 |
                 static_cast<std::size_t>(bytes[11]) << 24;
  } else {
    raise(ErrorCode::Format,
          "unsupported NPY version " + std::to_string(h.version_major) + "." +
              std::to_string(h.version_minor));
  }

  const std::size_t dict_start = 8 + len_field;
  if (bytes.size() < dict_start + header_len) {
    raise(ErrorCode::Format, "truncated NPY header");
  }
  const std::string dict(bytes.begin() + static_cast<std::ptrdiff_t>(dict_start),
                         bytes.begin() +
                             static_cast<std::ptrdiff_t>(dict_start + header_len));

  h.descr = dict_value(dict, "descr");
  h.dtype = parse_descr(h.descr);
  const std::string fortran = dict_value(dict, "fortran_order");
  if (fortran == "True") {
    raise(ErrorCode::UnsupportedLayout,
          "fortran_order=True is not supported (row-major only)");
  }
  if (fortran != "False") {
    raise(ErrorCode::Format, "bad fortran_order value '" + fortran + "'");
  }
  h.fortran_order = false;
  h.shape = parse_shape_tuple(dict_value(dict, "shape"));

  payload_offset = dict_start + header_len;
  return h;
}

std::vector<std::uint8_t> serialize_header(const std::string& descr,
                                           const Shape& shape) {
  std::string tuple = "(";
  for (std::size_t i = 0; i < shape.rank(); ++i) {
    tuple += std::to_string(shape[i]);
    if (shape.rank() == 1 || i + 1 < shape.rank()) tuple += ",";
    if (i + 1 < shape.rank()) tuple += " ";
  }
  tuple += ")";

  const std::string dict = "{'descr': '" + descr +
                           "', 'fortran_order': False, 'shape': " + tuple +
                           ", }";
  // magic(6) + version(2) + len(2) + dict + padding + '\n', multiple of 16.
  const std::size_t unpadded = 10 + dict.size() + 1;
  const std::size_t padding = (16 - unpadded % 16) % 16;
  const std::size_t header_len = dict.size() + padding + 1;

  std::vector<std::uint8_t> out;
  out.reserve(10 + header_len);
  out.insert(out.end(), kMagic, kMagic + 6);
  out.push_back(0x01);
  out.push_back(0x00);
  out.push_back(static_cast<std::uint8_t>(header_len & 0xff));
  out.push_back(static_cast<std::uint8_t>(header_len >> 8 & 0xff));
  out.insert(out.end(), dict.begin(), dict.end());
  out.insert(out.end(), padding, ' ');
  out.push_back('\n');
  return out;
}

std::vector<std::uint8_t> read_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) raise(ErrorCode::Io, "cannot open '" + path.string() + "'");
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  if (in.bad()) raise(ErrorCode::Io, "read failed for '" + path.string() + "'");
  return bytes;
}

void write_bytes(const std::filesystem::path& path,
                 const std::vector<std::uint8_t>& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) raise(ErrorCode::Io, "cannot create '" + path.string() + "'");
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) raise(ErrorCode::Io, "write failed for '" + path.string() + "'");
}

}  // namespace asl::npy
