#include "vfxopt/npy.hpp"

#include <array>
#include <bit>
#include <cctype>
#include <cstring>
#include <fstream>
#include <iterator>
#include <map>
#include <optional>
#include <sstream>
#include <variant>

namespace vfxopt {

namespace {

constexpr std::array<char, 6> kMagic = {'\x93', 'N', 'U', 'M', 'P', 'Y'};
constexpr std::size_t kAlignment = 64;

using HeaderValue = std::variant<std::string, bool, std::vector<std::size_t>>;

[[noreturn]] void fail(NpyError::Kind kind, const std::string &message) {
  throw NpyError(kind, message);
}

// Parser for the Python dict literal that forms the NPY header.
class HeaderParser {
public:
  explicit HeaderParser(std::string_view text) : text_(text) {}

  std::map<std::string, HeaderValue> parse() {
    std::map<std::string, HeaderValue> out;
    expect('{');
    while (true) {
      skip_space();
      if (peek() == '}') {
        ++pos_;
        break;
      }
      std::string key = parse_string();
      expect(':');
      out[key] = parse_value();
      skip_space();
      if (peek() == ',') {
        ++pos_;
      } else if (peek() != '}') {
        fail(NpyError::Kind::malformed_header, "expected ',' or '}' in header");
      }
    }
    return out;
  }

private:
  char peek() const { return pos_ < text_.size() ? text_[pos_] : '\0'; }

  void skip_space() {
    while (pos_ < text_.size() &&
           std::isspace(static_cast<unsigned char>(text_[pos_]))) {
      ++pos_;
    }
  }

  void expect(char c) {
    skip_space();
    if (peek() != c) {
      fail(NpyError::Kind::malformed_header,
           std::string("expected '") + c + "' in header");
    }
    ++pos_;
  }

  std::string parse_string() {
    skip_space();
    const char quote = peek();
    if (quote != '\'' && quote != '"') {
      fail(NpyError::Kind::malformed_header, "expected quoted key or value");
    }
    ++pos_;
    const auto end = text_.find(quote, pos_);
    if (end == std::string_view::npos) {
      fail(NpyError::Kind::malformed_header, "unterminated string in header");
    }
    std::string s(text_.substr(pos_, end - pos_));
    pos_ = end + 1;
    return s;
  }

  HeaderValue parse_value() {
    skip_space();
    const char c = peek();
    if (c == '\'' || c == '"') {
      return parse_string();
    }
    if (text_.substr(pos_, 4) == "True") {
      pos_ += 4;
      return true;
    }
    if (text_.substr(pos_, 5) == "False") {
      pos_ += 5;
      return false;
    }
    if (c == '(') {
      ++pos_;
      std::vector<std::size_t> dims;
      while (true) {
        skip_space();
        if (peek() == ')') {
          ++pos_;
          return dims;
        }
        if (!std::isdigit(static_cast<unsigned char>(peek()))) {
          fail(NpyError::Kind::malformed_header, "bad shape tuple");
        }
        std::size_t v = 0;
        while (std::isdigit(static_cast<unsigned char>(peek()))) {
          v = v * 10 + static_cast<std::size_t>(peek() - '0');
          ++pos_;
        }
        dims.push_back(v);
        skip_space();
        if (peek() == ',') {
          ++pos_;
        } else if (peek() != ')') {
          fail(NpyError::Kind::malformed_header, "bad shape tuple");
        }
      }
    }
    fail(NpyError::Kind::malformed_header, "unsupported header value");
  }

  std::string_view text_;
  std::size_t pos_ = 0;
};

template <class T> const T &require(const std::map<std::string, HeaderValue> &h,
                                    const std::string &key) {
  const auto it = h.find(key);
  if (it == h.end() || !std::holds_alternative<T>(it->second)) {
    fail(NpyError::Kind::malformed_header, "header missing '" + key + "'");
  }
  return std::get<T>(it->second);
}

std::uint32_t read_le(std::string_view bytes, std::size_t offset,
                      std::size_t width) {
  std::uint32_t v = 0;
  for (std::size_t i = 0; i < width; ++i) {
    v |= static_cast<std::uint32_t>(static_cast<unsigned char>(bytes[offset + i]))
         << (8 * i);
  }
  return v;
}

float load_le_float(const char *p) {
  std::uint32_t bits = 0;
  for (int i = 0; i < 4; ++i) {
    bits |= static_cast<std::uint32_t>(static_cast<unsigned char>(p[i])) << (8 * i);
  }
  return std::bit_cast<float>(bits);
}

void store_le_float(float v, char *p) {
  const auto bits = std::bit_cast<std::uint32_t>(v);
  for (int i = 0; i < 4; ++i) {
    p[i] = static_cast<char>((bits >> (8 * i)) & 0xffu);
  }
}

} // namespace

NpyError::NpyError(Kind kind, const std::string &message)
    : Error(kind == Kind::io ? ErrorCategory::io : ErrorCategory::format,
            "npy: " + message),
      kind_(kind) {}

std::string encode_npy(const LatentTensor &t) {
  const auto &s = t.shape();
  std::ostringstream header;
  header << "{'descr': '<f4', 'fortran_order': False, 'shape': (" << s.c
         << ", " << s.f << ", " << s.h << ", " << s.w << "), }";
  std::string dict = header.str();
  const std::size_t preamble = kMagic.size() + 2 + 2;
  const std::size_t unpadded = preamble + dict.size() + 1;
  dict.append((kAlignment - unpadded % kAlignment) % kAlignment, ' ');
  dict.push_back('\n');

  std::string out;
  out.reserve(preamble + dict.size() + t.size() * 4);
  out.append(kMagic.data(), kMagic.size());
  out.push_back('\x01');
  out.push_back('\x00');
  out.push_back(static_cast<char>(dict.size() & 0xffu));
  out.push_back(static_cast<char>((dict.size() >> 8) & 0xffu));
  out += dict;
  const std::size_t payload = out.size();
  out.resize(payload + t.size() * 4);
  for (std::size_t i = 0; i < t.size(); ++i) {
    store_le_float(t[i], out.data() + payload + 4 * i);
  }
  return out;
}

LatentTensor decode_npy(std::string_view bytes) {
  if (bytes.size() < 10 ||
      std::memcmp(bytes.data(), kMagic.data(), kMagic.size()) != 0) {
    fail(NpyError::Kind::malformed_header, "missing NUMPY magic");
  }
  const auto major = static_cast<unsigned char>(bytes[6]);
  std::size_t len_width = 0;
  if (major == 1) {
    len_width = 2;
  } else if (major == 2 || major == 3) {
    len_width = 4;
  } else {
    fail(NpyError::Kind::malformed_header,
         "unsupported format version " + std::to_string(major));
  }
  const std::size_t header_start = 8 + len_width;
  if (bytes.size() < header_start) {
    fail(NpyError::Kind::malformed_header, "header length field truncated");
  }
  const std::size_t header_len = read_le(bytes, 8, len_width);
  if (bytes.size() < header_start + header_len) {
    fail(NpyError::Kind::malformed_header, "header truncated");
  }
  const auto fields =
      HeaderParser(bytes.substr(header_start, header_len)).parse();

  const auto &descr = require<std::string>(fields, "descr");
  if (descr != "<f4") {
    fail(NpyError::Kind::dtype_mismatch,
         "expected dtype '<f4', file declares '" + descr + "'");
  }
  if (require<bool>(fields, "fortran_order")) {
    fail(NpyError::Kind::fortran_order, "Fortran-ordered arrays are not supported");
  }
  const auto &dims = require<std::vector<std::size_t>>(fields, "shape");
  if (dims.size() != 4) {
    fail(NpyError::Kind::shape_rank,
         "expected a rank-4 (C, F, H, W) array, got rank " +
             std::to_string(dims.size()));
  }
  const TensorShape shape{dims[0], dims[1], dims[2], dims[3]};
  if (!shape.valid()) {
    fail(NpyError::Kind::shape_rank, "zero extent in shape " + shape.to_string());
  }

  const std::size_t payload = header_start + header_len;
  const std::size_t need = shape.numel() * 4;
  if (bytes.size() - payload < need) {
    fail(NpyError::Kind::truncated_payload,
         "payload holds " + std::to_string(bytes.size() - payload) +
             " bytes, shape " + shape.to_string() + " needs " +
             std::to_string(need));
  }
  std::vector<float> values(shape.numel());
  for (std::size_t i = 0; i < values.size(); ++i) {
    values[i] = load_le_float(bytes.data() + payload + 4 * i);
  }
  return LatentTensor(shape, std::move(values));
}

void save_tensor(const LatentTensor &t, const std::filesystem::path &path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    fail(NpyError::Kind::io, "cannot open " + path.string() + " for writing");
  }
  const std::string bytes = encode_npy(t);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) {
    fail(NpyError::Kind::io, "write failed for " + path.string());
  }
}

LatentTensor load_tensor(const std::filesystem::path &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    fail(NpyError::Kind::io, "cannot open " + path.string());
  }
  const std::string bytes((std::istreambuf_iterator<char>(in)),
                          std::istreambuf_iterator<char>());
  return decode_npy(bytes);
}

} // namespace vfxopt
