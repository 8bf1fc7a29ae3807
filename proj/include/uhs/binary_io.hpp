#pragma once

// Little-endian encoding helpers shared by the .geo, .sim, .uhsd and .net
// formats. Values are always written byte by byte in little-endian order,
// independent of the host.

#include <algorithm>
#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <zlib.h>

#include "uhs/error.hpp"

namespace uhs::io {

using Bytes = std::vector<std::uint8_t>;

template <typename U>
void put_uint(Bytes& out, U value) {
  for (std::size_t i = 0; i < sizeof(U); ++i) {
    out.push_back(static_cast<std::uint8_t>(value >> (8 * i)));
  }
}

inline void put_f32(Bytes& out, float v) { put_uint(out, std::bit_cast<std::uint32_t>(v)); }
inline void put_f64(Bytes& out, double v) { put_uint(out, std::bit_cast<std::uint64_t>(v)); }

inline void put_bytes(Bytes& out, std::string_view s) { out.insert(out.end(), s.begin(), s.end()); }

inline void put_f32s(Bytes& out, std::span<const float> v) {
  out.reserve(out.size() + 4 * v.size());
  for (float x : v) put_f32(out, x);
}

inline void put_f64s(Bytes& out, std::span<const double> v) {
  out.reserve(out.size() + 8 * v.size());
  for (double x : v) put_f64(out, x);
}

/// Bounds-checked cursor over an in-memory byte buffer.
class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> data) : data_(data) {}

  std::size_t offset() const noexcept { return pos_; }
  std::size_t remaining() const noexcept { return data_.size() - pos_; }

  void need(std::size_t n, std::string_view what) const {
    if (remaining() < n) {
      throw FormatError(FormatError::Kind::truncated,
                        "truncated file while reading " + std::string(what));
    }
  }

  template <typename U>
  U get_uint(std::string_view what) {
    need(sizeof(U), what);
    U value = 0;
    for (std::size_t i = 0; i < sizeof(U); ++i) {
      value |= static_cast<U>(static_cast<U>(data_[pos_ + i]) << (8 * i));
    }
    pos_ += sizeof(U);
    return value;
  }

  float get_f32(std::string_view what) { return std::bit_cast<float>(get_uint<std::uint32_t>(what)); }
  double get_f64(std::string_view what) { return std::bit_cast<double>(get_uint<std::uint64_t>(what)); }

  std::vector<float> get_f32s(std::size_t n, std::string_view what) {
    need(4 * n, what);
    std::vector<float> v(n);
    for (auto& x : v) x = get_f32(what);
    return v;
  }

  std::vector<double> get_f64s(std::size_t n, std::string_view what) {
    need(8 * n, what);
    std::vector<double> v(n);
    for (auto& x : v) x = get_f64(what);
    return v;
  }

  std::string get_string(std::size_t n, std::string_view what) {
    need(n, what);
    std::string s(reinterpret_cast<const char*>(data_.data() + pos_), n);
    pos_ += n;
    return s;
  }

  /// Reads up to and including the next '\n'; the newline is not returned.
  std::string get_line(std::string_view what) {
    const auto* begin = data_.data() + pos_;
    const auto* end = data_.data() + data_.size();
    const auto* nl = static_cast<const std::uint8_t*>(std::memchr(begin, '\n', static_cast<std::size_t>(end - begin)));
    if (nl == nullptr) {
      throw FormatError(FormatError::Kind::truncated, "missing header terminator in " + std::string(what));
    }
    std::string s(reinterpret_cast<const char*>(begin), static_cast<std::size_t>(nl - begin));
    pos_ += s.size() + 1;
    return s;
  }

  std::span<const std::uint8_t> view(std::size_t n, std::string_view what) {
    need(n, what);
    auto s = data_.subspan(pos_, n);
    pos_ += n;
    return s;
  }

  void skip(std::size_t n, std::string_view what) {
    need(n, what);
    pos_ += n;
  }

 private:
  std::span<const std::uint8_t> data_;
  std::size_t pos_ = 0;
};

inline Bytes read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError(FormatError::Kind::io, "cannot open " + path.string());
  in.seekg(0, std::ios::end);
  const auto size = static_cast<std::size_t>(in.tellg());
  in.seekg(0);
  Bytes data(size);
  in.read(reinterpret_cast<char*>(data.data()), static_cast<std::streamsize>(size));
  if (!in) throw FormatError(FormatError::Kind::io, "failed reading " + path.string());
  return data;
}

/// Reads at most `limit` leading bytes of a file.
inline Bytes read_prefix(const std::filesystem::path& path, std::size_t limit) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError(FormatError::Kind::io, "cannot open " + path.string());
  Bytes data(limit);
  in.read(reinterpret_cast<char*>(data.data()), static_cast<std::streamsize>(limit));
  data.resize(static_cast<std::size_t>(in.gcount()));
  return data;
}

/// Writes through a temporary file and renames, so readers never observe a
/// partially written artifact.
inline void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> data) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw FormatError(FormatError::Kind::io, "cannot create " + tmp.string());
    out.write(reinterpret_cast<const char*>(data.data()), static_cast<std::streamsize>(data.size()));
    if (!out) throw FormatError(FormatError::Kind::io, "failed writing " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

inline void write_text(const std::filesystem::path& path, std::string_view text) {
  write_file(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

/// IEEE CRC-32 (the zlib polynomial).
inline std::uint32_t crc32(std::span<const std::uint8_t> data) {
  uLong crc = ::crc32(0L, Z_NULL, 0);
  std::size_t done = 0;
  while (done < data.size()) {
    const auto chunk = static_cast<uInt>(std::min<std::size_t>(data.size() - done, 1u << 30));
    crc = ::crc32(crc, data.data() + done, chunk);
    done += chunk;
  }
  return static_cast<std::uint32_t>(crc);
}

}  // namespace uhs::io
