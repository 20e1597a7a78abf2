#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "jncf/core/errors.hpp"

namespace jncf {

// Little-endian fixed-width writer/reader for checkpoint files.
class BinaryWriter {
 public:
  explicit BinaryWriter(const std::filesystem::path& path)
      : path_(path), out_(path, std::ios::binary | std::ios::trunc) {
    if (!out_) throw DataError("cannot write '" + path.string() + "'");
  }

  void bytes(std::string_view s) { out_.write(s.data(), static_cast<std::streamsize>(s.size())); }

  template <typename T>
  void value(T v) {
    static_assert(std::is_trivially_copyable_v<T>);
    unsigned char buf[sizeof(T)];
    std::memcpy(buf, &v, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) {
      for (std::size_t k = 0; k < sizeof(T) / 2; ++k) std::swap(buf[k], buf[sizeof(T) - 1 - k]);
    }
    out_.write(reinterpret_cast<const char*>(buf), sizeof(T));
  }

  void doubles(std::span<const double> v) {
    if constexpr (std::endian::native == std::endian::little) {
      out_.write(reinterpret_cast<const char*>(v.data()),
                 static_cast<std::streamsize>(v.size() * sizeof(double)));
    } else {
      for (double d : v) value(d);
    }
  }

  void finish() {
    out_.flush();
    if (!out_) throw DataError("write failed for '" + path_.string() + "'");
  }

 private:
  std::filesystem::path path_;
  std::ofstream out_;
};

class BinaryReader {
 public:
  explicit BinaryReader(const std::filesystem::path& path)
      : path_(path), in_(path, std::ios::binary) {
    if (!in_) throw DataError("cannot open '" + path.string() + "'");
  }

  std::string bytes(std::size_t n) {
    std::string s(n, '\0');
    read_raw(s.data(), n);
    return s;
  }

  template <typename T>
  T value() {
    unsigned char buf[sizeof(T)];
    read_raw(reinterpret_cast<char*>(buf), sizeof(T));
    if constexpr (std::endian::native == std::endian::big) {
      for (std::size_t k = 0; k < sizeof(T) / 2; ++k) std::swap(buf[k], buf[sizeof(T) - 1 - k]);
    }
    T v;
    std::memcpy(&v, buf, sizeof(T));
    return v;
  }

  void doubles(std::span<double> out) {
    if constexpr (std::endian::native == std::endian::little) {
      read_raw(reinterpret_cast<char*>(out.data()), out.size() * sizeof(double));
    } else {
      for (double& d : out) d = value<double>();
    }
  }

  bool at_eof() { return in_.peek() == std::char_traits<char>::eof(); }

 private:
  void read_raw(char* dst, std::size_t n) {
    in_.read(dst, static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(in_.gcount()) != n) {
      throw FormatError("'" + path_.string() + "' is truncated");
    }
  }

  std::filesystem::path path_;
  std::ifstream in_;
};

}  // namespace jncf
