#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <span>
#include <string>
#include <type_traits>

#include "pdsim/error.hpp"

namespace pdsim::detail {

static_assert(std::endian::native == std::endian::little,
              "binary formats are little-endian; big-endian hosts are not supported");

class BinaryWriter {
 public:
  explicit BinaryWriter(const std::filesystem::path& path)
      : path_(path), out_(path, std::ios::binary | std::ios::trunc) {
    if (!out_) fail(ErrorKind::io, "cannot open " + path.string() + " for writing");
  }

  void bytes(const void* data, std::size_t n) {
    out_.write(static_cast<const char*>(data), static_cast<std::streamsize>(n));
    if (!out_) fail(ErrorKind::io, "write failed: " + path_.string());
  }

  template <typename T>
    requires std::is_trivially_copyable_v<T>
  void value(const T& v) {
    bytes(&v, sizeof(T));
  }

  template <typename T>
  void array(std::span<const T> v) {
    bytes(v.data(), v.size_bytes());
  }

  void close() {
    out_.close();
    if (!out_) fail(ErrorKind::io, "close failed: " + path_.string());
  }

 private:
  std::filesystem::path path_;
  std::ofstream out_;
};

class BinaryReader {
 public:
  explicit BinaryReader(const std::filesystem::path& path)
      : path_(path), in_(path, std::ios::binary) {
    if (!in_) fail(ErrorKind::io, "cannot open " + path.string());
    in_.seekg(0, std::ios::end);
    size_ = static_cast<std::uint64_t>(in_.tellg());
    in_.seekg(0, std::ios::beg);
  }

  std::uint64_t remaining() const noexcept { return size_ - pos_; }
  bool at_end() const noexcept { return pos_ == size_; }

  void bytes(void* data, std::size_t n) {
    if (n > remaining()) fail(ErrorKind::format, path_.string() + ": unexpected end of file");
    in_.read(static_cast<char*>(data), static_cast<std::streamsize>(n));
    if (!in_) fail(ErrorKind::io, "read failed: " + path_.string());
    pos_ += n;
  }

  template <typename T>
    requires std::is_trivially_copyable_v<T>
  T value() {
    T v;
    bytes(&v, sizeof(T));
    return v;
  }

  template <typename T>
  void array(std::span<T> v) {
    bytes(v.data(), v.size_bytes());
  }

 private:
  std::filesystem::path path_;
  std::ifstream in_;
  std::uint64_t size_ = 0;
  std::uint64_t pos_ = 0;
};

}  // namespace pdsim::detail
