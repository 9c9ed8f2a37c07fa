// asrfuse/io/binary.hpp

// Copyright 2026  The asrfuse Authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#ifndef ASRFUSE_IO_BINARY_HPP_
#define ASRFUSE_IO_BINARY_HPP_

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>
#include <unistd.h>

#include "asrfuse/numcore/error.hpp"

namespace asrfuse {

/// Little-endian byte sink.
class ByteWriter {
 public:
  void Magic(const char (&m)[5]) { buf_.append(m, 4); }
  void U32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) buf_.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
  }
  void U64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) buf_.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
  }
  void F32(float v) { U32(std::bit_cast<std::uint32_t>(v)); }
  void F64(double v) { U64(std::bit_cast<std::uint64_t>(v)); }
  void Bytes(const std::string &s) { buf_ += s; }

  const std::string &data() const { return buf_; }

 private:
  std::string buf_;
};

/// Bounds-checked little-endian reader over an in-memory file.
class ByteReader {
 public:
  ByteReader(std::string data, std::string what) : data_(std::move(data)), what_(std::move(what)) {}

  void ExpectMagic(const char (&m)[5]) {
    if (data_.size() < 4 || std::memcmp(data_.data(), m, 4) != 0)
      FailValidation(what_, ": bad magic (expected \"", m, "\")");
    pos_ = 4;
  }
  std::uint32_t U32() {
    Need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i)
      v |= static_cast<std::uint32_t>(static_cast<unsigned char>(data_[pos_ + i])) << (8 * i);
    pos_ += 4;
    return v;
  }
  std::uint64_t U64() {
    Need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i)
      v |= static_cast<std::uint64_t>(static_cast<unsigned char>(data_[pos_ + i])) << (8 * i);
    pos_ += 8;
    return v;
  }
  float F32() { return std::bit_cast<float>(U32()); }
  double F64() { return std::bit_cast<double>(U64()); }
  std::string Bytes(std::size_t n) {
    Need(n);
    std::string s = data_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  std::size_t remaining() const { return data_.size() - pos_; }
  void ExpectEnd() const {
    if (pos_ != data_.size())
      FailValidation(what_, ": ", data_.size() - pos_, " trailing byte(s)");
  }

 private:
  void Need(std::size_t n) const {
    if (data_.size() - pos_ < n) FailValidation(what_, ": truncated file");
  }

  std::string data_;
  std::string what_;
  std::size_t pos_ = 0;
};

inline std::string ReadFileBytes(const std::filesystem::path &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) FailValidation("cannot open '", path.string(), "' for reading");
  return std::string(std::istreambuf_iterator<char>(in), {});
}

/// Writes to a sibling temporary file, then renames it over `path`.
inline void WriteFileAtomic(const std::filesystem::path &path, const std::string &bytes) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::filesystem::path tmp = path;
  tmp += ".tmp." + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) FailValidation("cannot open '", tmp.string(), "' for writing");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    out.flush();
    if (!out) FailValidation("write to '", tmp.string(), "' failed");
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp);
    FailValidation("cannot rename '", tmp.string(), "' to '", path.string(), "': ", ec.message());
  }
}

inline std::uint32_t CheckedU32(std::size_t v, const char *what) {
  if (v > 0xFFFFFFFFu) FailValidation(what, " ", v, " does not fit in 32 bits");
  return static_cast<std::uint32_t>(v);
}

}  // namespace asrfuse

#endif  // ASRFUSE_IO_BINARY_HPP_
