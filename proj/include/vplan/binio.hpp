#pragma once

#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "vplan/errors.hpp"

// Little-endian binary file helpers. Writers go through a temp file and rename
// on commit, so a crash never leaves a partial artifact at the target path.
// Assumes a little-endian host (checked at startup in the store paths).
namespace vplan::io {

class Writer {
 public:
  explicit Writer(const std::string& path) : path_(path), tmp_(path + ".tmp") {
    f_.open(tmp_, std::ios::binary | std::ios::trunc);
    if (!f_) throw Error("cannot open for writing: " + tmp_);
  }

  ~Writer() {
    if (!committed_) {
      f_.close();
      std::remove(tmp_.c_str());
    }
  }

  Writer(const Writer&) = delete;
  Writer& operator=(const Writer&) = delete;

  void bytes(const void* p, size_t n) {
    f_.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
    off_ += n;
  }
  void u32(uint32_t x) { bytes(&x, 4); }
  void u64(uint64_t x) { bytes(&x, 8); }
  void f32(float x) { bytes(&x, 4); }
  void f64(double x) { bytes(&x, 8); }
  void str(const std::string& s) {
    u32(static_cast<uint32_t>(s.size()));
    bytes(s.data(), s.size());
  }
  void magic(const char m[4]) { bytes(m, 4); }

  uint64_t offset() const { return off_; }

  void commit() {
    f_.flush();
    if (!f_) throw Error("write failed: " + tmp_);
    f_.close();
    if (std::rename(tmp_.c_str(), path_.c_str()) != 0)
      throw Error("cannot rename " + tmp_ + " to " + path_);
    committed_ = true;
  }

 private:
  std::string path_, tmp_;
  std::ofstream f_;
  uint64_t off_ = 0;
  bool committed_ = false;
};

class Reader {
 public:
  explicit Reader(const std::string& path) : path_(path) {
    f_.open(path, std::ios::binary);
    if (!f_) throw Error("cannot open for reading: " + path);
  }

  void bytes(void* p, size_t n) {
    f_.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
    if (static_cast<size_t>(f_.gcount()) != n)
      throw FormatError("truncated file " + path_ + " at byte offset " + std::to_string(off_));
    off_ += n;
  }
  uint32_t u32() {
    uint32_t x;
    bytes(&x, 4);
    return x;
  }
  uint64_t u64() {
    uint64_t x;
    bytes(&x, 8);
    return x;
  }
  float f32() {
    float x;
    bytes(&x, 4);
    return x;
  }
  double f64() {
    double x;
    bytes(&x, 8);
    return x;
  }
  std::string str(uint32_t max_len = 1u << 20) {
    const uint32_t n = u32();
    if (n > max_len)
      throw FormatError("implausible string length in " + path_ + " at byte offset " +
                        std::to_string(off_ - 4));
    std::string s(n, '\0');
    bytes(s.data(), n);
    return s;
  }
  void expect_magic(const char m[4], const std::string& kind) {
    char got[4];
    bytes(got, 4);
    if (std::memcmp(got, m, 4) != 0)
      throw FormatError("bad magic for " + kind + " in " + path_ + " at byte offset 0");
  }
  void expect_version(uint32_t want, const std::string& kind) {
    const uint64_t at = off_;
    const uint32_t got = u32();
    if (got != want)
      throw FormatError("unsupported " + kind + " version " + std::to_string(got) + " in " +
                        path_ + " at byte offset " + std::to_string(at));
  }
  bool at_eof() {
    return f_.peek() == std::char_traits<char>::eof();
  }
  uint64_t offset() const { return off_; }

 private:
  std::string path_;
  std::ifstream f_;
  uint64_t off_ = 0;
};

}  // namespace vplan::io
