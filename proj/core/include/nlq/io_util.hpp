#pragma once

#include <cstdint>
#include <cstring>
#include <string>
#include <string_view>
#include <vector>

#include "nlq/errors.hpp"

namespace nlq {

// Little-endian append-only buffer for versioned binary files.
class ByteWriter {
 public:
  void u8(std::uint8_t x) { buf_.push_back(static_cast<char>(x)); }
  void u32(std::uint32_t x) { raw(&x, sizeof x); }
  void u64(std::uint64_t x) { raw(&x, sizeof x); }
  void f64(double x) { raw(&x, sizeof x); }
  void str(std::string_view s) {
    u32(static_cast<std::uint32_t>(s.size()));
    buf_.append(s.data(), s.size());
  }
  void raw(const void* p, std::size_t n) {
    buf_.append(static_cast<const char*>(p), n);
  }
  const std::string& bytes() const { return buf_; }

 private:
  std::string buf_;
};

class ByteReader {
 public:
  explicit ByteReader(std::string_view bytes) : b_(bytes) {}

  std::uint8_t u8() { return static_cast<std::uint8_t>(take(1)[0]); }
  std::uint32_t u32() { return scalar<std::uint32_t>(); }
  std::uint64_t u64() { return scalar<std::uint64_t>(); }
  double f64() { return scalar<double>(); }
  std::string str() {
    const auto n = u32();
    auto s = take(n);
    return std::string(s);
  }
  bool at_end() const { return pos_ == b_.size(); }

 private:
  template <class T>
  T scalar() {
    T x;
    auto s = take(sizeof(T));
    std::memcpy(&x, s.data(), sizeof(T));
    return x;
  }
  std::string_view take(std::size_t n) {
    if (pos_ + n > b_.size()) throw FormatError("truncated binary file");
    auto s = b_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  std::string_view b_;
  std::size_t pos_ = 0;
};

// Reads a whole file; throws FormatError if it cannot be opened.
std::string read_file(const std::string& path);

// Writes bytes atomically: takes <path>.lock, writes <path>.tmp, renames.
// A stale lock or unwritable target throws Error; no partial files remain.
void atomic_write_file(const std::string& path, std::string_view bytes);

// snprintf-based formatting helpers; locale-independent, reproducible.
std::string format_double(double x, int precision);   // "%.*f"
std::string format_general(double x, int precision);  // "%.*g"

}  // namespace nlq
