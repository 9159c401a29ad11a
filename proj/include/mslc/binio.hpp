#pragma once

#include <cstdint>
#include <cstring>
#include <stdexcept>
#include <string>
#include <vector>

// Little-endian binary serialization helpers shared by all file formats.

namespace mslc {

class FormatError : public std::runtime_error {
 public:
  explicit FormatError(const std::string& what) : std::runtime_error(what) {}
};

class CorruptionError : public std::runtime_error {
 public:
  explicit CorruptionError(const std::string& what) : std::runtime_error(what) {}
};

class ByteWriter {
 public:
  void u8(uint8_t v) { buf_.push_back(v); }
  void u16(uint16_t v) { raw(&v, 2); }
  void u32(uint32_t v) { raw(&v, 4); }
  void u64(uint64_t v) { raw(&v, 8); }
  void f32(float v) { raw(&v, 4); }
  void f64(double v) { raw(&v, 8); }
  void bytes(const uint8_t* p, size_t n) { buf_.insert(buf_.end(), p, p + n); }
  void bytes(const std::vector<uint8_t>& b) { bytes(b.data(), b.size()); }
  void str(const std::string& s) {
    u32(static_cast<uint32_t>(s.size()));
    bytes(reinterpret_cast<const uint8_t*>(s.data()), s.size());
  }

  const std::vector<uint8_t>& data() const { return buf_; }
  std::vector<uint8_t> take() { return std::move(buf_); }
  size_t size() const { return buf_.size(); }

 private:
  void raw(const void* p, size_t n) {
    // assumes little-endian host, checked at startup in container code
    const uint8_t* b = static_cast<const uint8_t*>(p);
    buf_.insert(buf_.end(), b, b + n);
  }
  std::vector<uint8_t> buf_;
};

class ByteReader {
 public:
  ByteReader(const uint8_t* p, size_t n) : p_(p), n_(n) {}
  explicit ByteReader(const std::vector<uint8_t>& b) : p_(b.data()), n_(b.size()) {}

  uint8_t u8() { return *take(1); }
  uint16_t u16() { uint16_t v; std::memcpy(&v, take(2), 2); return v; }
  uint32_t u32() { uint32_t v; std::memcpy(&v, take(4), 4); return v; }
  uint64_t u64() { uint64_t v; std::memcpy(&v, take(8), 8); return v; }
  float f32() { float v; std::memcpy(&v, take(4), 4); return v; }
  double f64() { double v; std::memcpy(&v, take(8), 8); return v; }
  std::string str() {
    uint32_t n = u32();
    const uint8_t* p = take(n);
    return std::string(reinterpret_cast<const char*>(p), n);
  }
  std::vector<uint8_t> bytes(size_t n) {
    const uint8_t* p = take(n);
    return std::vector<uint8_t>(p, p + n);
  }
  void skip(size_t n) { take(n); }

  size_t remaining() const { return n_ - pos_; }
  size_t pos() const { return pos_; }

 private:
  const uint8_t* take(size_t n) {
    if (pos_ + n > n_)
      throw CorruptionError("unexpected end of data at byte offset " + std::to_string(pos_));
    const uint8_t* p = p_ + pos_;
    pos_ += n;
    return p;
  }
  const uint8_t* p_;
  size_t n_;
  size_t pos_ = 0;
};

// MSB-first bit packing, shared buffer for all leaf offsets of a sweep.
class BitWriter {
 public:
  void bit(int b) {
    if (fill_ == 0) buf_.push_back(0);
    buf_.back() |= static_cast<uint8_t>((b & 1) << (7 - fill_));
    fill_ = (fill_ + 1) & 7;
  }
  void bits(uint32_t v, int n) {
    for (int i = n - 1; i >= 0; --i) bit((v >> i) & 1);
  }
  const std::vector<uint8_t>& data() const { return buf_; }
  std::vector<uint8_t> take() { return std::move(buf_); }

 private:
  std::vector<uint8_t> buf_;
  int fill_ = 0;
};

class BitReader {
 public:
  BitReader(const uint8_t* p, size_t n) : p_(p), nbits_(n * 8) {}
  explicit BitReader(const std::vector<uint8_t>& b) : p_(b.data()), nbits_(b.size() * 8) {}

  int bit() {
    if (pos_ >= nbits_)
      throw CorruptionError("bit buffer exhausted at bit " + std::to_string(pos_));
    int b = (p_[pos_ >> 3] >> (7 - (pos_ & 7))) & 1;
    ++pos_;
    return b;
  }
  uint32_t bits(int n) {
    uint32_t v = 0;
    for (int i = 0; i < n; ++i) v = (v << 1) | static_cast<uint32_t>(bit());
    return v;
  }

 private:
  const uint8_t* p_;
  size_t nbits_;
  size_t pos_ = 0;
};

inline uint64_t fnv1a64(const uint8_t* p, size_t n, uint64_t h = 0xcbf29ce484222325ull) {
  for (size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ull;
  }
  return h;
}
inline uint64_t fnv1a64(const std::vector<uint8_t>& b) { return fnv1a64(b.data(), b.size()); }

}  // namespace mslc
