#pragma once

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <functional>
#include <vector>

#include "mslc/binio.hpp"

namespace mslc {

// 257 cumulative frequencies over the 256-symbol alphabet; monotone,
// cdf[0] = 0, cdf[256] = 65536, every symbol frequency >= 1.
struct QuantizedCdf {
  std::array<uint32_t, 257> cum;

  uint32_t freq(int symbol) const { return cum[symbol + 1] - cum[symbol]; }
  static constexpr uint32_t kTotal = 1u << 16;
};

// Probabilities are rounded to the nearest 2^-32 first so heterogeneous
// builds agree bit for bit, then freq_s = max(1, round(p_s * 65536)) with
// largest-remainder renormalization to an exact total of 65536.
QuantizedCdf quantize_probs(const Eigen::Matrix<double, 1, Eigen::Dynamic>& p);
QuantizedCdf quantize_probs(const double* p, int n = 256);

// Carry-less byte-oriented range coder, 64-bit state.
class RangeEncoder {
 public:
  void encode(int symbol, const QuantizedCdf& cdf);
  std::vector<uint8_t> finish();

 private:
  void normalize();
  uint64_t low_ = 0;
  uint64_t range_ = ~0ull;
  std::vector<uint8_t> out_;
};

class RangeDecoder {
 public:
  explicit RangeDecoder(const std::vector<uint8_t>& bytes);
  int decode(const QuantizedCdf& cdf);

 private:
  void normalize();
  uint8_t next_byte();
  uint64_t low_ = 0;
  uint64_t range_ = ~0ull;
  uint64_t code_ = 0;
  const std::vector<uint8_t>* bytes_;
  size_t pos_ = 0;
};

// Convenience batch forms used by tests and the intensity/occupancy coders.
std::vector<uint8_t> rc_encode(const std::vector<int>& symbols,
                               const std::function<QuantizedCdf(size_t)>& cdf_at);
std::vector<int> rc_decode(const std::vector<uint8_t>& bytes, size_t n_symbols,
                           const std::function<QuantizedCdf(size_t)>& cdf_at);

}  // namespace mslc
