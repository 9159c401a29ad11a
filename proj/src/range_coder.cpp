#include "mslc/coder/range_coder.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace mslc {

namespace {
constexpr uint64_t kTop = 1ull << 56;
constexpr uint64_t kBot = 1ull << 48;
}  // namespace

QuantizedCdf quantize_probs(const double* p, int n) {
  if (n != 256) throw std::invalid_argument("quantize_probs: 256-symbol alphabet required");

  std::array<double, 256> scaled;
  std::array<int64_t, 256> freq;
  std::array<double, 256> remainder;
  for (int s = 0; s < 256; ++s) {
    if (p[s] < -1e-12 || !std::isfinite(p[s]))
      throw std::invalid_argument("quantize_probs: invalid probability at symbol " +
                                  std::to_string(s));
    // fixed rounding to 2^-32 so both coder sides agree bit for bit
    double p32 = std::llround(std::max(0.0, p[s]) * 4294967296.0) / 4294967296.0;
    scaled[s] = p32 * 65536.0;
    int64_t f = std::llround(scaled[s]);
    freq[s] = std::max<int64_t>(1, f);
    remainder[s] = scaled[s] - static_cast<double>(f);
  }

  int64_t total = std::accumulate(freq.begin(), freq.end(), int64_t{0});
  int64_t diff = 65536 - total;

  std::array<int, 256> order;
  std::iota(order.begin(), order.end(), 0);
  if (diff > 0) {
    // grant +1 to the largest remainders first
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return remainder[a] > remainder[b]; });
    int i = 0;
    while (diff > 0) {
      freq[order[i % 256]] += 1;
      --diff;
      ++i;
    }
  } else if (diff < 0) {
    // take -1 from the smallest remainders first, never below 1
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return remainder[a] < remainder[b]; });
    int i = 0;
    while (diff < 0) {
      int s = order[i % 256];
      ++i;
      if (freq[s] > 1) {
        freq[s] -= 1;
        ++diff;
      }
    }
  }

  QuantizedCdf cdf;
  cdf.cum[0] = 0;
  for (int s = 0; s < 256; ++s)
    cdf.cum[s + 1] = cdf.cum[s] + static_cast<uint32_t>(freq[s]);
  return cdf;
}

QuantizedCdf quantize_probs(const Eigen::Matrix<double, 1, Eigen::Dynamic>& p) {
  return quantize_probs(p.data(), static_cast<int>(p.cols()));
}

void RangeEncoder::encode(int symbol, const QuantizedCdf& cdf) {
  uint64_t r = range_ / QuantizedCdf::kTotal;
  low_ += r * cdf.cum[symbol];
  range_ = r * cdf.freq(symbol);
  normalize();
}

void RangeEncoder::normalize() {
  for (;;) {
    if ((low_ ^ (low_ + range_)) >= kTop) {
      if (range_ >= kBot) break;
      // carry-less truncation: clip the interval at the next kBot boundary
      range_ = (0 - low_) & (kBot - 1);
    }
    out_.push_back(static_cast<uint8_t>(low_ >> 56));
    low_ <<= 8;
    range_ <<= 8;
  }
}

std::vector<uint8_t> RangeEncoder::finish() {
  for (int i = 0; i < 8; ++i) {
    out_.push_back(static_cast<uint8_t>(low_ >> 56));
    low_ <<= 8;
  }
  return std::move(out_);
}

RangeDecoder::RangeDecoder(const std::vector<uint8_t>& bytes) : bytes_(&bytes) {
  for (int i = 0; i < 8; ++i) code_ = (code_ << 8) | next_byte();
}

uint8_t RangeDecoder::next_byte() {
  if (pos_ < bytes_->size()) return (*bytes_)[pos_++];
  // the encoder flushes 8 bytes; tolerate that much implicit zero padding
  if (pos_ < bytes_->size() + 8) {
    ++pos_;
    return 0;
  }
  throw CorruptionError("range coder stream underrun at byte " + std::to_string(pos_));
}

int RangeDecoder::decode(const QuantizedCdf& cdf) {
  uint64_t r = range_ / QuantizedCdf::kTotal;
  uint64_t v = (code_ - low_) / r;
  if (v >= QuantizedCdf::kTotal) v = QuantizedCdf::kTotal - 1;
  // first symbol with cum[s+1] > v
  int s = static_cast<int>(std::upper_bound(cdf.cum.begin() + 1, cdf.cum.end(),
                                            static_cast<uint32_t>(v)) -
                           (cdf.cum.begin() + 1));
  low_ += r * cdf.cum[s];
  range_ = r * cdf.freq(s);
  normalize();
  return s;
}

void RangeDecoder::normalize() {
  for (;;) {
    if ((low_ ^ (low_ + range_)) >= kTop) {
      if (range_ >= kBot) break;
      range_ = (0 - low_) & (kBot - 1);
    }
    code_ = (code_ << 8) | next_byte();
    low_ <<= 8;
    range_ <<= 8;
  }
}

std::vector<uint8_t> rc_encode(const std::vector<int>& symbols,
                               const std::function<QuantizedCdf(size_t)>& cdf_at) {
  RangeEncoder enc;
  for (size_t i = 0; i < symbols.size(); ++i) enc.encode(symbols[i], cdf_at(i));
  return enc.finish();
}

std::vector<int> rc_decode(const std::vector<uint8_t>& bytes, size_t n_symbols,
                           const std::function<QuantizedCdf(size_t)>& cdf_at) {
  RangeDecoder dec(bytes);
  std::vector<int> out;
  out.reserve(n_symbols);
  for (size_t i = 0; i < n_symbols; ++i) out.push_back(dec.decode(cdf_at(i)));
  return out;
}

}  // namespace mslc
