#include "mslc/compressor.hpp"

#include <zlib.h>

#include <stdexcept>

namespace mslc {

namespace {

class DeflateCompressor final : public ByteCompressor {
 public:
  explicit DeflateCompressor(int level) : level_(level) {}

  std::vector<uint8_t> compress(const std::vector<uint8_t>& raw) const override {
    uLongf bound = compressBound(static_cast<uLong>(raw.size()));
    std::vector<uint8_t> out(bound);
    int rc = compress2(out.data(), &bound, raw.data(), static_cast<uLong>(raw.size()), level_);
    if (rc != Z_OK) throw std::runtime_error("zlib compress failed: " + std::to_string(rc));
    out.resize(bound);
    return out;
  }

  std::vector<uint8_t> decompress(const std::vector<uint8_t>& packed,
                                  size_t raw_size) const override {
    std::vector<uint8_t> out(raw_size);
    uLongf n = static_cast<uLongf>(raw_size);
    int rc = uncompress(out.data(), &n, packed.data(), static_cast<uLong>(packed.size()));
    if (rc != Z_OK || n != raw_size)
      throw std::runtime_error("zlib decompress failed: " + std::to_string(rc));
    return out;
  }

  std::string name() const override { return "deflate"; }

 private:
  int level_;
};

}  // namespace

std::unique_ptr<ByteCompressor> make_deflate_compressor(int level) {
  return std::make_unique<DeflateCompressor>(level);
}

}  // namespace mslc
