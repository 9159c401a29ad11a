#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

namespace mslc {

// Generic lossless byte compressor, used for the intensity baseline and the
// leaf-offset probe.
class ByteCompressor {
 public:
  virtual ~ByteCompressor() = default;
  virtual std::vector<uint8_t> compress(const std::vector<uint8_t>& raw) const = 0;
  virtual std::vector<uint8_t> decompress(const std::vector<uint8_t>& packed,
                                          size_t raw_size) const = 0;
  virtual std::string name() const = 0;
};

// Deflate-family implementation backed by zlib.
std::unique_ptr<ByteCompressor> make_deflate_compressor(int level = 9);

}  // namespace mslc
