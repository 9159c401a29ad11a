#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "mslc/nn/graph.hpp"

namespace mslc::nn {

// Versioned little-endian checkpoint: training metadata plus name-keyed
// tensor blobs. Magic "MSCK".
struct Checkpoint {
  std::string model_kind;  // e.g. "occupancy/OTBCC" or "intensity/CC"
  int depth = 0;
  uint64_t seed = 0;
  int64_t step = 0;
  uint64_t corpus_hash = 0;
  std::vector<std::pair<std::string, Mat>> tensors;

  std::vector<uint8_t> serialize() const;
  static Checkpoint parse(const std::vector<uint8_t>& bytes);
  void save(const std::string& path) const;
  static Checkpoint load(const std::string& path);

  // Identity of the weights, embedded in containers so decode can verify
  // it uses the same model as encode.
  uint64_t hash() const;

  // Copy tensor values into `params` by name; every parameter must be
  // present with matching shape.
  void restore_into(const std::vector<Tensor*>& params) const;
  static Checkpoint capture(const std::vector<const Tensor*>& params);
};

}  // namespace mslc::nn
