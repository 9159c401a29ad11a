#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "mslc/pointcloud.hpp"

namespace mslc {

// Compressed stream container, magic "MSC1". One header, then one frame per
// sweep. Frames carry a section count so future writers can append sections
// that older readers skip.

struct ContainerHeader {
  uint16_t version = 1;
  int depth = 0;
  RegionOfInterest roi;
  std::string occupancy_kind;  // "Histogram", "O", "OT", "OTB", "OTBCC"
  std::string intensity_kind;  // "Passthrough", "MLP1", "CC"
  uint64_t model_hash = 0;
  uint32_t sweep_count = 0;
};

// Section order: occupancy (range-coded), leaf offsets (raw bits),
// intensity (raw or range-coded depending on the intensity model).
struct Frame {
  int64_t timestamp = 0;
  std::optional<RigidTransform> pose;
  uint32_t orig_point_count = 0;  // points inside the ROI before quantization
  uint32_t n_occ_symbols = 0;
  uint32_t n_leaves = 0;
  std::vector<uint8_t> occupancy;
  std::vector<uint8_t> leaf_offsets;
  std::vector<uint8_t> intensity;
};

std::vector<uint8_t> serialize_container(const ContainerHeader& h, const std::vector<Frame>& frames);

struct ParsedContainer {
  ContainerHeader header;
  std::vector<Frame> frames;
};
ParsedContainer parse_container(const std::vector<uint8_t>& bytes);

void save_container(const ParsedContainer& c, const std::string& path);
ParsedContainer load_container(const std::string& path);

}  // namespace mslc
