#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "mslc/pointcloud.hpp"

namespace mslc {

// Octant bit order: b2 = x, b1 = y, b0 = z; the high half of the parent cell
// sets the bit.
//
// Occupancy stream: one byte per node in breadth-first order. A nonzero byte
// is the child-occupancy mask of an intermediate node. The byte 0x00 marks a
// single-point node that terminated early; its residual path to the depth-D
// cell lives in the leaf stream (3*(D-level) bits). Early termination is
// used at levels 1..D-2 only: at level D-1 the marker byte plus offset bits
// would cost more than descending, and the root always emits a mask.

struct LeafRecord {
  int level = 0;                           // level of the leaf node, <= D
  std::array<uint32_t, 3> offset = {0, 0, 0};  // per-axis residual, in [0, 2^(D-level))
  uint8_t intensity = 0;
};

struct SerializedOctree {
  int depth = 0;
  std::vector<uint8_t> occupancy_stream;   // breadth-first
  std::vector<LeafRecord> leaf_stream;     // breadth-first encounter order

  bool operator==(const SerializedOctree& o) const {
    if (depth != o.depth || occupancy_stream != o.occupancy_stream ||
        leaf_stream.size() != o.leaf_stream.size())
      return false;
    for (size_t i = 0; i < leaf_stream.size(); ++i) {
      const LeafRecord &a = leaf_stream[i], &b = o.leaf_stream[i];
      if (a.level != b.level || a.offset != b.offset || a.intensity != b.intensity) return false;
    }
    return true;
  }
};

struct OctreeNode {
  int level = 0;
  std::array<uint32_t, 3> cell = {0, 0, 0};  // cell coordinates at `level`
  int32_t parent = -1;                       // index into ParsedOctree::nodes
  uint8_t octant = 0;                        // octant index under the parent
  uint8_t byte = 0;                          // occupancy symbol; 0 = leaf marker
};

struct LeafGeom {
  int level = 0;
  std::array<uint32_t, 3> cell = {0, 0, 0};  // cell at `level`; depth-D cell needs offsets
};

struct ParsedOctree {
  int depth = 0;
  std::vector<OctreeNode> nodes;   // byte-emitting nodes, level-major BFS order
  std::vector<int> level_begin;    // size depth+1; nodes of level l are [level_begin[l], level_begin[l+1])
  std::vector<LeafGeom> leaves;    // breadth-first encounter order

  int nodes_at(int level) const { return level_begin[level + 1] - level_begin[level]; }
};

// Incremental breadth-first parser, shared by the file parser and the
// decoder so both sides derive identical structure from identical bytes.
class OctreeLevelParser {
 public:
  explicit OctreeLevelParser(int depth);

  bool done() const { return pending_count_ == 0; }
  int pending_level() const { return pending_level_; }
  int pending_count() const { return pending_count_; }
  // Pending nodes are the trailing pending_count() entries of nodes() with
  // byte not yet assigned.
  const std::vector<OctreeNode>& nodes() const { return tree_.nodes; }
  const std::vector<int>& level_begin() const { return tree_.level_begin; }

  // Assign occupancy bytes to the pending nodes (one byte each) and expand
  // the next level. Throws CorruptionError on an invalid marker placement.
  void supply(const uint8_t* bytes, int count);

  ParsedOctree finish();

 private:
  ParsedOctree tree_;
  int pending_level_ = 0;
  int pending_count_ = 0;
};

// Cell arithmetic. Points exactly on the max face clamp to the last cell;
// points outside the ROI are dropped by the caller.
std::array<uint32_t, 3> quantize_cell(const Eigen::Vector3d& p, const RegionOfInterest& roi, int depth);
Eigen::Vector3d cell_center(const std::array<uint32_t, 3>& cell, const RegionOfInterest& roi, int level);

SerializedOctree build_octree(const Sweep& s, const RegionOfInterest& roi, int depth);
Sweep reconstruct(const SerializedOctree& o, const RegionOfInterest& roi);

ParsedOctree parse_occupancy_stream(const std::vector<uint8_t>& bytes, int depth);

// Leaf stream wire form: all offset bits packed MSB-first into one bit
// buffer (axis order x,y,z per level, coarse to fine), then one intensity
// byte per leaf in the same order.
std::vector<uint8_t> pack_leaf_offsets(const SerializedOctree& o);
// Rebuild leaf records from parsed geometry plus the packed offset bits and
// intensity bytes.
std::vector<LeafRecord> unpack_leaf_records(const ParsedOctree& tree,
                                            const std::vector<uint8_t>& offset_bits,
                                            const std::vector<uint8_t>& intensities);

// Depth-D cell of a leaf (node cell shifted down with offsets applied).
std::array<uint32_t, 3> leaf_cell_d(const LeafGeom& geom, const LeafRecord& rec, int depth);

struct LeafProbeRow {
  size_t raw_bytes = 0;
  size_t compressed_bytes = 0;
};

class ByteCompressor;
// Supplementary-style probe: raw vs compressed size of each sweep's packed
// leaf-offset buffer.
std::vector<LeafProbeRow> leaf_offset_compressibility_probe(
    const std::vector<std::vector<uint8_t>>& offset_streams, const ByteCompressor& compressor);

}  // namespace mslc
