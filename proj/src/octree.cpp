#include "mslc/octree.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

#include "mslc/binio.hpp"
#include "mslc/compressor.hpp"
#include "mslc/neighbors.hpp"

namespace mslc {

std::array<uint32_t, 3> quantize_cell(const Eigen::Vector3d& p, const RegionOfInterest& roi,
                                      int depth) {
  const uint32_t n = 1u << depth;
  const double cell = roi.side / static_cast<double>(n);
  const Eigen::Vector3d corner = roi.corner();
  std::array<uint32_t, 3> c;
  for (int a = 0; a < 3; ++a) {
    double idx = std::floor((p[a] - corner[a]) / cell);
    c[a] = static_cast<uint32_t>(std::clamp(idx, 0.0, static_cast<double>(n - 1)));
  }
  return c;
}

Eigen::Vector3d cell_center(const std::array<uint32_t, 3>& cell, const RegionOfInterest& roi,
                            int level) {
  const double size = roi.side / static_cast<double>(1u << level);
  const Eigen::Vector3d corner = roi.corner();
  return corner + Eigen::Vector3d((cell[0] + 0.5) * size, (cell[1] + 0.5) * size,
                                  (cell[2] + 0.5) * size);
}

namespace {

// Early-terminated leaves are marked with byte 0x00 and allowed only at
// levels 1..D-2; see octree.hpp.
bool marker_allowed(int level, int depth) { return level >= 1 && level <= depth - 2; }

uint64_t cell_key(const std::array<uint32_t, 3>& c) {
  return (static_cast<uint64_t>(c[0]) << 42) | (static_cast<uint64_t>(c[1]) << 21) |
         static_cast<uint64_t>(c[2]);
}

int octant_at(const std::array<uint32_t, 3>& cell_d, int level, int depth) {
  // Octant of the depth-D cell within its level-`level` ancestor, i.e. the
  // bit (depth-level-1) of each axis. b2=x, b1=y, b0=z.
  int shift = depth - level - 1;
  int bx = (cell_d[0] >> shift) & 1;
  int by = (cell_d[1] >> shift) & 1;
  int bz = (cell_d[2] >> shift) & 1;
  return (bx << 2) | (by << 1) | bz;
}

}  // namespace

OctreeLevelParser::OctreeLevelParser(int depth) {
  if (depth < 1 || depth > 16) throw std::invalid_argument("octree depth must be in [1,16]");
  tree_.depth = depth;
  tree_.level_begin.assign(static_cast<size_t>(depth) + 1, 0);
  // Root becomes pending once the caller announces a nonempty tree by
  // supplying its byte; pending bookkeeping starts with the root slot.
  OctreeNode root;
  tree_.nodes.push_back(root);
  for (size_t l = 1; l < tree_.level_begin.size(); ++l) tree_.level_begin[l] = 1;
  pending_level_ = 0;
  pending_count_ = 1;
}

void OctreeLevelParser::supply(const uint8_t* bytes, int count) {
  if (count != pending_count_)
    throw CorruptionError("expected " + std::to_string(pending_count_) + " bytes at level " +
                          std::to_string(pending_level_) + ", got " + std::to_string(count));
  const int depth = tree_.depth;
  const int level = pending_level_;
  const int first = static_cast<int>(tree_.nodes.size()) - pending_count_;

  std::vector<OctreeNode> children;
  for (int i = 0; i < count; ++i) {
    OctreeNode& node = tree_.nodes[static_cast<size_t>(first + i)];
    uint8_t b = bytes[i];
    node.byte = b;
    if (b == 0) {
      if (!marker_allowed(level, depth))
        throw CorruptionError("leaf marker at invalid level " + std::to_string(level) +
                              " (node " + std::to_string(first + i) + ")");
      tree_.leaves.push_back({level, node.cell});
      continue;
    }
    for (int oct = 0; oct < 8; ++oct) {
      if (!((b >> oct) & 1)) continue;
      std::array<uint32_t, 3> child_cell = {(node.cell[0] << 1) | ((oct >> 2) & 1),
                                            (node.cell[1] << 1) | ((oct >> 1) & 1),
                                            (node.cell[2] << 1) | (oct & 1)};
      if (level + 1 == depth) {
        tree_.leaves.push_back({depth, child_cell});
      } else {
        OctreeNode c;
        c.level = level + 1;
        c.cell = child_cell;
        c.parent = first + i;
        c.octant = static_cast<uint8_t>(oct);
        children.push_back(c);
      }
    }
  }

  pending_level_ = level + 1;
  pending_count_ = static_cast<int>(children.size());
  tree_.nodes.insert(tree_.nodes.end(), children.begin(), children.end());
  for (size_t l = static_cast<size_t>(pending_level_) + 1; l < tree_.level_begin.size(); ++l)
    tree_.level_begin[l] = static_cast<int>(tree_.nodes.size());
}

ParsedOctree OctreeLevelParser::finish() {
  if (pending_count_ != 0)
    throw CorruptionError("occupancy stream ended with " + std::to_string(pending_count_) +
                          " nodes pending at level " + std::to_string(pending_level_));
  return std::move(tree_);
}

ParsedOctree parse_occupancy_stream(const std::vector<uint8_t>& bytes, int depth) {
  if (bytes.empty()) {
    ParsedOctree empty;
    empty.depth = depth;
    empty.level_begin.assign(static_cast<size_t>(depth) + 1, 0);
    if (depth < 1 || depth > 16) throw std::invalid_argument("octree depth must be in [1,16]");
    return empty;
  }
  OctreeLevelParser parser(depth);
  size_t pos = 0;
  while (!parser.done()) {
    size_t need = static_cast<size_t>(parser.pending_count());
    if (pos + need > bytes.size())
      throw CorruptionError("occupancy stream exhausted at byte offset " + std::to_string(pos) +
                            ": level " + std::to_string(parser.pending_level()) + " needs " +
                            std::to_string(need) + " bytes");
    parser.supply(bytes.data() + pos, static_cast<int>(need));
    pos += need;
  }
  if (pos != bytes.size())
    throw CorruptionError("trailing bytes in occupancy stream at offset " + std::to_string(pos));
  return parser.finish();
}

SerializedOctree build_octree(const Sweep& s, const RegionOfInterest& roi, int depth) {
  if (depth < 1 || depth > 16) throw std::invalid_argument("octree depth must be in [1,16]");
  SerializedOctree out;
  out.depth = depth;

  // Quantize and merge points per depth-D cell; intensity comes from the
  // cell center's nearest neighbor in the original sweep, ties broken by
  // lowest original index.
  std::map<uint64_t, std::array<uint32_t, 3>> cells;  // ordered => input-order independent
  for (const Point& p : s.points) {
    if (!roi.contains(p.position)) continue;
    auto c = quantize_cell(p.position, roi, depth);
    cells.emplace(cell_key(c), c);
  }
  if (cells.empty()) return out;

  std::vector<Eigen::Vector3d> originals;
  originals.reserve(s.points.size());
  for (const Point& p : s.points) originals.push_back(p.position);
  SpatialIndex original_index(std::move(originals));

  std::unordered_map<uint64_t, uint8_t> cell_intensity;
  cell_intensity.reserve(cells.size());
  for (const auto& [key, c] : cells) {
    int nn = original_index.nearest(cell_center(c, roi, depth));
    cell_intensity[key] = s.points[static_cast<size_t>(nn)].intensity;
  }

  // Sort depth-D cells in octant path order (interleaved x,y,z bits, coarse
  // to fine) so each node's children occupy contiguous ranges.
  std::vector<std::array<uint32_t, 3>> sorted;
  sorted.reserve(cells.size());
  for (const auto& [key, c] : cells) sorted.push_back(c);
  auto morton = [depth](const std::array<uint32_t, 3>& c) {
    uint64_t m = 0;
    for (int l = depth - 1; l >= 0; --l) {
      m = (m << 3) | static_cast<uint64_t>((((c[0] >> l) & 1) << 2) | (((c[1] >> l) & 1) << 1) |
                                           ((c[2] >> l) & 1));
    }
    return m;
  };
  std::sort(sorted.begin(), sorted.end(),
            [&](const auto& a, const auto& b) { return morton(a) < morton(b); });

  struct Range {
    int level;
    std::array<uint32_t, 3> cell;
    size_t begin, end;  // into `sorted`
  };
  std::vector<Range> queue;
  queue.push_back({0, {0, 0, 0}, 0, sorted.size()});

  for (size_t qi = 0; qi < queue.size(); ++qi) {
    Range r = queue[qi];  // copy: queue reallocates
    if (r.level == depth) {
      const auto& cd = sorted[r.begin];
      out.leaf_stream.push_back({depth, {0, 0, 0}, cell_intensity[cell_key(cd)]});
      continue;
    }
    if (r.end - r.begin == 1 && marker_allowed(r.level, depth)) {
      out.occupancy_stream.push_back(0x00);
      const auto& cd = sorted[r.begin];
      LeafRecord rec;
      rec.level = r.level;
      int rem = depth - r.level;
      for (int a = 0; a < 3; ++a)
        rec.offset[a] = cd[a] - (r.cell[a] << rem);
      rec.intensity = cell_intensity[cell_key(cd)];
      out.leaf_stream.push_back(rec);
      continue;
    }
    // Intermediate node: emit child mask, enqueue children in octant order.
    uint8_t mask = 0;
    size_t pos = r.begin;
    std::array<std::pair<size_t, size_t>, 8> child_ranges;
    for (int oct = 0; oct < 8; ++oct) {
      size_t start = pos;
      while (pos < r.end && octant_at(sorted[pos], r.level, depth) == oct) ++pos;
      child_ranges[static_cast<size_t>(oct)] = {start, pos};
      if (pos > start) mask |= static_cast<uint8_t>(1 << oct);
    }
    out.occupancy_stream.push_back(mask);
    for (int oct = 0; oct < 8; ++oct) {
      auto [b, e] = child_ranges[static_cast<size_t>(oct)];
      if (b == e) continue;
      std::array<uint32_t, 3> child_cell = {(r.cell[0] << 1) | ((oct >> 2) & 1),
                                            (r.cell[1] << 1) | ((oct >> 1) & 1),
                                            (r.cell[2] << 1) | (oct & 1)};
      queue.push_back({r.level + 1, child_cell, b, e});
    }
  }

  return out;
}

std::array<uint32_t, 3> leaf_cell_d(const LeafGeom& geom, const LeafRecord& rec, int depth) {
  int rem = depth - geom.level;
  return {(geom.cell[0] << rem) | rec.offset[0], (geom.cell[1] << rem) | rec.offset[1],
          (geom.cell[2] << rem) | rec.offset[2]};
}

Sweep reconstruct(const SerializedOctree& o, const RegionOfInterest& roi) {
  ParsedOctree tree = parse_occupancy_stream(o.occupancy_stream, o.depth);
  if (tree.leaves.size() != o.leaf_stream.size())
    throw CorruptionError("leaf stream size " + std::to_string(o.leaf_stream.size()) +
                          " does not match occupancy structure (" +
                          std::to_string(tree.leaves.size()) + " leaves)");
  Sweep s;
  s.points.reserve(tree.leaves.size());
  for (size_t i = 0; i < tree.leaves.size(); ++i) {
    const LeafGeom& g = tree.leaves[i];
    const LeafRecord& rec = o.leaf_stream[i];
    if (rec.level != g.level)
      throw CorruptionError("leaf " + std::to_string(i) + " level mismatch");
    Point p;
    p.position = cell_center(leaf_cell_d(g, rec, o.depth), roi, o.depth);
    p.intensity = rec.intensity;
    s.points.push_back(p);
  }
  return s;
}

std::vector<uint8_t> pack_leaf_offsets(const SerializedOctree& o) {
  BitWriter bw;
  for (const LeafRecord& rec : o.leaf_stream) {
    int rem = o.depth - rec.level;
    for (int l = rem - 1; l >= 0; --l)
      for (int a = 0; a < 3; ++a) bw.bit((rec.offset[static_cast<size_t>(a)] >> l) & 1);
  }
  return bw.take();
}

std::vector<LeafRecord> unpack_leaf_records(const ParsedOctree& tree,
                                            const std::vector<uint8_t>& offset_bits,
                                            const std::vector<uint8_t>& intensities) {
  if (intensities.size() != tree.leaves.size())
    throw CorruptionError("intensity count " + std::to_string(intensities.size()) +
                          " does not match leaf count " + std::to_string(tree.leaves.size()));
  BitReader br(offset_bits);
  std::vector<LeafRecord> out;
  out.reserve(tree.leaves.size());
  for (size_t i = 0; i < tree.leaves.size(); ++i) {
    const LeafGeom& g = tree.leaves[i];
    LeafRecord rec;
    rec.level = g.level;
    int rem = tree.depth - g.level;
    for (int l = rem - 1; l >= 0; --l)
      for (int a = 0; a < 3; ++a)
        rec.offset[static_cast<size_t>(a)] |= static_cast<uint32_t>(br.bit()) << l;
    rec.intensity = intensities[i];
    out.push_back(rec);
  }
  return out;
}

std::vector<LeafProbeRow> leaf_offset_compressibility_probe(
    const std::vector<std::vector<uint8_t>>& offset_streams, const ByteCompressor& compressor) {
  std::vector<LeafProbeRow> rows;
  rows.reserve(offset_streams.size());
  for (const auto& raw : offset_streams)
    rows.push_back({raw.size(), compressor.compress(raw).size()});
  return rows;
}

}  // namespace mslc
