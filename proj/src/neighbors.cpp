#include "mslc/neighbors.hpp"

#include <algorithm>
#include <cmath>

namespace mslc {

SpatialIndex::SpatialIndex(std::vector<Eigen::Vector3d> points) : points_(std::move(points)) {
  if (points_.empty()) return;

  Eigen::Vector3d lo = points_[0], hi = points_[0];
  for (const auto& p : points_) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  grid_origin_ = lo;
  double extent = std::max(1e-9, (hi - lo).maxCoeff());
  double n_per_axis = std::cbrt(static_cast<double>(points_.size()));
  cell_size_ = std::max(1e-9, extent / std::max(1.0, n_per_axis));
  for (int a = 0; a < 3; ++a)
    grid_dims_[a] = static_cast<int64_t>(std::floor((hi[a] - lo[a]) / cell_size_)) + 1;

  for (size_t i = 0; i < points_.size(); ++i) {
    auto c = cell_of(points_[i]);
    cells_[cell_key(c[0], c[1], c[2])].push_back(static_cast<int>(i));
  }
}

std::array<int64_t, 3> SpatialIndex::cell_of(const Eigen::Vector3d& p) const {
  std::array<int64_t, 3> c;
  for (int a = 0; a < 3; ++a) {
    int64_t i = static_cast<int64_t>(std::floor((p[a] - grid_origin_[a]) / cell_size_));
    c[a] = std::clamp<int64_t>(i, 0, grid_dims_[a] - 1);
  }
  return c;
}

uint64_t SpatialIndex::cell_key(int64_t ix, int64_t iy, int64_t iz) const {
  return (static_cast<uint64_t>(ix) * 0x9E3779B1ull + static_cast<uint64_t>(iy)) * 0x85EBCA77ull +
         static_cast<uint64_t>(iz);
}

std::vector<SpatialIndex::Hit> SpatialIndex::knn(const Eigen::Vector3d& q, int k) const {
  std::vector<Hit> best;
  if (k <= 0 || points_.empty()) return best;

  auto qc = cell_of(q);
  int64_t max_ring = 0;
  for (int a = 0; a < 3; ++a)
    max_ring = std::max({max_ring, qc[a] + 1, grid_dims_[a] - qc[a]});

  auto consider = [&](int id) {
    double d = (points_[static_cast<size_t>(id)] - q).norm();
    best.push_back({id, d});
  };
  auto order = [](const Hit& a, const Hit& b) {
    return a.distance != b.distance ? a.distance < b.distance : a.id < b.id;
  };

  for (int64_t ring = 0; ring <= max_ring; ++ring) {
    // Points in ring `ring` lie at Euclidean distance >= (ring-1)*cell_size
    // from q, so once the kth best is within that bound we can stop.
    if (static_cast<int>(best.size()) >= k) {
      std::sort(best.begin(), best.end(), order);
      best.resize(static_cast<size_t>(k));
      if (best.back().distance < static_cast<double>(ring - 1) * cell_size_) break;
    }
    for (int64_t dx = -ring; dx <= ring; ++dx) {
      for (int64_t dy = -ring; dy <= ring; ++dy) {
        for (int64_t dz = -ring; dz <= ring; ++dz) {
          if (std::max({std::abs(dx), std::abs(dy), std::abs(dz)}) != ring) continue;
          int64_t ix = qc[0] + dx, iy = qc[1] + dy, iz = qc[2] + dz;
          if (ix < 0 || iy < 0 || iz < 0 || ix >= grid_dims_[0] || iy >= grid_dims_[1] ||
              iz >= grid_dims_[2])
            continue;
          auto it = cells_.find(cell_key(ix, iy, iz));
          if (it == cells_.end()) continue;
          for (int id : it->second) consider(id);
        }
      }
    }
  }
  std::sort(best.begin(), best.end(), order);
  if (static_cast<int>(best.size()) > k) best.resize(static_cast<size_t>(k));
  return best;
}

std::vector<SpatialIndex::Hit> SpatialIndex::within(const Eigen::Vector3d& q, double r) const {
  std::vector<Hit> out;
  if (points_.empty() || r < 0.0) return out;
  auto qc = cell_of(q);
  // cells more than ceil(r/cell_size)+1 rings away cannot hold a point within r
  int64_t max_ring = static_cast<int64_t>(std::ceil(r / cell_size_)) + 1;
  for (int64_t dx = -max_ring; dx <= max_ring; ++dx) {
    for (int64_t dy = -max_ring; dy <= max_ring; ++dy) {
      for (int64_t dz = -max_ring; dz <= max_ring; ++dz) {
        int64_t ix = qc[0] + dx, iy = qc[1] + dy, iz = qc[2] + dz;
        if (ix < 0 || iy < 0 || iz < 0 || ix >= grid_dims_[0] || iy >= grid_dims_[1] ||
            iz >= grid_dims_[2])
          continue;
        auto it = cells_.find(cell_key(ix, iy, iz));
        if (it == cells_.end()) continue;
        for (int id : it->second) {
          double d = (points_[static_cast<size_t>(id)] - q).norm();
          if (d <= r) out.push_back({id, d});
        }
      }
    }
  }
  std::sort(out.begin(), out.end(), [](const Hit& a, const Hit& b) {
    return a.distance != b.distance ? a.distance < b.distance : a.id < b.id;
  });
  return out;
}

int SpatialIndex::nearest(const Eigen::Vector3d& q) const {
  auto hits = knn(q, 1);
  return hits.empty() ? -1 : hits[0].id;
}

namespace {
uint64_t pack_cell(const std::array<uint32_t, 3>& c) {
  return (static_cast<uint64_t>(c[0]) << 42) | (static_cast<uint64_t>(c[1]) << 21) |
         static_cast<uint64_t>(c[2]);
}
}  // namespace

CorrespondenceMap::CorrespondenceMap(const ParsedOctree& prev, const RigidTransform& align,
                                     const RegionOfInterest& roi) {
  by_level_.resize(static_cast<size_t>(prev.depth) + 1);
  for (size_t i = 0; i < prev.nodes.size(); ++i) {
    const OctreeNode& n = prev.nodes[i];
    Eigen::Vector3d center = align.apply(cell_center(n.cell, roi, n.level));
    if (!roi.contains(center)) continue;
    auto cell = quantize_cell(center, roi, n.level);
    auto& level_map = by_level_[static_cast<size_t>(n.level)];
    // first (BFS-earliest) node wins on collision
    level_map.emplace(pack_cell(cell), std::make_pair(static_cast<int>(i), n.byte));
  }
}

std::optional<uint8_t> CorrespondenceMap::byte_at(int level,
                                                  const std::array<uint32_t, 3>& cell) const {
  if (level < 0 || static_cast<size_t>(level) >= by_level_.size()) return std::nullopt;
  const auto& m = by_level_[static_cast<size_t>(level)];
  auto it = m.find(pack_cell(cell));
  if (it == m.end()) return std::nullopt;
  return it->second.second;
}

std::optional<int> CorrespondenceMap::index_at(int level,
                                               const std::array<uint32_t, 3>& cell) const {
  if (level < 0 || static_cast<size_t>(level) >= by_level_.size()) return std::nullopt;
  const auto& m = by_level_[static_cast<size_t>(level)];
  auto it = m.find(pack_cell(cell));
  if (it == m.end()) return std::nullopt;
  return it->second.first;
}

}  // namespace mslc
