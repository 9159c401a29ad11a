#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <unordered_map>
#include <vector>

#include "mslc/octree.hpp"
#include "mslc/pointcloud.hpp"

namespace mslc {

// Exact k-nearest-neighbor index over a fixed point set. Queries return
// results sorted by (Euclidean distance, insertion index); the encoder and
// decoder must see identical neighbor sets, so exactness is mandatory.
class SpatialIndex {
 public:
  SpatialIndex() = default;
  explicit SpatialIndex(std::vector<Eigen::Vector3d> points);

  size_t size() const { return points_.size(); }
  bool empty() const { return points_.empty(); }
  const Eigen::Vector3d& position(int id) const { return points_[static_cast<size_t>(id)]; }

  struct Hit {
    int id;
    double distance;
  };
  // Exactly min(k, n) hits, sorted by (distance, id).
  std::vector<Hit> knn(const Eigen::Vector3d& q, int k) const;
  // Nearest point id, or -1 when empty.
  int nearest(const Eigen::Vector3d& q) const;
  // All points within Euclidean distance r, sorted by (distance, id).
  std::vector<Hit> within(const Eigen::Vector3d& q, double r) const;

 private:
  std::vector<Eigen::Vector3d> points_;
  double cell_size_ = 1.0;
  Eigen::Vector3d grid_origin_ = Eigen::Vector3d::Zero();
  std::array<int64_t, 3> grid_dims_ = {1, 1, 1};
  std::unordered_map<uint64_t, std::vector<int>> cells_;

  uint64_t cell_key(int64_t ix, int64_t iy, int64_t iz) const;
  std::array<int64_t, 3> cell_of(const Eigen::Vector3d& p) const;
};

// Lookup of previous-sweep occupancy bytes by (level, cell) after pose
// alignment into the current sensor frame. Alignment transforms each node's
// cell center and re-quantizes it on the current grid; on collision the
// earliest node in breadth-first order wins.
class CorrespondenceMap {
 public:
  CorrespondenceMap() = default;
  CorrespondenceMap(const ParsedOctree& prev, const RigidTransform& align,
                    const RegionOfInterest& roi);

  std::optional<uint8_t> byte_at(int level, const std::array<uint32_t, 3>& cell) const;
  // Index of the matching node in the previous octree's node array.
  std::optional<int> index_at(int level, const std::array<uint32_t, 3>& cell) const;

 private:
  std::vector<std::unordered_map<uint64_t, std::pair<int, uint8_t>>> by_level_;
};

}  // namespace mslc
