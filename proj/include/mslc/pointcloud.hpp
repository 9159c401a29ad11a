#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace mslc {

struct Point {
  Eigen::Vector3d position;
  uint8_t intensity = 0;
};

// Sensor-to-world rigid transform.
struct RigidTransform {
  Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
  Eigen::Vector3d translation = Eigen::Vector3d::Zero();

  Eigen::Vector3d apply(const Eigen::Vector3d& p) const { return rotation * p + translation; }
  RigidTransform inverse() const {
    RigidTransform inv;
    inv.rotation = rotation.transpose();
    inv.translation = -(rotation.transpose() * translation);
    return inv;
  }
  // this ∘ other: apply `other` first.
  RigidTransform compose(const RigidTransform& other) const {
    RigidTransform out;
    out.rotation = rotation * other.rotation;
    out.translation = rotation * other.translation + translation;
    return out;
  }
  bool orthonormal(double tol = 1e-6) const {
    return (rotation * rotation.transpose() - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff() < tol;
  }
};

struct Sweep {
  std::vector<Point> points;
  int64_t timestamp = 0;
  std::optional<RigidTransform> pose;  // absent pose means identity alignment
};

// Cubic region of interest, side `side` meters centered at `center`.
struct RegionOfInterest {
  double side = 400.0;
  Eigen::Vector3d center = Eigen::Vector3d::Zero();

  Eigen::Vector3d corner() const { return center - Eigen::Vector3d::Constant(side / 2.0); }
  bool contains(const Eigen::Vector3d& p) const {
    Eigen::Vector3d d = p - corner();
    return d.minCoeff() >= 0.0 && d.maxCoeff() <= side;
  }
};

struct SweepStream {
  std::vector<Sweep> sweeps;
  RegionOfInterest roi;
};

// KITTI Velodyne record layout: 4 little-endian f32 per point (x, y, z,
// reflectance in [0,1]); reflectance maps to round(clamp(r,0,1)*255).
Sweep load_kitti_bin(const std::string& path);
Sweep parse_kitti_bin(const std::vector<uint8_t>& bytes);
std::vector<uint8_t> to_kitti_bin(const Sweep& s);

// Self-describing stream file, magic "MSLC".
void save_stream(const SweepStream& stream, const std::string& path);
SweepStream load_stream(const std::string& path);
std::vector<uint8_t> serialize_stream(const SweepStream& stream);
SweepStream parse_stream(const std::vector<uint8_t>& bytes);

Sweep transform_sweep(const Sweep& s, const RigidTransform& T);

// Alignment of sweep t-1 into the sensor frame of sweep t:
// T = pose_t^-1 ∘ pose_{t-1}; identity when either pose is absent.
RigidTransform alignment_transform(const Sweep& prev, const Sweep& cur);

struct SceneParams {
  double roi_side = 400.0;
  double ground_z = -1.8;
  int n_obstacles = 6;
  double obstacle_size = 3.0;       // box half extents sampled around this
  double spawn_radius = 30.0;       // obstacles placed within this radius
  Eigen::Vector3d velocity = Eigen::Vector3d(1.2, 0.4, 0.0);  // m/s, shared
  double dt = 0.1;                  // seconds between sweeps
  int rings = 24;                   // elevation rings of the simulated ranger
  int azimuth_steps = 96;           // rays per ring
  double max_range = 60.0;
  double intensity_noise = 2.0;     // stddev of seeded per-point noise, levels
  // Intensity bands per surface: ground ~ ground_base, obstacle k ~
  // obstacle_base + k * obstacle_step (before noise). Bands let tests
  // recover the surface id from the intensity alone.
  int ground_base = 40;
  int obstacle_base = 110;
  int obstacle_step = 14;
};

// Deterministic: identical (seed, n_sweeps, params) produce bit-identical
// streams. Obstacles translate by velocity*dt per sweep, so consecutive
// sweeps are temporally correlated.
SweepStream generate_synthetic_stream(uint64_t seed, int n_sweeps, const SceneParams& params = {});

}  // namespace mslc
