#include "mslc/pointcloud.hpp"

#include <cmath>
#include <fstream>
#include <random>

#include "mslc/binio.hpp"

namespace mslc {

namespace {

std::vector<uint8_t> read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open file: " + path);
  return std::vector<uint8_t>(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

void write_file(const std::string& path, const std::vector<uint8_t>& bytes) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot open file for writing: " + path);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw FormatError("write failed: " + path);
}

}  // namespace

Sweep parse_kitti_bin(const std::vector<uint8_t>& bytes) {
  if (bytes.size() % 16 != 0)
    throw FormatError("KITTI bin length " + std::to_string(bytes.size()) + " not divisible by 16");
  Sweep s;
  size_t n = bytes.size() / 16;
  s.points.reserve(n);
  ByteReader r(bytes);
  for (size_t i = 0; i < n; ++i) {
    float x = r.f32(), y = r.f32(), z = r.f32(), refl = r.f32();
    if (!std::isfinite(x) || !std::isfinite(y) || !std::isfinite(z) || !std::isfinite(refl))
      throw FormatError("non-finite value in KITTI record " + std::to_string(i));
    Point p;
    p.position = Eigen::Vector3d(x, y, z);
    double c = std::min(1.0, std::max(0.0, static_cast<double>(refl)));
    p.intensity = static_cast<uint8_t>(std::lround(c * 255.0));
    s.points.push_back(p);
  }
  return s;
}

Sweep load_kitti_bin(const std::string& path) { return parse_kitti_bin(read_file(path)); }

std::vector<uint8_t> to_kitti_bin(const Sweep& s) {
  ByteWriter w;
  for (const Point& p : s.points) {
    w.f32(static_cast<float>(p.position.x()));
    w.f32(static_cast<float>(p.position.y()));
    w.f32(static_cast<float>(p.position.z()));
    w.f32(static_cast<float>(p.intensity) / 255.0f);
  }
  return w.take();
}

static constexpr uint16_t kStreamVersion = 1;

std::vector<uint8_t> serialize_stream(const SweepStream& stream) {
  ByteWriter w;
  w.bytes(reinterpret_cast<const uint8_t*>("MSLC"), 4);
  w.u16(kStreamVersion);
  w.f64(stream.roi.side);
  for (int i = 0; i < 3; ++i) w.f64(stream.roi.center[i]);
  w.u32(static_cast<uint32_t>(stream.sweeps.size()));
  for (const Sweep& s : stream.sweeps) {
    w.u64(s.points.size());
    w.u64(static_cast<uint64_t>(s.timestamp));
    w.u8(s.pose.has_value() ? 1 : 0);
    if (s.pose) {
      for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c) w.f64(s.pose->rotation(r, c));
      for (int i = 0; i < 3; ++i) w.f64(s.pose->translation[i]);
    }
    for (const Point& p : s.points) {
      w.f64(p.position.x());
      w.f64(p.position.y());
      w.f64(p.position.z());
      w.u8(p.intensity);
    }
  }
  return w.take();
}

SweepStream parse_stream(const std::vector<uint8_t>& bytes) {
  ByteReader r(bytes);
  std::vector<uint8_t> magic = r.bytes(4);
  if (std::string(magic.begin(), magic.end()) != "MSLC") throw FormatError("bad stream magic");
  uint16_t version = r.u16();
  if (version != kStreamVersion)
    throw FormatError("unsupported stream version " + std::to_string(version));
  SweepStream stream;
  stream.roi.side = r.f64();
  for (int i = 0; i < 3; ++i) stream.roi.center[i] = r.f64();
  uint32_t n_sweeps = r.u32();
  stream.sweeps.resize(n_sweeps);
  for (Sweep& s : stream.sweeps) {
    uint64_t n = r.u64();
    s.timestamp = static_cast<int64_t>(r.u64());
    if (r.u8()) {
      RigidTransform T;
      for (int row = 0; row < 3; ++row)
        for (int c = 0; c < 3; ++c) T.rotation(row, c) = r.f64();
      for (int i = 0; i < 3; ++i) T.translation[i] = r.f64();
      s.pose = T;
    }
    s.points.resize(n);
    for (Point& p : s.points) {
      p.position.x() = r.f64();
      p.position.y() = r.f64();
      p.position.z() = r.f64();
      p.intensity = r.u8();
    }
  }
  return stream;
}

void save_stream(const SweepStream& stream, const std::string& path) {
  write_file(path, serialize_stream(stream));
}

SweepStream load_stream(const std::string& path) { return parse_stream(read_file(path)); }

Sweep transform_sweep(const Sweep& s, const RigidTransform& T) {
  Sweep out = s;
  for (Point& p : out.points) p.position = T.apply(p.position);
  return out;
}

RigidTransform alignment_transform(const Sweep& prev, const Sweep& cur) {
  if (!prev.pose || !cur.pose) return RigidTransform{};
  return cur.pose->inverse().compose(*prev.pose);
}

namespace {

struct Box {
  Eigen::Vector3d center;
  Eigen::Vector3d half;
  int id;
};

// Slab-method ray/AABB intersection; returns smallest positive t or -1.
double ray_box(const Eigen::Vector3d& origin, const Eigen::Vector3d& dir, const Box& b) {
  double tmin = 0.0, tmax = std::numeric_limits<double>::infinity();
  for (int a = 0; a < 3; ++a) {
    double lo = b.center[a] - b.half[a], hi = b.center[a] + b.half[a];
    if (std::abs(dir[a]) < 1e-12) {
      if (origin[a] < lo || origin[a] > hi) return -1.0;
      continue;
    }
    double t0 = (lo - origin[a]) / dir[a];
    double t1 = (hi - origin[a]) / dir[a];
    if (t0 > t1) std::swap(t0, t1);
    tmin = std::max(tmin, t0);
    tmax = std::min(tmax, t1);
    if (tmin > tmax) return -1.0;
  }
  return tmin > 1e-9 ? tmin : -1.0;
}

}  // namespace

SweepStream generate_synthetic_stream(uint64_t seed, int n_sweeps, const SceneParams& params) {
  if (n_sweeps < 1) throw std::invalid_argument("n_sweeps must be >= 1");

  SweepStream stream;
  stream.roi.side = params.roi_side;
  stream.roi.center = Eigen::Vector3d::Zero();

  std::mt19937_64 scene_rng(seed * 0x9e3779b97f4a7c15ull + 1);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  std::vector<Box> boxes;
  for (int k = 0; k < params.n_obstacles; ++k) {
    Box b;
    double ang = unit(scene_rng) * 2.0 * M_PI;
    double rad = 6.0 + unit(scene_rng) * (params.spawn_radius - 6.0);
    double hx = params.obstacle_size * (0.5 + unit(scene_rng));
    double hy = params.obstacle_size * (0.5 + unit(scene_rng));
    double hz = 1.0 + 2.0 * unit(scene_rng);
    b.center = Eigen::Vector3d(rad * std::cos(ang), rad * std::sin(ang), params.ground_z + hz);
    b.half = Eigen::Vector3d(hx, hy, hz);
    b.id = k;
    boxes.push_back(b);
  }

  const double elev_lo = -24.0 * M_PI / 180.0;
  const double elev_hi = 2.0 * M_PI / 180.0;

  for (int t = 0; t < n_sweeps; ++t) {
    Sweep sweep;
    sweep.timestamp = t;
    std::mt19937_64 noise_rng(seed * 0x2545f4914f6cdd1dull + static_cast<uint64_t>(t) + 7);
    std::normal_distribution<double> noise(0.0, params.intensity_noise);

    std::vector<Box> moved = boxes;
    for (Box& b : moved) b.center += params.velocity * params.dt * static_cast<double>(t);

    for (int ring = 0; ring < params.rings; ++ring) {
      double elev = elev_lo + (elev_hi - elev_lo) * ring / std::max(1, params.rings - 1);
      for (int az = 0; az < params.azimuth_steps; ++az) {
        double a = 2.0 * M_PI * az / params.azimuth_steps;
        Eigen::Vector3d dir(std::cos(elev) * std::cos(a), std::cos(elev) * std::sin(a),
                            std::sin(elev));
        Eigen::Vector3d origin = Eigen::Vector3d::Zero();

        double best_t = std::numeric_limits<double>::infinity();
        int surface = -1;  // -1 miss, -2 ground, >=0 obstacle id
        if (dir.z() < -1e-9) {
          double tg = (params.ground_z - origin.z()) / dir.z();
          if (tg > 1e-9 && tg < best_t) {
            best_t = tg;
            surface = -2;
          }
        }
        for (const Box& b : moved) {
          double tb = ray_box(origin, dir, b);
          if (tb > 0.0 && tb < best_t) {
            best_t = tb;
            surface = b.id;
          }
        }
        if (surface == -1 || best_t > params.max_range) continue;

        Point p;
        p.position = origin + dir * best_t;
        int base = surface == -2 ? params.ground_base
                                 : params.obstacle_base + surface * params.obstacle_step;
        int val = base + static_cast<int>(std::lround(noise(noise_rng)));
        p.intensity = static_cast<uint8_t>(std::min(255, std::max(0, val)));
        sweep.points.push_back(p);
      }
    }
    stream.sweeps.push_back(std::move(sweep));
  }
  return stream;
}

}  // namespace mslc
