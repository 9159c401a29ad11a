#include <doctest.h>

#include <cstring>
#include <random>

#include "mslc/binio.hpp"
#include "mslc/pointcloud.hpp"

using namespace mslc;

namespace {
std::vector<uint8_t> kitti_record(float x, float y, float z, float r) {
  std::vector<uint8_t> b(16);
  float v[4] = {x, y, z, r};
  std::memcpy(b.data(), v, 16);
  return b;
}
}  // namespace

TEST_CASE("kitti record decodes by hand") {
  Sweep s = parse_kitti_bin(kitti_record(1.0f, 2.0f, 3.0f, 0.5f));
  REQUIRE(s.points.size() == 1);
  CHECK(s.points[0].position == Eigen::Vector3d(1, 2, 3));
  CHECK(s.points[0].intensity == 128);
}

TEST_CASE("kitti empty and truncated files") {
  CHECK(parse_kitti_bin({}).points.empty());
  std::vector<uint8_t> bad(17, 0);
  CHECK_THROWS_AS(parse_kitti_bin(bad), FormatError);
}

TEST_CASE("kitti non-finite float rejected") {
  auto b = kitti_record(1.0f, 2.0f, 3.0f, 0.5f);
  float nan = std::numeric_limits<float>::quiet_NaN();
  std::memcpy(b.data(), &nan, 4);
  CHECK_THROWS_AS(parse_kitti_bin(b), FormatError);
}

TEST_CASE("kitti reserialization is byte identical") {
  std::vector<uint8_t> bytes;
  auto append = [&](float x, float y, float z, float r) {
    auto rec = kitti_record(x, y, z, r);
    bytes.insert(bytes.end(), rec.begin(), rec.end());
  };
  // reflectances must be exact k/255 values for the byte mapping to invert
  append(1.5f, -2.25f, 0.125f, 0.0f);
  append(-7.0f, 3.0f, 9.5f, 1.0f);
  append(0.0f, 0.0f, 0.0f, float(64.0 / 255.0));
  CHECK(to_kitti_bin(parse_kitti_bin(bytes)) == bytes);
}

TEST_CASE("transform identity, translation, inverse") {
  Sweep s;
  s.points.push_back({{0, 0, 0}, 7});
  s.points.push_back({{1, 2, 3}, 9});

  RigidTransform id;
  Sweep t = transform_sweep(s, id);
  CHECK(t.points[0].position == s.points[0].position);
  CHECK(t.points[1].position == s.points[1].position);

  RigidTransform shift;
  shift.translation = Eigen::Vector3d(1, 0, 0);
  CHECK(transform_sweep(s, shift).points[0].position == Eigen::Vector3d(1, 0, 0));

  RigidTransform rot;
  rot.rotation = Eigen::AngleAxisd(0.7, Eigen::Vector3d(1, 2, -1).normalized()).toRotationMatrix();
  rot.translation = Eigen::Vector3d(4, -5, 6);
  Sweep back = transform_sweep(transform_sweep(s, rot), rot.inverse());
  for (size_t i = 0; i < s.points.size(); ++i) {
    CHECK((back.points[i].position - s.points[i].position).norm() < 1e-9);
    CHECK(back.points[i].intensity == s.points[i].intensity);
  }
}

TEST_CASE("transform preserves pairwise distances") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-10, 10);
  Sweep s;
  for (int i = 0; i < 50; ++i) s.points.push_back({{u(rng), u(rng), u(rng)}, 0});
  RigidTransform T;
  T.rotation = Eigen::AngleAxisd(1.1, Eigen::Vector3d(0.3, -1, 2).normalized()).toRotationMatrix();
  T.translation = Eigen::Vector3d(100, -3, 0.5);
  Sweep t = transform_sweep(s, T);
  for (size_t i = 0; i < s.points.size(); ++i)
    for (size_t j = i + 1; j < s.points.size(); ++j) {
      double d0 = (s.points[i].position - s.points[j].position).norm();
      double d1 = (t.points[i].position - t.points[j].position).norm();
      CHECK(std::abs(d0 - d1) <= 1e-9 * std::max(1.0, d0));
    }
}

TEST_CASE("synthetic generator is deterministic") {
  SweepStream a = generate_synthetic_stream(7, 2);
  SweepStream b = generate_synthetic_stream(7, 2);
  CHECK(serialize_stream(a) == serialize_stream(b));
  CHECK(serialize_stream(a) != serialize_stream(generate_synthetic_stream(8, 2)));
}

TEST_CASE("synthetic zero obstacles puts all points on the ground plane") {
  SceneParams p;
  p.n_obstacles = 0;
  SweepStream s = generate_synthetic_stream(4, 1, p);
  REQUIRE(!s.sweeps[0].points.empty());
  for (const Point& pt : s.sweeps[0].points) CHECK(pt.position.z() == doctest::Approx(p.ground_z).epsilon(1e-9));
}

TEST_CASE("synthetic obstacles move by velocity*dt between sweeps") {
  SceneParams p;
  p.n_obstacles = 1;
  p.intensity_noise = 0.0;
  SweepStream s = generate_synthetic_stream(11, 2, p);
  // obstacle points carry the obstacle intensity band; ground points do not
  auto centroid = [&](const Sweep& sw) {
    Eigen::Vector3d c = Eigen::Vector3d::Zero();
    int n = 0;
    for (const Point& pt : sw.points)
      if (pt.intensity >= p.obstacle_base - 10) {
        c += pt.position;
        ++n;
      }
    REQUIRE(n > 10);
    return Eigen::Vector3d(c / n);
  };
  Eigen::Vector3d delta = centroid(s.sweeps[1]) - centroid(s.sweeps[0]);
  Eigen::Vector3d expect = p.velocity * p.dt;
  // sampling noise: the ray pattern hits slightly different surface points
  CHECK((delta - expect).norm() < 0.35 * std::max(0.2, expect.norm()) + 0.05);
}

TEST_CASE("stream file round trip") {
  SweepStream s = generate_synthetic_stream(5, 3);
  s.sweeps[1].pose = RigidTransform{};
  s.sweeps[1].pose->translation = Eigen::Vector3d(0.5, 0, 0);
  SweepStream r = parse_stream(serialize_stream(s));
  REQUIRE(r.sweeps.size() == s.sweeps.size());
  CHECK(r.roi.side == s.roi.side);
  CHECK(r.sweeps[1].pose.has_value());
  CHECK(!r.sweeps[0].pose.has_value());
  CHECK(serialize_stream(r) == serialize_stream(s));
}

TEST_CASE("stream parser rejects garbage") {
  std::vector<uint8_t> junk = {'M', 'S', 'L', 'X', 0, 0};
  CHECK_THROWS_AS(parse_stream(junk), FormatError);
  SweepStream s = generate_synthetic_stream(5, 1);
  std::vector<uint8_t> bytes = serialize_stream(s);
  bytes.resize(bytes.size() / 2);
  CHECK_THROWS(parse_stream(bytes));
}
