#include <doctest.h>

#include <algorithm>
#include <random>
#include <set>

#include "mslc/binio.hpp"
#include "mslc/compressor.hpp"
#include "mslc/octree.hpp"

using namespace mslc;

namespace {
RegionOfInterest roi4() {
  RegionOfInterest r;
  r.side = 4.0;
  return r;
}

Sweep one_point(double x, double y, double z, uint8_t inten = 17) {
  Sweep s;
  s.points.push_back({{x, y, z}, inten});
  return s;
}

std::mt19937_64 rng(99);

Sweep random_sweep(int n, double extent) {
  std::uniform_real_distribution<double> u(-extent / 2, extent / 2);
  std::uniform_int_distribution<int> ui(0, 255);
  Sweep s;
  for (int i = 0; i < n; ++i)
    s.points.push_back({{u(rng), u(rng), u(rng)}, static_cast<uint8_t>(ui(rng))});
  return s;
}

// set of (depth-D cell, intensity) pairs — the quantized content of a sweep
std::set<std::array<uint32_t, 4>> cell_set(const Sweep& s, const RegionOfInterest& roi, int d) {
  std::set<std::array<uint32_t, 4>> out;
  for (const Point& p : s.points) {
    if (!roi.contains(p.position)) continue;
    auto c = quantize_cell(p.position, roi, d);
    out.insert({c[0], c[1], c[2], p.intensity});
  }
  return out;
}
}  // namespace

TEST_CASE("hand example: one point at depth 2") {
  SerializedOctree o = build_octree(one_point(0.6, -1.4, 0.2), roi4(), 2);
  CHECK(o.occupancy_stream == std::vector<uint8_t>{0x20, 0x01});
  REQUIRE(o.leaf_stream.size() == 1);
  CHECK(o.leaf_stream[0].level == 2);
  CHECK(o.leaf_stream[0].intensity == 17);

  Sweep r = reconstruct(o, roi4());
  REQUIRE(r.points.size() == 1);
  CHECK(r.points[0].position == Eigen::Vector3d(0.5, -1.5, 0.5));
  CHECK(r.points[0].intensity == 17);
}

TEST_CASE("one point at depth 3 stops at level 1 with 6 offset bits") {
  SerializedOctree o = build_octree(one_point(0.6, -1.4, 0.2), roi4(), 3);
  REQUIRE(o.occupancy_stream.size() == 2);  // root mask + 0x00 marker
  CHECK(o.occupancy_stream[1] == 0x00);
  REQUIRE(o.leaf_stream.size() == 1);
  CHECK(o.leaf_stream[0].level == 1);
  // 3*(3-1) = 6 offset bits
  CHECK(pack_leaf_offsets(o).size() == 1);
}

TEST_CASE("empty sweep gives empty streams") {
  SerializedOctree o = build_octree(Sweep{}, roi4(), 2);
  CHECK(o.occupancy_stream.empty());
  CHECK(o.leaf_stream.empty());
  CHECK(reconstruct(o, roi4()).points.empty());
}

TEST_CASE("parser hand examples") {
  ParsedOctree t = parse_occupancy_stream({0x20, 0x01}, 2);
  CHECK(t.nodes.size() == 2);
  CHECK(t.level_begin == std::vector<int>{0, 1, 2});
  CHECK(t.nodes[0].level == 0);
  CHECK(t.nodes[1].level == 1);
  CHECK(t.nodes[1].parent == 0);

  ParsedOctree full = parse_occupancy_stream({0xFF}, 1);
  CHECK(full.nodes.size() == 1);
  CHECK(full.leaves.size() == 8);

  CHECK(parse_occupancy_stream({}, 5).nodes.empty());
}

TEST_CASE("parser rejects truncated and misplaced-marker streams") {
  CHECK_THROWS_AS(parse_occupancy_stream({0x03}, 2), CorruptionError);  // level 1 missing
  // marker at level D-1 is illegal (only levels 1..D-2) and so is a root marker
  CHECK_THROWS_AS(parse_occupancy_stream({0x01, 0x00}, 2), CorruptionError);
  CHECK_THROWS_AS(parse_occupancy_stream({0x00}, 3), CorruptionError);
}

TEST_CASE("round trip equals quantized input") {
  RegionOfInterest roi;
  roi.side = 40.0;
  for (int d : {1, 3, 6, 10}) {
    Sweep s = random_sweep(300, 39.0);
    SerializedOctree o = build_octree(s, roi, d);
    Sweep r = reconstruct(o, roi);
    // occupied cells match exactly; colliding points keep one original
    // intensity, so the recon pairs are a subset of the original pairs
    std::set<std::array<uint32_t, 3>> rc, sc;
    for (const Point& p : r.points) rc.insert(quantize_cell(p.position, roi, d));
    for (const Point& p : s.points)
      if (roi.contains(p.position)) sc.insert(quantize_cell(p.position, roi, d));
    CHECK(rc == sc);
    CHECK(r.points.size() == rc.size());
    // each cell stores the intensity of the original nearest its center,
    // ties broken by lowest original index
    for (const Point& p : r.points) {
      size_t best = 0;
      double bd = std::numeric_limits<double>::infinity();
      for (size_t i = 0; i < s.points.size(); ++i) {
        double dist = (s.points[i].position - p.position).norm();
        if (dist < bd) {
          bd = dist;
          best = i;
        }
      }
      CHECK(p.intensity == s.points[best].intensity);
    }
  }
}

TEST_CASE("per-axis error bounded by half a cell") {
  RegionOfInterest roi;
  roi.side = 400.0;
  for (int d : {5, 11}) {
    Sweep s = random_sweep(500, 390.0);
    Sweep r = reconstruct(build_octree(s, roi, d), roi);
    double bound = roi.side / std::pow(2.0, d + 1);
    if (d == 11) CHECK(bound == doctest::Approx(0.09765625));
    // every original point has its own cell's center in the reconstruction
    for (const Point& p : s.points) {
      double best = 1e300;
      for (const Point& q : r.points)
        best = std::min(best, (p.position - q.position).cwiseAbs().maxCoeff());
      CHECK(best <= bound + 1e-12);
    }
  }
}

TEST_CASE("build is insensitive to input point order") {
  RegionOfInterest roi;
  roi.side = 20.0;
  Sweep s = random_sweep(200, 19.0);
  SerializedOctree a = build_octree(s, roi, 6);
  Sweep shuffled = s;
  std::shuffle(shuffled.points.begin(), shuffled.points.end(), rng);
  CHECK(build_octree(shuffled, roi, 6) == a);
}

TEST_CASE("leaf offset bit accounting") {
  RegionOfInterest roi;
  roi.side = 20.0;
  SerializedOctree o = build_octree(random_sweep(150, 19.0), roi, 8);
  size_t bits = 0;
  for (const LeafRecord& l : o.leaf_stream) bits += 3 * static_cast<size_t>(8 - l.level);
  CHECK(pack_leaf_offsets(o).size() == (bits + 7) / 8);
}

TEST_CASE("pack/unpack leaf records round trip") {
  RegionOfInterest roi;
  roi.side = 20.0;
  Sweep s = random_sweep(200, 19.0);
  SerializedOctree o = build_octree(s, roi, 7);
  ParsedOctree t = parse_occupancy_stream(o.occupancy_stream, 7);
  std::vector<uint8_t> inten;
  for (const LeafRecord& l : o.leaf_stream) inten.push_back(l.intensity);
  std::vector<LeafRecord> back = unpack_leaf_records(t, pack_leaf_offsets(o), inten);
  REQUIRE(back.size() == o.leaf_stream.size());
  for (size_t i = 0; i < back.size(); ++i) {
    CHECK(back[i].level == o.leaf_stream[i].level);
    CHECK(back[i].offset == o.leaf_stream[i].offset);
    CHECK(back[i].intensity == o.leaf_stream[i].intensity);
  }
}

TEST_CASE("colliding points keep the nearest original intensity") {
  RegionOfInterest roi;
  roi.side = 4.0;
  Sweep s;
  // both quantize into the depth-1 cell centered at (1,1,1)
  s.points.push_back({{1.9, 1.9, 1.9}, 10});
  s.points.push_back({{1.05, 1.05, 1.05}, 20});  // closer to the center
  Sweep r = reconstruct(build_octree(s, roi, 1), roi);
  REQUIRE(r.points.size() == 1);
  CHECK(r.points[0].intensity == 20);
}

TEST_CASE("offset stream compressibility probe") {
  auto zip = make_deflate_compressor();

  // uniformly random offsets: effectively incompressible
  RegionOfInterest roi;
  roi.side = 400.0;
  std::vector<std::vector<uint8_t>> streams;
  for (int i = 0; i < 4; ++i) streams.push_back(pack_leaf_offsets(build_octree(random_sweep(400, 399.0), roi, 12)));
  for (const auto& row : leaf_offset_compressibility_probe(streams, *zip)) {
    CHECK(row.raw_bytes > 100);
    CHECK(row.compressed_bytes >= static_cast<size_t>(0.99 * static_cast<double>(row.raw_bytes)));
  }

  // degenerate all-zero offsets compress heavily
  std::vector<std::vector<uint8_t>> zeros = {std::vector<uint8_t>(4096, 0)};
  auto rep = leaf_offset_compressibility_probe(zeros, *zip);
  CHECK(rep[0].compressed_bytes * 10 < rep[0].raw_bytes);
}
