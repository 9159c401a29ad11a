#pragma once

#include <cstdint>
#include <vector>

#include "mslc/coder/codec.hpp"
#include "mslc/pointcloud.hpp"

namespace mslc {

struct MetricConfig {
  double tau_geo = 0.1;  // meters
  int tau_int = 0;       // intensity levels
  double peak_r = 59.70; // PSNR peak constant, meters
  int normal_k = 12;     // PCA neighborhood size
};

// Existence-matching F1: a reconstructed point is a true positive when some
// original point lies within tau_geo with intensity within tau_int; an
// original point counts as found when some reconstructed point matches it.
// Multiple reconstructed points may match one original. Both clouds empty
// scores 1, exactly one empty scores 0.
double f1_score(const Sweep& original, const Sweep& recon, const MetricConfig& cfg);

// Symmetric point-to-point Chamfer distance: max of the two directed mean
// nearest-neighbor distances. Throws std::invalid_argument on an empty side.
double chamfer_sym(const Sweep& original, const Sweep& recon);

struct PsnrResult {
  double db = 0.0;
  bool degenerate_normals = false;  // some PCA neighborhood had no unique normal
};

// Point-to-plane PSNR: normals from PCA over each original point and its
// normal_k nearest neighbors; error is the squared projection onto the
// normal of the nearest original point; symmetric max of the two directed
// MSEs; 10*log10(3 r^2 / MSE), capped at 999 dB (zero MSE reports the cap).
PsnrResult psnr_d2(const Sweep& original, const Sweep& recon, const MetricConfig& cfg);

// Dataset peak constant: max over sweeps of the max nearest-neighbor
// distance within a sweep. Sweeps with fewer than 2 points are skipped and
// counted in *skipped when given.
double peak_constant(const SweepStream& s, int* skipped = nullptr);

struct BitrateReport {
  double bpp_total = 0.0;    // all frame bytes (sections + frame metadata)
  double bpp_spatial = 0.0;  // occupancy + leaf-offset sections only
  uint64_t total_bits = 0;
  uint64_t spatial_bits = 0;
  uint64_t points = 0;  // original in-ROI points before quantization
};

// Throws std::invalid_argument when the frames cover zero original points.
BitrateReport bitrate(const std::vector<FrameStats>& frames);

}  // namespace mslc
