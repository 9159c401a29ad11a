#include "mslc/metrics.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <stdexcept>

#include "mslc/neighbors.hpp"

namespace mslc {

namespace {
std::vector<Eigen::Vector3d> positions(const Sweep& s) {
  std::vector<Eigen::Vector3d> p;
  p.reserve(s.points.size());
  for (const Point& pt : s.points) p.push_back(pt.position);
  return p;
}
}  // namespace

double f1_score(const Sweep& original, const Sweep& recon, const MetricConfig& cfg) {
  if (original.points.empty() && recon.points.empty()) return 1.0;
  if (original.points.empty() || recon.points.empty()) return 0.0;

  SpatialIndex orig_idx(positions(original));
  size_t tp = 0;
  std::vector<char> found(original.points.size(), 0);
  for (const Point& r : recon.points) {
    bool matched = false;
    for (const auto& hit : orig_idx.within(r.position, cfg.tau_geo)) {
      int di = std::abs(static_cast<int>(original.points[static_cast<size_t>(hit.id)].intensity) -
                        static_cast<int>(r.intensity));
      if (di <= cfg.tau_int) {
        matched = true;
        found[static_cast<size_t>(hit.id)] = 1;
      }
    }
    if (matched) ++tp;
  }
  size_t fp = recon.points.size() - tp;
  size_t fn = 0;
  for (char f : found)
    if (!f) ++fn;
  return 2.0 * static_cast<double>(tp) /
         (2.0 * static_cast<double>(tp) + static_cast<double>(fp) + static_cast<double>(fn));
}

double chamfer_sym(const Sweep& original, const Sweep& recon) {
  if (original.points.empty() || recon.points.empty())
    throw std::invalid_argument("chamfer_sym: undefined for an empty cloud");
  SpatialIndex a(positions(original)), b(positions(recon));
  auto directed = [](const std::vector<Point>& from, const SpatialIndex& to) {
    double sum = 0.0;
    for (const Point& p : from) sum += to.knn(p.position, 1)[0].distance;
    return sum / static_cast<double>(from.size());
  };
  return std::max(directed(original.points, b), directed(recon.points, a));
}

namespace {
// Unit normal of the PCA plane through `pts`; smallest-eigenvalue
// eigenvector, deterministic tie handling via the solver's fixed ordering.
Eigen::Vector3d pca_normal(const std::vector<Eigen::Vector3d>& pts, bool* degenerate) {
  if (pts.size() < 3) {
    *degenerate = true;
    return Eigen::Vector3d::UnitZ();
  }
  Eigen::Vector3d mean = Eigen::Vector3d::Zero();
  for (const auto& p : pts) mean += p;
  mean /= static_cast<double>(pts.size());
  Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
  for (const auto& p : pts) {
    Eigen::Vector3d d = p - mean;
    cov += d * d.transpose();
  }
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(cov);
  Eigen::Vector3d ev = es.eigenvalues();
  if (ev[1] - ev[0] <= 1e-12 * std::max(1.0, ev[2])) *degenerate = true;
  Eigen::Vector3d n = es.eigenvectors().col(0);
  return n.normalized();
}
}  // namespace

PsnrResult psnr_d2(const Sweep& original, const Sweep& recon, const MetricConfig& cfg) {
  if (original.points.empty() || recon.points.empty())
    throw std::invalid_argument("psnr_d2: undefined for an empty cloud");
  auto op = positions(original);
  auto rp = positions(recon);
  SpatialIndex oi(op), ri(rp);

  PsnrResult res;
  std::vector<Eigen::Vector3d> normals(op.size());
  for (size_t i = 0; i < op.size(); ++i) {
    std::vector<Eigen::Vector3d> nb;
    for (const auto& hit : oi.knn(op[i], cfg.normal_k + 1)) nb.push_back(op[static_cast<size_t>(hit.id)]);
    bool degen = false;
    normals[i] = pca_normal(nb, &degen);
    res.degenerate_normals = res.degenerate_normals || degen;
  }

  double mse_fwd = 0.0;  // original -> reconstruction
  for (size_t i = 0; i < op.size(); ++i) {
    const Eigen::Vector3d& q = rp[static_cast<size_t>(ri.knn(op[i], 1)[0].id)];
    double e = (op[i] - q).dot(normals[i]);
    mse_fwd += e * e;
  }
  mse_fwd /= static_cast<double>(op.size());

  double mse_bwd = 0.0;  // reconstruction -> original
  for (size_t j = 0; j < rp.size(); ++j) {
    int i = oi.knn(rp[j], 1)[0].id;
    double e = (rp[j] - op[static_cast<size_t>(i)]).dot(normals[static_cast<size_t>(i)]);
    mse_bwd += e * e;
  }
  mse_bwd /= static_cast<double>(rp.size());

  double mse = std::max(mse_fwd, mse_bwd);
  if (mse <= 0.0) {
    res.db = 999.0;
    return res;
  }
  res.db = std::min(999.0, 10.0 * std::log10(3.0 * cfg.peak_r * cfg.peak_r / mse));
  return res;
}

double peak_constant(const SweepStream& s, int* skipped) {
  double r = 0.0;
  int skip = 0;
  for (const Sweep& sw : s.sweeps) {
    if (sw.points.size() < 2) {
      ++skip;
      continue;
    }
    SpatialIndex idx(positions(sw));
    for (const Point& p : sw.points) {
      auto hits = idx.knn(p.position, 2);  // hits[0] is the point itself
      r = std::max(r, hits[1].distance);
    }
  }
  if (skipped) *skipped = skip;
  return r;
}

BitrateReport bitrate(const std::vector<FrameStats>& frames) {
  BitrateReport rep;
  for (const FrameStats& f : frames) {
    rep.points += f.orig_points;
    rep.total_bits += 8ull * f.frame_bytes;
    rep.spatial_bits += 8ull * (f.occ_bytes + f.leaf_bytes);
  }
  if (rep.points == 0) throw std::invalid_argument("bitrate: zero original points");
  rep.bpp_total = static_cast<double>(rep.total_bits) / static_cast<double>(rep.points);
  rep.bpp_spatial = static_cast<double>(rep.spatial_bits) / static_cast<double>(rep.points);
  return rep;
}

}  // namespace mslc
