#pragma once

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <vector>

#include "mslc/metrics.hpp"

// Brute-force O(n^2) reference implementations of the evaluation metrics,
// written against the metric definitions only (no spatial index).
namespace mslc::test {

inline Sweep make_sweep(const std::vector<Eigen::Vector3d>& pos,
                        const std::vector<uint8_t>& inten = {}) {
  Sweep s;
  for (size_t i = 0; i < pos.size(); ++i) {
    Point p;
    p.position = pos[i];
    p.intensity = inten.empty() ? 100 : inten[i];
    s.points.push_back(p);
  }
  return s;
}

inline Sweep random_sweep(std::mt19937_64& rng, int n, double box = 10.0) {
  std::uniform_real_distribution<double> u(-box, box);
  std::vector<Eigen::Vector3d> pos;
  std::vector<uint8_t> inten;
  for (int i = 0; i < n; ++i) {
    pos.emplace_back(u(rng), u(rng), u(rng));
    inten.push_back(static_cast<uint8_t>(rng() % 256));
  }
  return make_sweep(pos, inten);
}

inline double f1_oracle(const Sweep& a, const Sweep& b, const MetricConfig& cfg) {
  if (a.points.empty() && b.points.empty()) return 1.0;
  if (a.points.empty() || b.points.empty()) return 0.0;
  auto matches = [&](const Point& x, const Point& y) {
    return (x.position - y.position).norm() <= cfg.tau_geo &&
           std::abs(int(x.intensity) - int(y.intensity)) <= cfg.tau_int;
  };
  size_t tp = 0, fn = 0;
  for (const Point& r : b.points) {
    bool hit = false;
    for (const Point& o : a.points) hit = hit || matches(o, r);
    if (hit) ++tp;
  }
  for (const Point& o : a.points) {
    bool hit = false;
    for (const Point& r : b.points) hit = hit || matches(o, r);
    if (!hit) ++fn;
  }
  size_t fp = b.points.size() - tp;
  return 2.0 * double(tp) / (2.0 * double(tp) + double(fp) + double(fn));
}

inline double chamfer_oracle(const Sweep& a, const Sweep& b) {
  auto directed = [](const Sweep& from, const Sweep& to) {
    double sum = 0.0;
    for (const Point& p : from.points) {
      double best = std::numeric_limits<double>::infinity();
      for (const Point& q : to.points) best = std::min(best, (p.position - q.position).norm());
      sum += best;
    }
    return sum / double(from.points.size());
  };
  return std::max(directed(a, b), directed(b, a));
}

// nearest index by distance, insertion order breaking ties
inline size_t brute_nn(const Eigen::Vector3d& q, const std::vector<Eigen::Vector3d>& pts) {
  size_t best = 0;
  double bd = std::numeric_limits<double>::infinity();
  for (size_t i = 0; i < pts.size(); ++i) {
    double d = (q - pts[i]).norm();
    if (d < bd) {
      bd = d;
      best = i;
    }
  }
  return best;
}

inline double psnr_oracle(const Sweep& a, const Sweep& b, const MetricConfig& cfg) {
  std::vector<Eigen::Vector3d> op, rp;
  for (const Point& p : a.points) op.push_back(p.position);
  for (const Point& p : b.points) rp.push_back(p.position);

  std::vector<Eigen::Vector3d> normals(op.size());
  for (size_t i = 0; i < op.size(); ++i) {
    std::vector<size_t> order(op.size());
    for (size_t j = 0; j < op.size(); ++j) order[j] = j;
    std::stable_sort(order.begin(), order.end(), [&](size_t x, size_t y) {
      return (op[x] - op[i]).norm() < (op[y] - op[i]).norm();
    });
    size_t k = std::min<size_t>(op.size(), size_t(cfg.normal_k) + 1);
    Eigen::Vector3d mean = Eigen::Vector3d::Zero();
    for (size_t j = 0; j < k; ++j) mean += op[order[j]];
    mean /= double(k);
    Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
    for (size_t j = 0; j < k; ++j) {
      Eigen::Vector3d d = op[order[j]] - mean;
      cov += d * d.transpose();
    }
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(cov);
    normals[i] = es.eigenvectors().col(0).normalized();
  }

  double fwd = 0.0;
  for (size_t i = 0; i < op.size(); ++i) {
    double e = (op[i] - rp[brute_nn(op[i], rp)]).dot(normals[i]);
    fwd += e * e;
  }
  fwd /= double(op.size());
  double bwd = 0.0;
  for (size_t j = 0; j < rp.size(); ++j) {
    size_t i = brute_nn(rp[j], op);
    double e = (rp[j] - op[i]).dot(normals[i]);
    bwd += e * e;
  }
  bwd /= double(rp.size());
  double mse = std::max(fwd, bwd);
  if (mse <= 0.0) return 999.0;
  return std::min(999.0, 10.0 * std::log10(3.0 * cfg.peak_r * cfg.peak_r / mse));
}

}  // namespace mslc::test
