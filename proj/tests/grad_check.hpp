#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "mslc/nn/graph.hpp"

namespace mslc::test {

// Central-difference gradient check. `run(do_backward)` must rebuild the
// forward pass from the current parameter values, return the scalar loss,
// and run backward() when asked. Returns the max relative error over every
// parameter entry.
inline double max_grad_error(const std::vector<nn::Tensor*>& params,
                             const std::function<double(bool)>& run, double h = 1e-5) {
  for (nn::Tensor* p : params) p->zero_grad();
  run(true);
  std::vector<nn::Mat> analytic;
  for (nn::Tensor* p : params) analytic.push_back(p->grad);

  double worst = 0.0;
  for (size_t pi = 0; pi < params.size(); ++pi) {
    nn::Tensor* p = params[pi];
    for (Eigen::Index i = 0; i < p->value.rows(); ++i) {
      for (Eigen::Index j = 0; j < p->value.cols(); ++j) {
        double save = p->value(i, j);
        p->value(i, j) = save + h;
        double lp = run(false);
        p->value(i, j) = save - h;
        double lm = run(false);
        p->value(i, j) = save;
        double numeric = (lp - lm) / (2.0 * h);
        double a = analytic[pi](i, j);
        double rel = std::abs(a - numeric) / std::max({std::abs(a), std::abs(numeric), 1e-4});
        worst = std::max(worst, rel);
      }
    }
  }
  for (nn::Tensor* p : params) p->zero_grad();
  return worst;
}

}  // namespace mslc::test
