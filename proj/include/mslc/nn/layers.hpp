#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "mslc/nn/graph.hpp"

namespace mslc::nn {

// Fully connected stack with ReLU between layers (optional on the last).
class Mlp {
 public:
  Mlp() = default;
  // dims = {in, h1, ..., out}. He-uniform fan-in init, zero biases.
  Mlp(std::string name, std::vector<int> dims, std::mt19937_64& rng, bool relu_last = false);

  Graph::Id apply(Graph& g, Graph::Id x) const;

  // Zero the final layer so the stack starts as the zero function. Used for
  // residual-style branches that must not perturb the trunk at init.
  void zero_last_layer();

  std::vector<Tensor*> params();
  std::vector<const Tensor*> params() const;

  int in_dim() const { return dims_.empty() ? 0 : dims_.front(); }
  int out_dim() const { return dims_.empty() ? 0 : dims_.back(); }
  bool empty() const { return weights_.empty(); }

 private:
  std::vector<int> dims_;
  bool relu_last_ = false;
  mutable std::vector<Tensor> weights_;
  mutable std::vector<Tensor> biases_;
};

// Continuous convolution: out_i = sum_{j in N(i)} kernel(p_j - p_i) ⊙ h_j.
// The kernel MLP maps a 3-vector displacement to a gating vector of the
// neighbor feature dimension. `displacements` has one row per (query,
// neighbor) pair, `features` the matching neighbor features, and `query_of`
// maps each pair row to its query row in [0, n_queries).
Graph::Id continuous_conv(Graph& g, const Mlp& kernel, Graph::Id displacements,
                          Graph::Id features, std::vector<int> query_of,
                          Eigen::Index n_queries);

struct AdamConfig {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

class Adam {
 public:
  explicit Adam(AdamConfig cfg = {}) : cfg_(cfg) {}

  // One update over `params` using their accumulated grads, then clears the
  // grads. Throws on non-finite gradients, naming the parameter.
  void step(const std::vector<Tensor*>& params);

  int64_t steps() const { return t_; }

 private:
  AdamConfig cfg_;
  int64_t t_ = 0;
  std::vector<Mat> m_, v_;
};

class TrainingError : public std::runtime_error {
 public:
  explicit TrainingError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace mslc::nn
