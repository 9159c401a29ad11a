#include "mslc/nn/layers.hpp"

#include <cmath>

namespace mslc::nn {

Mlp::Mlp(std::string name, std::vector<int> dims, std::mt19937_64& rng, bool relu_last)
    : dims_(std::move(dims)), relu_last_(relu_last) {
  for (size_t l = 0; l + 1 < dims_.size(); ++l) {
    int fan_in = dims_[l], fan_out = dims_[l + 1];
    double limit = std::sqrt(6.0 / static_cast<double>(fan_in));
    std::uniform_real_distribution<double> u(-limit, limit);
    Mat w(fan_in, fan_out);
    for (Eigen::Index r = 0; r < w.rows(); ++r)
      for (Eigen::Index c = 0; c < w.cols(); ++c) w(r, c) = u(rng);
    weights_.emplace_back(name + ".w" + std::to_string(l), std::move(w));
    biases_.emplace_back(name + ".b" + std::to_string(l), Mat::Zero(1, fan_out));
  }
}

void Mlp::zero_last_layer() {
  if (!weights_.empty()) weights_.back().value.setZero();
}

Graph::Id Mlp::apply(Graph& g, Graph::Id x) const {
  Graph::Id h = x;
  for (size_t l = 0; l < weights_.size(); ++l) {
    h = g.add_bias(g.matmul(h, g.param(&weights_[l])), g.param(&biases_[l]));
    if (l + 1 < weights_.size() || relu_last_) h = g.relu(h);
  }
  return h;
}

std::vector<Tensor*> Mlp::params() {
  std::vector<Tensor*> out;
  for (auto& w : weights_) out.push_back(&w);
  for (auto& b : biases_) out.push_back(&b);
  return out;
}

std::vector<const Tensor*> Mlp::params() const {
  std::vector<const Tensor*> out;
  for (const auto& w : weights_) out.push_back(&w);
  for (const auto& b : biases_) out.push_back(&b);
  return out;
}

Graph::Id continuous_conv(Graph& g, const Mlp& kernel, Graph::Id displacements,
                          Graph::Id features, std::vector<int> query_of,
                          Eigen::Index n_queries) {
  if (g.value(displacements).rows() == 0)
    return g.zeros(n_queries, g.value(features).cols());
  Graph::Id gate = kernel.apply(g, displacements);
  Graph::Id gated = g.cmul(gate, features);
  return g.scatter_sum(gated, std::move(query_of), n_queries);
}

void Adam::step(const std::vector<Tensor*>& params) {
  if (m_.empty()) {
    for (const Tensor* p : params) {
      m_.push_back(Mat::Zero(p->value.rows(), p->value.cols()));
      v_.push_back(Mat::Zero(p->value.rows(), p->value.cols()));
    }
  }
  if (m_.size() != params.size()) throw TrainingError("Adam: parameter set changed");
  ++t_;
  double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
  double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
  for (size_t i = 0; i < params.size(); ++i) {
    Tensor* p = params[i];
    if (!p->grad.allFinite())
      throw TrainingError("non-finite gradient in parameter " + p->name);
    m_[i] = cfg_.beta1 * m_[i] + (1.0 - cfg_.beta1) * p->grad;
    v_[i] = cfg_.beta2 * v_[i].array().matrix() +
            (1.0 - cfg_.beta2) * p->grad.cwiseProduct(p->grad);
    Mat mhat = m_[i] / bc1;
    Mat vhat = v_[i] / bc2;
    p->value.array() -= cfg_.lr * mhat.array() / (vhat.array().sqrt() + cfg_.eps);
    p->zero_grad();
  }
}

}  // namespace mslc::nn
