#pragma once

#include <Eigen/Dense>
#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace mslc::nn {

using Mat = Eigen::MatrixXd;

// A learnable tensor. Gradients accumulate across Graph::backward calls
// until cleared by the optimizer.
struct Tensor {
  std::string name;
  Mat value;
  Mat grad;

  Tensor() = default;
  Tensor(std::string n, Mat v) : name(std::move(n)), value(std::move(v)) {
    grad = Mat::Zero(value.rows(), value.cols());
  }
  void zero_grad() { grad.setZero(); }
};

// Define-by-run reverse-mode autodiff over dense matrices. Rows are batch
// entries (octree nodes, points), columns are features. One Graph per
// forward pass; values are computed eagerly so inference can read them
// without calling backward.
class Graph {
 public:
  using Id = int;

  Id input(Mat v);
  Id zeros(Eigen::Index rows, Eigen::Index cols) { return input(Mat::Zero(rows, cols)); }
  Id param(Tensor* p);

  Id matmul(Id a, Id b);
  Id add(Id a, Id b);
  // Broadcast a 1xM bias row over every row of a.
  Id add_bias(Id a, Id bias);
  Id relu(Id a);
  Id cmul(Id a, Id b);             // elementwise
  Id concat(Id a, Id b);           // columns
  Id gather(Id a, std::vector<int> rows);
  // Sum rows of `a` into `out_rows` destination rows given by `dst`.
  Id scatter_sum(Id a, std::vector<int> dst, Eigen::Index out_rows);
  Id softmax(Id logits);
  // Mean negative log-likelihood in nats over the batch; 1x1 output.
  // The row-wise probability matrix is cached and readable via probs().
  Id softmax_xent(Id logits, std::vector<int> targets);

  const Mat& value(Id id) const { return nodes_[static_cast<size_t>(id)].value; }
  // Probabilities cached by softmax_xent (or the output of softmax()).
  const Mat& probs(Id xent_id) const { return nodes_[static_cast<size_t>(xent_id)].aux; }

  // Reverse pass seeding d(loss)/d(loss)=1; `loss` must be 1x1. Gradients
  // accumulate into every reachable Tensor's grad.
  void backward(Id loss);

 private:
  struct Node {
    Mat value;
    Mat grad;
    Mat aux;                        // probs for softmax nodes
    Tensor* parameter = nullptr;
    std::vector<Id> inputs;
    std::vector<int> indices;       // gather/scatter rows or xent targets
    Eigen::Index aux_rows = 0;
    enum class Op {
      kInput, kParam, kMatmul, kAdd, kAddBias, kRelu, kCmul, kConcat,
      kGather, kScatterSum, kSoftmax, kSoftmaxXent
    } op = Op::kInput;
  };

  Id push(Node n);
  std::vector<Node> nodes_;
};

// Numerically stable row-wise softmax.
Mat row_softmax(const Mat& logits);

}  // namespace mslc::nn
