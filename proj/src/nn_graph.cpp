#include "mslc/nn/graph.hpp"

#include <cmath>
#include <stdexcept>

namespace mslc::nn {

Mat row_softmax(const Mat& logits) {
  Mat p(logits.rows(), logits.cols());
  for (Eigen::Index r = 0; r < logits.rows(); ++r) {
    double mx = logits.row(r).maxCoeff();
    Eigen::RowVectorXd e = (logits.row(r).array() - mx).exp();
    p.row(r) = e / e.sum();
  }
  return p;
}

Graph::Id Graph::push(Node n) {
  nodes_.push_back(std::move(n));
  return static_cast<Id>(nodes_.size() - 1);
}

Graph::Id Graph::input(Mat v) {
  Node n;
  n.op = Node::Op::kInput;
  n.value = std::move(v);
  return push(std::move(n));
}

Graph::Id Graph::param(Tensor* p) {
  Node n;
  n.op = Node::Op::kParam;
  n.parameter = p;
  n.value = p->value;
  return push(std::move(n));
}

Graph::Id Graph::matmul(Id a, Id b) {
  const Mat &A = value(a), &B = value(b);
  if (A.cols() != B.rows()) throw std::invalid_argument("matmul: inner dims mismatch");
  Node n;
  n.op = Node::Op::kMatmul;
  n.inputs = {a, b};
  n.value = A * B;
  return push(std::move(n));
}

Graph::Id Graph::add(Id a, Id b) {
  const Mat &A = value(a), &B = value(b);
  if (A.rows() != B.rows() || A.cols() != B.cols())
    throw std::invalid_argument("add: shape mismatch");
  Node n;
  n.op = Node::Op::kAdd;
  n.inputs = {a, b};
  n.value = A + B;
  return push(std::move(n));
}

Graph::Id Graph::add_bias(Id a, Id bias) {
  const Mat &A = value(a), &B = value(bias);
  if (B.rows() != 1 || B.cols() != A.cols()) throw std::invalid_argument("add_bias: bad bias");
  Node n;
  n.op = Node::Op::kAddBias;
  n.inputs = {a, bias};
  n.value = A.rowwise() + B.row(0);
  return push(std::move(n));
}

Graph::Id Graph::relu(Id a) {
  Node n;
  n.op = Node::Op::kRelu;
  n.inputs = {a};
  n.value = value(a).cwiseMax(0.0);
  return push(std::move(n));
}

Graph::Id Graph::cmul(Id a, Id b) {
  const Mat &A = value(a), &B = value(b);
  if (A.rows() != B.rows() || A.cols() != B.cols())
    throw std::invalid_argument("cmul: shape mismatch");
  Node n;
  n.op = Node::Op::kCmul;
  n.inputs = {a, b};
  n.value = A.cwiseProduct(B);
  return push(std::move(n));
}

Graph::Id Graph::concat(Id a, Id b) {
  const Mat &A = value(a), &B = value(b);
  if (A.rows() != B.rows()) throw std::invalid_argument("concat: row mismatch");
  Node n;
  n.op = Node::Op::kConcat;
  n.inputs = {a, b};
  n.value.resize(A.rows(), A.cols() + B.cols());
  n.value << A, B;
  return push(std::move(n));
}

Graph::Id Graph::gather(Id a, std::vector<int> rows) {
  const Mat& A = value(a);
  Node n;
  n.op = Node::Op::kGather;
  n.inputs = {a};
  n.value.resize(static_cast<Eigen::Index>(rows.size()), A.cols());
  for (size_t i = 0; i < rows.size(); ++i) n.value.row(static_cast<Eigen::Index>(i)) = A.row(rows[i]);
  n.indices = std::move(rows);
  return push(std::move(n));
}

Graph::Id Graph::scatter_sum(Id a, std::vector<int> dst, Eigen::Index out_rows) {
  const Mat& A = value(a);
  if (static_cast<Eigen::Index>(dst.size()) != A.rows())
    throw std::invalid_argument("scatter_sum: index count mismatch");
  Node n;
  n.op = Node::Op::kScatterSum;
  n.inputs = {a};
  n.value = Mat::Zero(out_rows, A.cols());
  for (size_t i = 0; i < dst.size(); ++i)
    n.value.row(dst[i]) += A.row(static_cast<Eigen::Index>(i));
  n.indices = std::move(dst);
  return push(std::move(n));
}

Graph::Id Graph::softmax(Id logits) {
  Node n;
  n.op = Node::Op::kSoftmax;
  n.inputs = {logits};
  n.value = row_softmax(value(logits));
  n.aux = n.value;
  return push(std::move(n));
}

Graph::Id Graph::softmax_xent(Id logits, std::vector<int> targets) {
  const Mat& L = value(logits);
  if (static_cast<Eigen::Index>(targets.size()) != L.rows())
    throw std::invalid_argument("softmax_xent: target count mismatch");
  Node n;
  n.op = Node::Op::kSoftmaxXent;
  n.inputs = {logits};
  n.aux = row_softmax(L);
  double loss = 0.0;
  for (Eigen::Index r = 0; r < L.rows(); ++r) {
    int t = targets[static_cast<size_t>(r)];
    if (t < 0 || t >= L.cols()) throw std::invalid_argument("softmax_xent: target out of range");
    // -log p computed from logits directly for stability
    double mx = L.row(r).maxCoeff();
    double lse = std::log((L.row(r).array() - mx).exp().sum()) + mx;
    loss += lse - L(r, t);
  }
  n.value = Mat::Constant(1, 1, loss / static_cast<double>(L.rows()));
  n.indices = std::move(targets);
  return push(std::move(n));
}

void Graph::backward(Id loss) {
  if (value(loss).size() != 1) throw std::invalid_argument("backward: loss must be 1x1");
  for (Node& n : nodes_) n.grad = Mat::Zero(n.value.rows(), n.value.cols());
  nodes_[static_cast<size_t>(loss)].grad(0, 0) = 1.0;

  for (Id id = loss; id >= 0; --id) {
    Node& n = nodes_[static_cast<size_t>(id)];
    if (n.grad.size() == 0 || n.grad.isZero(0.0)) continue;
    const Mat& g = n.grad;
    switch (n.op) {
      case Node::Op::kInput:
        break;
      case Node::Op::kParam:
        n.parameter->grad += g;
        break;
      case Node::Op::kMatmul: {
        Node& a = nodes_[static_cast<size_t>(n.inputs[0])];
        Node& b = nodes_[static_cast<size_t>(n.inputs[1])];
        a.grad.noalias() += g * b.value.transpose();
        b.grad.noalias() += a.value.transpose() * g;
        break;
      }
      case Node::Op::kAdd:
        nodes_[static_cast<size_t>(n.inputs[0])].grad += g;
        nodes_[static_cast<size_t>(n.inputs[1])].grad += g;
        break;
      case Node::Op::kAddBias:
        nodes_[static_cast<size_t>(n.inputs[0])].grad += g;
        nodes_[static_cast<size_t>(n.inputs[1])].grad.row(0) += g.colwise().sum();
        break;
      case Node::Op::kRelu: {
        Node& a = nodes_[static_cast<size_t>(n.inputs[0])];
        a.grad.array() += g.array() * (a.value.array() > 0.0).cast<double>();
        break;
      }
      case Node::Op::kCmul: {
        Node& a = nodes_[static_cast<size_t>(n.inputs[0])];
        Node& b = nodes_[static_cast<size_t>(n.inputs[1])];
        a.grad.array() += g.array() * b.value.array();
        b.grad.array() += g.array() * a.value.array();
        break;
      }
      case Node::Op::kConcat: {
        Node& a = nodes_[static_cast<size_t>(n.inputs[0])];
        Node& b = nodes_[static_cast<size_t>(n.inputs[1])];
        a.grad += g.leftCols(a.value.cols());
        b.grad += g.rightCols(b.value.cols());
        break;
      }
      case Node::Op::kGather: {
        Node& a = nodes_[static_cast<size_t>(n.inputs[0])];
        for (size_t i = 0; i < n.indices.size(); ++i)
          a.grad.row(n.indices[i]) += g.row(static_cast<Eigen::Index>(i));
        break;
      }
      case Node::Op::kScatterSum: {
        Node& a = nodes_[static_cast<size_t>(n.inputs[0])];
        for (size_t i = 0; i < n.indices.size(); ++i)
          a.grad.row(static_cast<Eigen::Index>(i)) += g.row(n.indices[i]);
        break;
      }
      case Node::Op::kSoftmax: {
        Node& a = nodes_[static_cast<size_t>(n.inputs[0])];
        for (Eigen::Index r = 0; r < n.value.rows(); ++r) {
          double dot = g.row(r).dot(n.value.row(r));
          a.grad.row(r).array() +=
              n.value.row(r).array() * (g.row(r).array() - dot);
        }
        break;
      }
      case Node::Op::kSoftmaxXent: {
        Node& a = nodes_[static_cast<size_t>(n.inputs[0])];
        double scale = g(0, 0) / static_cast<double>(n.aux.rows());
        Mat d = n.aux;
        for (size_t i = 0; i < n.indices.size(); ++i)
          d(static_cast<Eigen::Index>(i), n.indices[i]) -= 1.0;
        a.grad += scale * d;
        break;
      }
    }
  }
}

}  // namespace mslc::nn
