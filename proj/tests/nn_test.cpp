#include <doctest.h>

#include <random>

#include "grad_check.hpp"
#include "mslc/nn/checkpoint.hpp"
#include "mslc/nn/layers.hpp"

using namespace mslc;
using nn::Graph;
using nn::Mat;
using nn::Mlp;
using nn::Tensor;

namespace {
void fill(std::vector<Tensor*> params, double v) {
  for (Tensor* p : params) p->value.setConstant(v);
}

Mat randm(Eigen::Index r, Eigen::Index c, std::mt19937_64& rng, double scale = 1.0) {
  std::uniform_real_distribution<double> u(-scale, scale);
  Mat m(r, c);
  for (Eigen::Index i = 0; i < r; ++i)
    for (Eigen::Index j = 0; j < c; ++j) m(i, j) = u(rng);
  return m;
}
}  // namespace

TEST_CASE("mlp zero weights give zero output") {
  std::mt19937_64 rng(1);
  Mlp m("m", {3, 4, 2}, rng);
  fill(m.params(), 0.0);
  Graph g;
  CHECK(g.value(m.apply(g, g.input(Mat::Random(5, 3)))).isZero(0.0));
}

TEST_CASE("identity linear layer passes input through") {
  std::mt19937_64 rng(1);
  Mlp m("m", {3, 3}, rng);
  auto params = m.params();
  params[0]->value = Mat::Identity(3, 3);
  params[1]->value.setZero();
  Graph g;
  Mat x = Mat::Random(4, 3);
  CHECK(g.value(m.apply(g, g.input(x))) == x);
}

TEST_CASE("two-layer mlp matches hand computation") {
  std::mt19937_64 rng(1);
  Mlp m("m", {2, 2, 1}, rng);
  auto p = m.params();  // w0, w1, b0, b1
  p[0]->value << 1, -1, 0, 1;
  p[1]->value << 2, 1;
  p[2]->value << 0.5, -3;
  p[3]->value << -1;
  Graph g;
  Mat x(1, 2);
  x << 1, 2;
  // x·W0+b0 = (1.5, -2) → relu (1.5, 0) → ·W1+b1 = 3-1 = 2
  CHECK(g.value(m.apply(g, g.input(x)))(0, 0) == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("continuous conv basics") {
  std::mt19937_64 rng(2);
  Mlp kernel("k", {3, 4}, rng);

  SUBCASE("no neighbors -> zero feature") {
    Graph g;
    Graph::Id out = nn::continuous_conv(g, kernel, g.zeros(0, 3), g.zeros(0, 4), {}, 2);
    CHECK(g.value(out).rows() == 2);
    CHECK(g.value(out).isZero(0.0));
  }

  SUBCASE("kernel of all ones at zero displacement returns the neighbor feature") {
    auto p = kernel.params();
    p[0]->value.setZero();
    p[1]->value.setOnes();
    Graph g;
    Mat f = Mat::Random(1, 4);
    Graph::Id out = nn::continuous_conv(g, kernel, g.zeros(1, 3), g.input(f), {0}, 1);
    CHECK(g.value(out) == f);
  }

  SUBCASE("permutation of the neighbor list does not change the output") {
    Mat d = randm(6, 3, rng), f = randm(6, 4, rng);
    std::vector<int> q = {0, 1, 0, 1, 0, 1};
    Graph g1;
    Mat a = g1.value(nn::continuous_conv(g1, kernel, g1.input(d), g1.input(f), q, 2));
    std::vector<int> perm = {4, 2, 0, 5, 3, 1};
    Mat dp(6, 3), fp(6, 4);
    std::vector<int> qp(6);
    for (int i = 0; i < 6; ++i) {
      dp.row(i) = d.row(perm[static_cast<size_t>(i)]);
      fp.row(i) = f.row(perm[static_cast<size_t>(i)]);
      qp[static_cast<size_t>(i)] = q[static_cast<size_t>(perm[static_cast<size_t>(i)])];
    }
    Graph g2;
    Mat b = g2.value(nn::continuous_conv(g2, kernel, g2.input(dp), g2.input(fp), qp, 2));
    CHECK((a - b).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("softmax cross entropy closed forms") {
  SUBCASE("equal logits -> uniform, ln 256") {
    Graph g;
    Graph::Id l = g.softmax_xent(g.zeros(3, 256), {0, 100, 255});
    CHECK(g.value(l)(0, 0) == doctest::Approx(std::log(256.0)).epsilon(1e-12));
    CHECK(g.probs(l)(1, 7) == doctest::Approx(1.0 / 256).epsilon(1e-12));
    for (int r = 0; r < 3; ++r) CHECK(g.probs(l).row(r).sum() == doctest::Approx(1.0).epsilon(1e-9));
  }
  SUBCASE("saturated target logit -> loss near zero") {
    Mat logits = Mat::Zero(1, 256);
    logits(0, 42) = 1000.0;
    Graph g;
    CHECK(g.value(g.softmax_xent(g.input(logits), {42}))(0, 0) < 1e-12);
  }
  SUBCASE("two-symbol closed form") {
    Mat logits(1, 2);
    logits << std::log(3.0), std::log(1.0);
    Graph g;
    Graph::Id s = g.softmax(g.input(logits));
    CHECK(g.value(s)(0, 0) == doctest::Approx(0.75).epsilon(1e-12));
    CHECK(g.value(s)(0, 1) == doctest::Approx(0.25).epsilon(1e-12));
  }
}

TEST_CASE("gradient check: every op") {
  std::mt19937_64 rng(11);
  Tensor a("a", randm(4, 3, rng));
  Tensor b("b", randm(3, 5, rng));
  Tensor bias("bias", randm(1, 5, rng));
  Tensor c("c", randm(4, 5, rng));
  std::vector<int> targets = {1, 4, 0, 2};

  auto run = [&](bool back) {
    Graph g;
    Graph::Id x = g.matmul(g.param(&a), g.param(&b));        // 4x5
    x = g.add_bias(x, g.param(&bias));
    x = g.relu(x);
    x = g.cmul(x, g.param(&c));
    x = g.add(x, g.param(&c));
    x = g.concat(x, g.gather(x, {2, 0, 3, 1}));              // 4x10
    x = g.scatter_sum(x, {1, 0, 1, 0}, 2);                   // 2x10
    x = g.gather(x, {0, 1, 1, 0});                           // back to 4 rows
    Graph::Id l = g.softmax_xent(g.concat(x, x), targets);   // 4x20 logits
    double v = g.value(l)(0, 0);
    if (back) g.backward(l);
    return v;
  };
  CHECK(test::max_grad_error({&a, &b, &bias, &c}, run) < 1e-4);
}

TEST_CASE("gradient check: mlp stack and continuous conv") {
  std::mt19937_64 rng(12);
  Mlp trunk("t", {3, 6, 4}, rng);
  Mlp kernel("k", {3, 5, 4}, rng);
  Tensor disp("d", randm(7, 3, rng));
  Tensor feat("f", randm(7, 3, rng));
  std::vector<int> q = {0, 0, 1, 1, 2, 2, 2};
  std::vector<int> targets = {3, 0, 1};

  auto run = [&](bool back) {
    Graph g;
    Graph::Id h = trunk.apply(g, g.param(&feat));  // 7x4 neighbor features
    Graph::Id out = nn::continuous_conv(g, kernel, g.param(&disp), h, q, 3);
    Graph::Id l = g.softmax_xent(out, targets);
    double v = g.value(l)(0, 0);
    if (back) g.backward(l);
    return v;
  };
  std::vector<Tensor*> params = {&disp, &feat};
  for (Tensor* p : trunk.params()) params.push_back(p);
  for (Tensor* p : kernel.params()) params.push_back(p);
  CHECK(test::max_grad_error(params, run) < 1e-4);
}

TEST_CASE("gradient check: deep-set aggregation") {
  std::mt19937_64 rng(13);
  Mlp f2("f2", {4, 4, 3}, rng);
  Mlp f1("f1", {7, 5, 4}, rng);
  Tensor children("c", randm(6, 4, rng));
  Tensor own("h", randm(2, 4, rng));
  std::vector<int> parent = {0, 1, 0, 0, 1, 1};
  std::vector<int> targets = {2, 0};

  auto run = [&](bool back) {
    Graph g;
    Graph::Id sum = g.scatter_sum(f2.apply(g, g.param(&children)), parent, 2);
    Graph::Id out = f1.apply(g, g.concat(g.param(&own), sum));
    Graph::Id l = g.softmax_xent(out, targets);
    double v = g.value(l)(0, 0);
    if (back) g.backward(l);
    return v;
  };
  std::vector<Tensor*> params = {&children, &own};
  for (Tensor* p : f2.params()) params.push_back(p);
  for (Tensor* p : f1.params()) params.push_back(p);
  CHECK(test::max_grad_error(params, run) < 1e-4);
}

TEST_CASE("adam converges on a quadratic") {
  Tensor w("w", Mat::Ones(1, 4));
  nn::Adam opt({1e-2, 0.9, 0.999, 1e-8});
  for (int i = 0; i < 1000; ++i) {
    Graph g;
    Graph::Id p = g.param(&w);
    Graph::Id l = g.matmul(g.cmul(p, p), g.input(Mat::Ones(4, 1)));
    g.backward(l);
    opt.step({&w});
  }
  CHECK(w.value.cwiseAbs().maxCoeff() < 1e-3);
}

TEST_CASE("adam leaves parameters unchanged on zero gradient") {
  Tensor w("w", Mat::Constant(2, 2, 0.5));
  nn::Adam opt;
  opt.step({&w});
  CHECK(w.value == Mat::Constant(2, 2, 0.5));
}

TEST_CASE("adam rejects non-finite gradients with the parameter name") {
  Tensor w("special_name", Mat::Ones(1, 1));
  w.grad(0, 0) = std::numeric_limits<double>::quiet_NaN();
  nn::Adam opt;
  try {
    opt.step({&w});
    FAIL("expected TrainingError");
  } catch (const nn::TrainingError& e) {
    CHECK(std::string(e.what()).find("special_name") != std::string::npos);
  }
}

TEST_CASE("training is bitwise reproducible") {
  auto train = [] {
    std::mt19937_64 rng(21);
    Mlp m("m", {3, 8, 4}, rng);
    nn::Adam opt;
    Mat x = randm(6, 3, rng);
    std::vector<int> t = {0, 1, 2, 3, 0, 1};
    for (int i = 0; i < 50; ++i) {
      Graph g;
      g.backward(g.softmax_xent(m.apply(g, g.input(x)), t));
      opt.step(m.params());
    }
    auto params = m.params();
    return nn::Checkpoint::capture(std::vector<const Tensor*>(params.begin(), params.end()));
  };
  CHECK(train().serialize() == train().serialize());
}

TEST_CASE("checkpoint round trip and integrity") {
  std::mt19937_64 rng(31);
  Mlp m("m", {3, 5, 2}, rng);
  auto mparams = m.params();
  nn::Checkpoint ck =
      nn::Checkpoint::capture(std::vector<const Tensor*>(mparams.begin(), mparams.end()));
  ck.model_kind = "test/kind";
  ck.depth = 9;
  ck.seed = 123;
  ck.step = 7;

  nn::Checkpoint back = nn::Checkpoint::parse(ck.serialize());
  CHECK(back.model_kind == "test/kind");
  CHECK(back.depth == 9);
  CHECK(back.seed == 123);
  CHECK(back.step == 7);
  CHECK(back.hash() == ck.hash());

  std::mt19937_64 rng2(32);
  Mlp other("m", {3, 5, 2}, rng2);
  back.restore_into(other.params());
  Graph g1, g2;
  Mat x = Mat::Random(2, 3);
  CHECK(g1.value(m.apply(g1, g1.input(x))) == g2.value(other.apply(g2, g2.input(x))));

  // shape mismatch is rejected
  Mlp wrong("m", {3, 6, 2}, rng2);
  CHECK_THROWS(back.restore_into(wrong.params()));

  // value change shows up in the hash
  nn::Checkpoint tampered = back;
  tampered.tensors[0].second(0, 0) += 1.0;
  CHECK(tampered.hash() != back.hash());
}
