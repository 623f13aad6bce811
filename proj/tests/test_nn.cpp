#include "doctest.h"

#include "plan2vec/nn.hpp"

#include "oracles.hpp"

using namespace plan2vec;
using ad::Adam;
using ad::EmbeddingNet;
using ad::Mat;
using ad::Mlp;
using ad::Tape;

TEST_CASE("adam closed-form first step") {
  Mat<float> p(1, 1), g(1, 1);
  p << 1.0f;
  g << 1.0f;
  Adam<float> opt;
  opt.lr = 0.1;
  opt.step({&p}, {&g});
  // bias-corrected mhat / sqrt(vhat) is exactly 1 on the first step
  CHECK(p(0, 0) == doctest::Approx(0.9).epsilon(1e-5));
}

TEST_CASE("adam with zero gradients is the identity") {
  Rng rng(3);
  Mat<float> p = testutil::random_mat(3, 4, rng).cast<float>();
  Mat<float> before = p;
  Mat<float> g = Mat<float>::Zero(3, 4);
  Adam<float> opt;
  opt.lr = 0.05;
  for (int i = 0; i < 5; ++i) opt.step({&p}, {&g});
  CHECK(p == before);
  CHECK(opt.step_count == 5);
}

TEST_CASE("adam runs are deterministic") {
  auto run = [] {
    Rng rng(9);
    Mat<float> p = testutil::random_mat(2, 2, rng).cast<float>();
    Adam<float> opt;
    opt.lr = 0.01;
    for (int i = 0; i < 20; ++i) {
      Mat<float> g = (p.array() * 2.0f).matrix();
      opt.step({&p}, {&g});
    }
    return p;
  };
  CHECK(run() == run());
}

TEST_CASE("full mlp gradient against finite differences") {
  Rng rng(21);
  Mlp<double> net;
  net.init({6, 8, 5, 2}, rng);
  Mat<double> x = testutil::random_mat(4, 6, rng);
  Mat<double> y = testutil::random_mat(4, 1, rng, 0.2, 1.8);

  // probe loss as a function of every parameter matrix
  std::vector<Mat<double>> inputs;
  for (size_t l = 0; l < net.weights.size(); ++l) {
    inputs.push_back(net.weights[l]);
    inputs.push_back(net.biases[l]);
  }
  auto forward = [&](Tape<double>& t, const std::vector<Tape<double>::Var>& v) {
    Mlp<double>::Vars vars;
    for (size_t l = 0; l < v.size(); l += 2) {
      vars.w.push_back(v[l]);
      vars.b.push_back(v[l + 1]);
    }
    auto h = net.forward(t, vars, t.constant(x));
    auto d = t.rowwise_lp_norm(h, 2.0);
    return t.mean(t.smooth_l1(d, t.constant(y)));
  };
  auto report = testutil::fd_check(inputs, forward, 100, rng);
  INFO("worst relative error " << report.worst);
  CHECK(report.failures == 0);
}

TEST_CASE("flatten/unflatten round trip") {
  Rng rng(5);
  Mlp<float> net;
  net.init({4, 7, 3}, rng);
  auto flat = net.flatten();
  Mlp<float> other;
  Rng rng2(99);
  other.init({4, 7, 3}, rng2);
  other.unflatten(flat);
  for (size_t l = 0; l < net.weights.size(); ++l) {
    CHECK(net.weights[l] == other.weights[l]);
    CHECK(net.biases[l] == other.biases[l]);
  }
  flat.pop_back();
  CHECK_THROWS_AS(other.unflatten(flat), std::invalid_argument);
}

TEST_CASE("embedding head satisfies metric axioms by construction") {
  Rng rng(13);
  EmbeddingNet<float> net;
  net.p = 2.0;
  net.mlp.init({10, 16, 3}, rng);

  for (int rep = 0; rep < 200; ++rep) {
    Mat<float> a = testutil::random_mat(1, 10, rng).cast<float>();
    Mat<float> b = testutil::random_mat(1, 10, rng).cast<float>();
    Mat<float> c = testutil::random_mat(1, 10, rng).cast<float>();
    double daa = net.distance(a, a);
    double dab = net.distance(a, b);
    double dba = net.distance(b, a);
    double dac = net.distance(a, c);
    double dbc = net.distance(b, c);
    CHECK(daa == 0.0);
    CHECK(dab == dba);
    CHECK(dac <= dab + dbc + 1e-5);
  }
}

TEST_CASE("embed_all matches per-row application") {
  Rng rng(31);
  EmbeddingNet<float> net;
  net.p = 2.0;
  net.mlp.init({9, 12, 2}, rng);
  RowMatf rows(50, 9);
  for (int i = 0; i < 50; ++i)
    for (int j = 0; j < 9; ++j) rows(i, j) = float(rng.uniform(-1, 1));
  Eigen::MatrixXf a = net.embed_all(rows, 7);
  Eigen::MatrixXf b = net.embed_all(rows, 256);
  CHECK((a - b).cwiseAbs().maxCoeff() < 1e-6f);
  // repeated calls with the same blocking are bit-identical
  Eigen::MatrixXf c = net.embed_all(rows, 256);
  CHECK(b == c);
}
