#include "doctest.h"

#include "plan2vec/tensor.hpp"

#include "oracles.hpp"

using namespace plan2vec;
using ad::Mat;
using ad::Tape;
using testutil::fd_check;
using testutil::random_mat;
using testutil::random_mat_away_from;

TEST_CASE("forward op examples") {
  Tape<double> t;
  SUBCASE("smooth_l1 at zero residual") {
    Mat<double> z = Mat<double>::Zero(1, 1);
    auto y = t.smooth_l1(t.leaf(z), t.leaf(z));
    CHECK(t.value(y)(0, 0) == 0.0);
  }
  SUBCASE("pythagorean l2 norm") {
    Mat<double> v(1, 2);
    v << 3, 4;
    auto y = t.rowwise_lp_norm(t.leaf(v), 2.0);
    CHECK(t.value(y)(0, 0) == doctest::Approx(5.0));
  }
  SUBCASE("smooth_l1 linear branch") {
    Mat<double> x(1, 1), zero = Mat<double>::Zero(1, 1);
    x << 2.5;
    auto y = t.smooth_l1(t.leaf(x), t.leaf(zero));
    CHECK(t.value(y)(0, 0) == doctest::Approx(2.0));
  }
  SUBCASE("l1 norm") {
    Mat<double> v(1, 3);
    v << -1, 2, -3;
    auto y = t.rowwise_lp_norm(t.leaf(v), 1.0);
    CHECK(t.value(y)(0, 0) == doctest::Approx(6.0));
  }
  SUBCASE("nce loss with symmetric logits is log 2") {
    Mat<double> logits(3, 2);
    logits << 0.7, 0.7, -1.2, -1.2, 4.0, 4.0;
    auto y = t.nce_loss(t.leaf(logits));
    CHECK(t.value(y)(0, 0) == doctest::Approx(std::log(2.0)));
  }
  SUBCASE("nce loss vanishes when the positive dominates") {
    Mat<double> logits(1, 3);
    logits << 60.0, 0.0, 0.0;
    auto y = t.nce_loss(t.leaf(logits));
    CHECK(t.value(y)(0, 0) == doctest::Approx(0.0).epsilon(1e-6));
  }
}

TEST_CASE("shape mismatches are rejected with shapes named") {
  Tape<float> t;
  auto a = t.leaf(ad::Matf::Zero(2, 3));
  auto b = t.leaf(ad::Matf::Zero(4, 5));
  CHECK_THROWS_WITH_AS(t.add(a, b), doctest::Contains("[2, 3]"), std::invalid_argument);
  CHECK_THROWS_AS(t.matmul(a, b), std::invalid_argument);
  CHECK_THROWS_AS(t.rowwise_lp_norm(a, 0.5), std::invalid_argument);
}

TEST_CASE("backward examples") {
  SUBCASE("unit-vector gradient of the l2 norm") {
    Tape<double> t;
    Mat<double> v(1, 2);
    v << 3, 4;
    auto x = t.leaf(v);
    auto y = t.rowwise_lp_norm(x, 2.0);
    t.backward(t.sum(y));
    CHECK(t.grad(x)(0, 0) == doctest::Approx(0.6));
    CHECK(t.grad(x)(0, 1) == doctest::Approx(0.8));
  }
  SUBCASE("dead relu unit has zero gradient") {
    Tape<double> t;
    Mat<double> v(1, 1);
    v << -1.0;
    auto x = t.leaf(v);
    t.backward(t.sum(t.relu(x)));
    CHECK(t.grad(x)(0, 0) == 0.0);
  }
  SUBCASE("non-scalar loss rejected") {
    Tape<double> t;
    auto x = t.leaf(Mat<double>::Ones(2, 2));
    CHECK_THROWS_AS(t.backward(x), std::invalid_argument);
  }
}

TEST_CASE("gradient finite-difference suite per op") {
  Rng rng(42);
  const int probes = 100;

  auto run = [&](const char* name, std::vector<Mat<double>> inputs, auto forward) {
    auto report = fd_check(std::move(inputs), forward, probes, rng);
    INFO(name << " worst relative error " << report.worst);
    CHECK(report.failures == 0);
  };

  run("matmul", {random_mat(4, 5, rng), random_mat(5, 3, rng)},
      [](Tape<double>& t, const auto& v) { return t.sum(t.matmul(v[0], v[1])); });
  run("add", {random_mat(3, 4, rng), random_mat(3, 4, rng)},
      [](Tape<double>& t, const auto& v) { return t.sum(t.add(v[0], v[1])); });
  run("sub+mul_elem", {random_mat(3, 4, rng), random_mat(3, 4, rng)},
      [](Tape<double>& t, const auto& v) {
        return t.sum(t.mul_elem(t.sub(v[0], v[1]), v[0]));
      });
  run("add_row", {random_mat(4, 3, rng), random_mat(1, 3, rng)},
      [](Tape<double>& t, const auto& v) { return t.sum(t.add_row(v[0], v[1])); });
  run("linear", {random_mat(4, 5, rng), random_mat(5, 2, rng), random_mat(1, 2, rng)},
      [](Tape<double>& t, const auto& v) { return t.sum(t.linear(v[0], v[1], v[2])); });
  run("relu", {random_mat_away_from(4, 4, rng, 0.15)},
      [](Tape<double>& t, const auto& v) { return t.sum(t.relu(v[0])); });
  run("softplus", {random_mat(4, 4, rng)},
      [](Tape<double>& t, const auto& v) { return t.sum(t.softplus(v[0])); });
  run("scale", {random_mat(3, 3, rng)},
      [](Tape<double>& t, const auto& v) { return t.sum(t.scale(v[0], 2.5)); });
  run("mean", {random_mat(5, 2, rng)},
      [](Tape<double>& t, const auto& v) { return t.mean(v[0]); });
  for (double p : {1.0, 1.2, 1.5, 2.0}) {
    run("lp_norm", {random_mat_away_from(5, 4, rng, 0.2)},
        [p](Tape<double>& t, const auto& v) {
          return t.sum(t.rowwise_lp_norm(v[0], p));
        });
  }
  {
    // residuals bounded away from the |x| = 1 kink
    Mat<double> pred = random_mat(4, 4, rng);
    Mat<double> delta = random_mat_away_from(4, 4, rng, 0.15, 0.7);
    Mat<double> target = pred - delta;
    run("smooth_l1 (quadratic branch)", {pred, target},
        [](Tape<double>& t, const auto& v) { return t.sum(t.smooth_l1(v[0], v[1])); });
    Mat<double> far = pred.array() + 2.0;
    run("smooth_l1 (linear branch)", {pred, far},
        [](Tape<double>& t, const auto& v) { return t.sum(t.smooth_l1(v[0], v[1])); });
  }
  run("log_softmax", {random_mat(4, 5, rng)},
      [](Tape<double>& t, const auto& v) { return t.mean(t.log_softmax(v[0])); });
  run("nce_loss", {random_mat(6, 4, rng)},
      [](Tape<double>& t, const auto& v) { return t.nce_loss(v[0]); });
  run("hstack", {random_mat(3, 2, rng), random_mat(3, 3, rng)},
      [](Tape<double>& t, const auto& v) {
        return t.sum(t.mul_elem(t.hstack({v[0], v[1]}), t.hstack({v[0], v[1]})));
      });
  run("composite", {random_mat(4, 6, rng), random_mat(6, 3, rng), random_mat(1, 3, rng)},
      [](Tape<double>& t, const auto& v) {
        auto h = t.relu(t.linear(v[0], v[1], v[2]));
        return t.mean(t.rowwise_lp_norm(h, 1.5));
      });
}

TEST_CASE("lp norm nonnegativity and definiteness") {
  Rng rng(7);
  for (double p : {1.0, 1.3, 2.0}) {
    for (int rep = 0; rep < 50; ++rep) {
      Tape<double> t;
      Mat<double> v = random_mat(1, 6, rng);
      auto y = t.rowwise_lp_norm(t.leaf(v), p);
      CHECK(t.value(y)(0, 0) >= 0.0);
      if (v.cwiseAbs().maxCoeff() > 1e-9) CHECK(t.value(y)(0, 0) > 0.0);
    }
    Tape<double> t;
    auto y = t.rowwise_lp_norm(t.leaf(Mat<double>::Zero(1, 6)), p);
    CHECK(t.value(y)(0, 0) == 0.0);
  }
}

TEST_CASE("tape reruns are deterministic") {
  auto run_once = [] {
    Tape<float> t;
    Rng rng(11);
    auto a = t.leaf(testutil::random_mat(4, 4, rng).cast<float>());
    auto b = t.leaf(testutil::random_mat(4, 4, rng).cast<float>());
    auto loss =
        t.mean(t.smooth_l1(t.relu(t.matmul(a, b)), t.constant(ad::Matf::Zero(4, 4))));
    t.backward(loss);
    return std::make_pair(t.value(loss)(0, 0), ad::Matf(t.grad(a)));
  };
  auto [l1, g1] = run_once();
  auto [l2, g2] = run_once();
  CHECK(l1 == l2);
  CHECK(g1 == g2);
}
