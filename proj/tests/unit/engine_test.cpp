// Copyright (c) 2026 The adasg Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "adasg/engine/batch_norm.hpp"
#include "adasg/engine/ops.hpp"
#include "adasg/engine/optim.hpp"
#include "adasg/engine/rng.hpp"
#include "adasg/error.hpp"
#include "support/gradcheck.hpp"
#include "support/oracles.hpp"

namespace adasg {
namespace {

using engine::Tensor;

std::vector<double> vec(const Tensor& t) { return {t.values().begin(), t.values().end()}; }

TEST(Tensor, ShapeMustMatchValueCount) {
  EXPECT_THROW(Tensor({2, 3}, std::vector<double>(5)), ShapeError);
  const Tensor t({2, 3}, std::vector<double>(6, 1.0));
  EXPECT_EQ(t.numel(), 6u);
  EXPECT_EQ(t.rows(), 2u);
  EXPECT_EQ(t.cols(), 3u);
}

TEST(Ops, AddIsComponentwise) {
  const Tensor a({2}, {1, 2});
  const Tensor b({2}, {3, 4});
  EXPECT_EQ(vec(engine::add(a, b)), (std::vector<double>{4, 6}));
}

TEST(Ops, RowBroadcastOverBatch) {
  const Tensor x({2, 2}, {1, 2, 3, 4});
  const Tensor b({2}, {10, 20});
  EXPECT_EQ(vec(engine::add(x, b)), (std::vector<double>{11, 22, 13, 24}));
}

TEST(Ops, ShapeMismatchNamesBothShapes) {
  const Tensor a({2, 3}, std::vector<double>(6));
  const Tensor b({4}, std::vector<double>(4));
  try {
    engine::add(a, b);
    FAIL() << "expected ShapeError";
  } catch (const ShapeError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("[2, 3]"), std::string::npos) << msg;
    EXPECT_NE(msg.find("[4]"), std::string::npos) << msg;
  }
}

TEST(Ops, MatmulIdentityReturnsVector) {
  engine::Rng rng(3);
  const Tensor eye({2, 2}, {1, 0, 0, 1});
  for (int trial = 0; trial < 10; ++trial) {
    const Tensor v({2}, {rng.normal(), rng.normal()});
    EXPECT_EQ(vec(engine::matmul(eye, v)), vec(v));
  }
  EXPECT_THROW(engine::matmul(eye, Tensor({3}, {1, 2, 3})), ShapeError);
}

TEST(Ops, DivisionByZeroIsDomainError) {
  EXPECT_THROW(engine::div(Tensor({2}, {1, 1}), Tensor({2}, {1, 0})), DomainError);
}

TEST(Softmax, SymmetricPair) {
  EXPECT_EQ(vec(engine::softmax(Tensor({1, 2}, {0, 0}), 1)), (std::vector<double>{0.5, 0.5}));
}

TEST(Softmax, TwoZeroPair) {
  const auto p = vec(engine::softmax(Tensor({1, 2}, {2, 0}), 1));
  const double e2 = std::exp(2.0);
  EXPECT_NEAR(p[0], e2 / (e2 + 1.0), 1e-15);
  EXPECT_NEAR(p[1], 1.0 / (e2 + 1.0), 1e-15);
  EXPECT_NEAR(p[0], 0.8808, 1e-4);
}

TEST(Softmax, ShiftInvariantAndOnSimplex) {
  engine::Rng rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> z(12);
    for (double& v : z) v = 20.0 * rng.normal();
    const double c = 50.0 * rng.normal();
    std::vector<double> shifted = z;
    for (double& v : shifted) v += c;
    const double tau = rng.uniform(0.1, 5.0);
    const auto p = vec(engine::softmax(Tensor({3, 4}, z), 1, tau));
    const auto q = vec(engine::softmax(Tensor({3, 4}, shifted), 1, tau));
    for (std::size_t r = 0; r < 3; ++r) {
      double total = 0.0;
      for (std::size_t k = 0; k < 4; ++k) {
        EXPECT_GE(p[r * 4 + k], 0.0);
        EXPECT_NEAR(p[r * 4 + k], q[r * 4 + k], 1e-12);
        total += p[r * 4 + k];
      }
      EXPECT_NEAR(total, 1.0, 1e-12);
    }
  }
}

TEST(Softmax, AxisZeroNormalisesColumns) {
  const auto p = vec(engine::softmax(Tensor({2, 2}, {1, 5, 1, 2}), 0));
  EXPECT_NEAR(p[0] + p[2], 1.0, 1e-15);
  EXPECT_NEAR(p[1] + p[3], 1.0, 1e-15);
  EXPECT_DOUBLE_EQ(p[0], 0.5);
}

TEST(Softmax, RejectsNonPositiveTemperature) {
  const Tensor z({1, 2}, {1, 2});
  EXPECT_THROW(engine::softmax(z, 1, 0.0), DomainError);
  EXPECT_THROW(engine::softmax(z, 1, -1.0), DomainError);
}

TEST(Backward, SquareSum) {
  Tensor w({2}, {1, 2}, true);
  engine::backward(engine::sum(engine::square(w)));
  EXPECT_EQ(std::vector<double>(w.grad().begin(), w.grad().end()), (std::vector<double>{2, 4}));
}

TEST(Backward, AccumulatesUntilCleared) {
  Tensor w({2}, {1, 2}, true);
  engine::backward(engine::sum(engine::square(w)));
  engine::backward(engine::sum(engine::square(w)));
  EXPECT_EQ(w.grad_or_zeros(), (std::vector<double>{4, 8}));
  w.zero_grad();
  engine::backward(engine::sum(w));
  EXPECT_EQ(w.grad_or_zeros(), (std::vector<double>{1, 1}));
}

TEST(Backward, DisconnectedParameterGetsZero) {
  Tensor w({2}, {1, 2}, true);
  Tensor other({2}, {3, 4}, true);
  engine::backward(engine::sum(other));
  EXPECT_EQ(w.grad_or_zeros(), (std::vector<double>{0, 0}));
}

TEST(Backward, RejectsNonScalar) {
  Tensor w({2}, {1, 2}, true);
  EXPECT_THROW(engine::backward(engine::square(w)), ShapeError);
}

TEST(Backward, SharedSubgraphVisitedOnce) {
  // y = x*x used twice: d/dx (y + y) = 4x.
  Tensor x({1}, {3}, true);
  const Tensor y = engine::mul(x, x);
  engine::backward(engine::sum(engine::add(y, y)));
  EXPECT_DOUBLE_EQ(x.grad()[0], 12.0);
}

TEST(Backward, NoGradGuardRecordsNothing) {
  Tensor w({2}, {1, 2}, true);
  Tensor y;
  {
    engine::NoGradGuard guard;
    y = engine::sum(engine::square(w));
  }
  EXPECT_FALSE(y.requires_grad());
}

// Every differentiable primitive against central differences.
TEST(GradCheck, EveryPrimitive) {
  engine::Rng rng(5);
  const auto positive = [&rng](engine::Shape s) {
    Tensor t = engine::gaussian(rng, s, true);
    for (double& v : t.values()) v = 0.5 + std::abs(v);
    return t;
  };
  Tensor a = engine::gaussian(rng, {4, 3}, true);
  Tensor b = engine::gaussian(rng, {4, 3}, true);
  Tensor row = engine::gaussian(rng, {3}, true);
  Tensor m = engine::gaussian(rng, {3, 5}, true);
  Tensor v = engine::gaussian(rng, {3}, true);
  Tensor pos = positive({4, 3});
  Tensor probs = engine::softmax(engine::gaussian(rng, {4, 3}), 1).detach();
  probs.set_requires_grad(true);
  Tensor weights = engine::gaussian(rng, {4, 5});
  Tensor w3 = engine::gaussian(rng, {4, 3});
  Tensor w3c = engine::gaussian(rng, {3});
  Tensor w4 = engine::gaussian(rng, {4});

  struct Case {
    const char* name;
    std::function<Tensor()> f;
    std::vector<Tensor> params;
  };
  const auto dot = [](const Tensor& x, const Tensor& w) { return engine::sum(engine::mul(x, w)); };
  const std::vector<Case> cases = {
      {"add", [&] { return dot(engine::add(a, b), w3); }, {a, b}},
      {"add_row", [&] { return dot(engine::add(a, row), w3); }, {a, row}},
      {"sub", [&] { return dot(engine::sub(a, b), w3); }, {a, b}},
      {"sub_row", [&] { return dot(engine::sub(a, row), w3); }, {a, row}},
      {"mul", [&] { return dot(engine::mul(a, b), w3); }, {a, b}},
      {"mul_row", [&] { return dot(engine::mul(a, row), w3); }, {a, row}},
      {"div", [&] { return dot(engine::div(a, pos), w3); }, {a, pos}},
      {"matmul", [&] { return dot(engine::matmul(a, m), weights); }, {a, m}},
      {"matvec", [&] { return dot(engine::matmul(a, v), w4); }, {a, v}},
      {"scale", [&] { return dot(engine::scale(a, -2.5), w3); }, {a}},
      {"add_scalar", [&] { return dot(engine::square(engine::add_scalar(a, 0.7)), w3); }, {a}},
      {"neg", [&] { return dot(engine::neg(a), w3); }, {a}},
      {"relu", [&] { return dot(engine::relu(a), w3); }, {a}},
      {"square", [&] { return dot(engine::square(a), w3); }, {a}},
      {"sqrt", [&] { return dot(engine::sqrt(pos), w3); }, {pos}},
      {"exp", [&] { return dot(engine::exp(a), w3); }, {a}},
      {"log", [&] { return dot(engine::log(pos), w3); }, {pos}},
      {"mean", [&] { return engine::square(engine::mean(engine::mul(a, w3))); }, {a}},
      {"row_sum", [&] { return dot(engine::row_sum(engine::square(a)), w4); }, {a}},
      {"col_mean", [&] { return dot(engine::col_mean(engine::square(a)), w3c); }, {a}},
      {"softmax_rows", [&] { return dot(engine::softmax(a, 1, 0.7), w3); }, {a}},
      {"softmax_cols", [&] { return dot(engine::softmax(a, 0, 1.3), w3); }, {a}},
      {"entropy_rows", [&] { return dot(engine::entropy_rows(probs), w4); }, {probs}},
  };
  for (const auto& c : cases) {
    const auto r = testing::check_gradient(c.f, c.params, rng, 8);
    EXPECT_GE(r.checked, 5u) << c.name;
    EXPECT_LT(r.max_rel_err, 1e-4) << c.name;
  }
}

TEST(GradCheck, StraightThroughPassesGradientUnchanged) {
  Tensor x({3}, {0.2, -1.0, 4.0}, true);
  const Tensor rounded({3}, {0.0, -1.0, 4.0});
  const Tensor y = engine::straight_through(x, rounded);
  EXPECT_EQ(vec(y), vec(rounded));
  engine::backward(engine::sum(engine::mul(y, Tensor({3}, {1, 2, 3}))));
  EXPECT_EQ(x.grad_or_zeros(), (std::vector<double>{1, 2, 3}));
}

TEST(ConstantReplay, ReplaysRecordedConstantsInOrder) {
  engine::ConstantReplayScope scope;
  const Tensor first = engine::stop_gradient(Tensor::scalar(1.0));
  engine::stop_gradient(Tensor::scalar(2.0));
  EXPECT_EQ(scope.recorded(), 2u);
  scope.replay();
  EXPECT_DOUBLE_EQ(engine::stop_gradient(Tensor::scalar(99.0)).item(), 1.0);
  EXPECT_DOUBLE_EQ(engine::stop_gradient(Tensor::scalar(98.0)).item(), 2.0);
  EXPECT_THROW(engine::stop_gradient(Tensor::scalar(0.0)), Error);
  scope.rewind();
  EXPECT_THROW(engine::stop_gradient(Tensor({2}, {0, 0})), ShapeError);
  EXPECT_FALSE(first.requires_grad());
}

// --- batch norm ---

TEST(BatchNorm, EvalAtStoredMeanGivesZero) {
  engine::BatchNormState s(3);
  s.running_mean = {1.0, -2.0, 0.5};
  s.running_var = {4.0, 0.25, 9.0};
  const Tensor x({2, 3}, {1.0, -2.0, 0.5, 1.0, -2.0, 0.5});
  const Tensor y = engine::batch_norm(x, s, engine::BnMode::kEval).y;
  for (double v : y.values()) EXPECT_DOUBLE_EQ(v, 0.0);
}

TEST(BatchNorm, TrainNormalisesBatch) {
  engine::Rng rng(2);
  engine::BatchNormState s(4);
  s.eps = 0.0;
  Tensor x = engine::gaussian(rng, {32, 4});
  for (std::size_t i = 0; i < 32; ++i) {
    for (std::size_t j = 0; j < 4; ++j) x.values()[i * 4 + j] = 3.0 * (j + 1) * x.at(i, j) + 7.0 * j;
  }
  const Tensor y = engine::batch_norm(x, s, engine::BnMode::kTrain).y;
  std::vector<double> mean, var;
  testing::column_stats(vec(y), 32, 4, mean, var);
  for (std::size_t j = 0; j < 4; ++j) {
    EXPECT_NEAR(mean[j], 0.0, 1e-10);
    EXPECT_NEAR(var[j], 1.0, 1e-10);
  }
}

TEST(BatchNorm, RunningStatsMatchReplayOracle) {
  engine::Rng rng(4);
  engine::BatchNormState s(3);
  std::vector<double> mean(3, 0.0), var(3, 1.0);
  for (int step = 0; step < 7; ++step) {
    const Tensor x = engine::gaussian(rng, {10, 3});
    engine::batch_norm_train(x, s);
    std::vector<double> bm, bv;
    testing::column_stats(vec(x), 10, 3, bm, bv);
    for (std::size_t j = 0; j < 3; ++j) {
      mean[j] = 0.9 * mean[j] + 0.1 * bm[j];
      var[j] = 0.9 * var[j] + 0.1 * bv[j];
    }
  }
  for (std::size_t j = 0; j < 3; ++j) {
    EXPECT_NEAR(s.running_mean[j], mean[j], 1e-14);
    EXPECT_NEAR(s.running_var[j], var[j], 1e-14);
  }
}

TEST(BatchNorm, PureFormLeavesStateUntouched) {
  engine::Rng rng(8);
  engine::BatchNormState s(3);
  engine::batch_norm(engine::gaussian(rng, {5, 3}), s, engine::BnMode::kTrain);
  EXPECT_EQ(s.running_mean, std::vector<double>(3, 0.0));
  EXPECT_EQ(s.running_var, std::vector<double>(3, 1.0));
}

TEST(BatchNorm, BatchOfOneRejectedInTrainMode) {
  engine::BatchNormState s(2);
  EXPECT_THROW(engine::batch_norm(Tensor({1, 2}, {1, 2}), s, engine::BnMode::kTrain), DomainError);
  EXPECT_NO_THROW(engine::batch_norm(Tensor({1, 2}, {1, 2}), s, engine::BnMode::kEval));
}

TEST(BatchNorm, WidthMismatchRejected) {
  engine::BatchNormState s(2);
  EXPECT_THROW(engine::batch_norm(Tensor({2, 3}, std::vector<double>(6)), s, engine::BnMode::kEval), ShapeError);
}

TEST(BatchNorm, ExposedStatsMatchTwoPassOracle) {
  engine::Rng rng(9);
  engine::BatchNormState s(5);
  const Tensor x = engine::gaussian(rng, {12, 5});
  const auto out = engine::batch_norm(x, s, engine::BnMode::kEval, true);
  std::vector<double> mean, var;
  testing::column_stats(vec(x), 12, 5, mean, var);
  for (std::size_t j = 0; j < 5; ++j) {
    EXPECT_NEAR(out.batch_mean.at(j), mean[j], 1e-14);
    EXPECT_NEAR(out.batch_var.at(j), var[j], 1e-14);
  }
}

TEST(GradCheck, BatchNormBothModes) {
  engine::Rng rng(10);
  engine::BatchNormState s(4);
  s.gamma = engine::gaussian(rng, {4}, true);
  s.beta = engine::gaussian(rng, {4}, true);
  s.running_mean = {0.1, -0.3, 0.2, 0.0};
  s.running_var = {1.5, 0.7, 2.0, 0.9};
  Tensor x = engine::gaussian(rng, {6, 4}, true);
  const Tensor w = engine::gaussian(rng, {6, 4});
  const Tensor wm = engine::gaussian(rng, {4});
  for (auto mode : {engine::BnMode::kTrain, engine::BnMode::kEval}) {
    const auto loss = [&] {
      const auto out = engine::batch_norm(x, s, mode, true);
      return engine::add(engine::sum(engine::mul(out.y, w)),
                         engine::sum(engine::mul(engine::add(out.batch_mean, out.batch_var), wm)));
    };
    const auto r = testing::check_gradient(loss, {x, s.gamma, s.beta}, rng, 10);
    EXPECT_GE(r.checked, 5u);
    EXPECT_LT(r.max_rel_err, 1e-4);
  }
}

// --- optimizers ---

TEST(Adam, ZeroGradientLeavesParametersUnchanged) {
  Tensor w({3}, {1, 2, 3}, true);
  w.zero_grad();
  engine::backward(engine::scale(engine::sum(w), 0.0));
  engine::AdamState st;
  std::vector<Tensor> params{w};
  engine::adam_step(st, params);
  EXPECT_EQ(vec(w), (std::vector<double>{1, 2, 3}));
  EXPECT_EQ(st.step, 1);
}

TEST(Adam, FirstStepMovesByLearningRate) {
  for (double g : {-3.0, 0.25, 40.0}) {
    Tensor w({1}, {0.5}, true);
    engine::backward(engine::scale(engine::sum(w), g));
    engine::AdamState st;
    st.lr = 1e-3;
    st.eps = 0.0;
    std::vector<Tensor> params{w};
    engine::adam_step(st, params);
    EXPECT_NEAR(std::abs(w.at(0) - 0.5), 1e-3, 1e-15);
    EXPECT_LT((w.at(0) - 0.5) * g, 0.0);
  }
}

TEST(Adam, ClosedFormSecondStep) {
  Tensor w({1}, {0.0}, true);
  engine::AdamState st;
  std::vector<Tensor> params{w};
  const double g1 = 2.0, g2 = -1.0;
  engine::backward(engine::scale(engine::sum(w), g1));
  engine::adam_step(st, params);
  w.zero_grad();
  engine::backward(engine::scale(engine::sum(w), g2));
  engine::adam_step(st, params);
  const double m = 0.9 * 0.1 * g1 + 0.1 * g2;
  const double v = 0.999 * 0.001 * g1 * g1 + 0.001 * g2 * g2;
  const double mh = m / (1 - 0.81), vh = v / (1 - 0.999 * 0.999);
  const double expected = -1e-3 * g1 / (std::abs(g1) + 1e-8) - 1e-3 * mh / (std::sqrt(vh) + 1e-8);
  EXPECT_NEAR(w.at(0), expected, 1e-14);
}

TEST(SgdNesterov, ZeroMomentumIsPlainSgd) {
  Tensor w({2}, {1.0, -1.0}, true);
  engine::backward(engine::sum(engine::mul(w, Tensor({2}, {3.0, 5.0}))));
  engine::SgdNesterovState st;
  st.lr = 0.1;
  st.momentum = 0.0;
  st.weight_decay = 0.0;
  std::vector<Tensor> params{w};
  engine::sgd_nesterov_step(st, params);
  EXPECT_NEAR(w.at(0), 1.0 - 0.3, 1e-15);
  EXPECT_NEAR(w.at(1), -1.0 - 0.5, 1e-15);
}

TEST(SgdNesterov, ReferenceRecurrence) {
  // v <- mu v + g + wd p ; p <- p - lr (g + wd p + mu v)
  Tensor w({1}, {2.0}, true);
  engine::SgdNesterovState st;
  st.lr = 0.05;
  std::vector<Tensor> params{w};
  double p = 2.0, v = 0.0;
  for (double g : {1.0, -0.5, 2.0, 0.1}) {
    w.zero_grad();
    engine::backward(engine::scale(engine::sum(w), g));
    engine::sgd_nesterov_step(st, params);
    const double d = g + st.weight_decay * p;
    v = st.momentum * v + d;
    p -= st.lr * (d + st.momentum * v);
    EXPECT_NEAR(w.at(0), p, 1e-15);
  }
}

TEST(SgdNesterov, WeightDecayAloneShrinksNorm) {
  Tensor w({3}, {1.0, -2.0, 0.5}, true);
  engine::SgdNesterovState st;
  st.lr = 0.1;
  st.weight_decay = 0.01;
  std::vector<Tensor> params{w};
  double prev = 1.0 + 4.0 + 0.25;
  for (int i = 0; i < 5; ++i) {
    w.zero_grad();
    engine::sgd_nesterov_step(st, params);
    double now = 0.0;
    for (double x : w.values()) now += x * x;
    EXPECT_LT(now, prev);
    prev = now;
  }
}

TEST(Optimizers, BufferShapeMismatchRejected) {
  Tensor w({2}, {1, 2}, true);
  std::vector<Tensor> params{w};
  engine::AdamState adam;
  adam.first_moment = {{0.0}};
  adam.second_moment = {{0.0}};
  EXPECT_THROW(engine::adam_step(adam, params), ShapeError);
  engine::SgdNesterovState sgd;
  sgd.velocity = {{0.0, 0.0, 0.0}};
  EXPECT_THROW(engine::sgd_nesterov_step(sgd, params), ShapeError);
}

// --- rng ---

TEST(Rng, SameSeedSameTensor) {
  engine::Rng a(42), b(42);
  EXPECT_EQ(vec(engine::gaussian(a, {5, 7})), vec(engine::gaussian(b, {5, 7})));
}

TEST(Rng, DistinctSeedsDiffer) {
  engine::Rng a(1), b(2), c(1, 1);
  const auto x = vec(engine::gaussian(a, {16}));
  EXPECT_NE(x, vec(engine::gaussian(b, {16})));
  EXPECT_NE(x, vec(engine::gaussian(c, {16})));
}

TEST(Rng, GaussianMomentsLargeSample) {
  engine::Rng rng(2024);
  const auto x = vec(engine::gaussian(rng, {1000000}));
  const double mean = std::accumulate(x.begin(), x.end(), 0.0) / x.size();
  double var = 0.0;
  for (double v : x) var += (v - mean) * (v - mean);
  var /= x.size();
  EXPECT_NEAR(mean, 0.0, 0.01);
  EXPECT_NEAR(var, 1.0, 0.01);
}

}  // namespace
}  // namespace adasg
