#include <gtest/gtest.h>

#include "beamtrack/dynamics.hpp"
#include "test_util.hpp"

using namespace beamtrack;
using namespace bt_test;

namespace {

DynamicsModel model(Index paths, double beta, double qp, double qv) {
  DynamicsModel m;
  m.num_paths = paths;
  m.beta = beta;
  m.step = 1e-4;
  m.q_position = qp;
  m.q_velocity = qv;
  return m;
}

}  // namespace

TEST(BuildTransition, PositionBlock) {
  const TransitionPair tp = build_transition(model(1, 0.905, 1e-4, 1e2), 1e-4);
  EXPECT_EQ(tp.A(2, 2), 1.0);
  EXPECT_EQ(tp.A(2, 3), 1e-4);
  EXPECT_EQ(tp.A(3, 2), 0.0);
  EXPECT_EQ(tp.A(3, 3), 1.0);
  EXPECT_EQ(tp.A(4, 5), 1e-4);
  EXPECT_DOUBLE_EQ(tp.Q(2, 2), 1e-4);
  EXPECT_DOUBLE_EQ(tp.Q(3, 3), 1e2);
}

TEST(BuildTransition, GainNoiseFromBeta) {
  const TransitionPair tp = build_transition(model(2, 0.905, 0, 0), 1e-4);
  for (Index i = 0; i < 4; ++i) {
    EXPECT_NEAR(tp.Q(i, i), 0.0904875, 1e-12);
    EXPECT_NEAR(tp.A(i, i), 0.905, 1e-15);
  }
}

TEST(BuildTransition, NoFading) {
  const TransitionPair tp = build_transition(model(2, 1.0, 0, 0), 1e-4);
  EXPECT_EQ(tp.A.topLeftCorner(4, 4), RealMatrix::Identity(4, 4));
  EXPECT_EQ(tp.Q.topLeftCorner(4, 4), RealMatrix::Zero(4, 4));
}

TEST(BuildTransition, BlockStructureAndNoiseFactor) {
  const TransitionPair tp = build_transition(model(3, 0.8, 1e-3, 5.0), 3e-5);
  EXPECT_LT((tp.noise_factor * tp.noise_factor.transpose() - tp.Q).norm(), 1e-14);
  EXPECT_EQ(tp.Q, RealMatrix(tp.Q.diagonal().asDiagonal()));
  // gain rows never couple to position rows
  EXPECT_EQ(tp.A.topRightCorner(6, 12).norm(), 0.0);
  EXPECT_EQ(tp.A.bottomLeftCorner(12, 6).norm(), 0.0);
  EXPECT_NEAR(tp.Q(6, 6), 0.3 * 1e-3, 1e-18);
}

TEST(BuildTransition, Errors) {
  EXPECT_THROW(build_transition(model(1, 0.9, 0, 0), 0.0), Error);
  EXPECT_THROW(build_transition(model(1, 0.9, 0, 0), -1.0), Error);
  EXPECT_THROW(build_transition(model(1, 1.5, 0, 0), 1e-4), Error);
  EXPECT_THROW(build_transition(model(1, 0.9, -1, 0), 1e-4), Error);
}

TEST(BuildTransition, PerPathBeta) {
  DynamicsModel m = model(2, 0.9, 0, 0);
  m.path_beta = {0.5, 1.0};
  const TransitionPair tp = build_transition(m, 1e-4);
  EXPECT_DOUBLE_EQ(tp.A(0, 0), 0.5);
  EXPECT_DOUBLE_EQ(tp.A(2, 2), 1.0);
  EXPECT_DOUBLE_EQ(tp.Q(0, 0), 0.375);
  EXPECT_DOUBLE_EQ(tp.Q(3, 3), 0.0);
}

TEST(BuildTransition, SemigroupProperty) {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(1e-6, 3e-4);
  const DynamicsModel m = model(2, 0.905, 1e-4, 1e2);
  for (int t = 0; t < 20; ++t) {
    const double a = u(rng), b = u(rng);
    const RealMatrix composed = build_transition(m, b).A * build_transition(m, a).A;
    EXPECT_LT((composed - build_transition(m, a + b).A).cwiseAbs().maxCoeff(), 1e-14);
  }
}

TEST(AdvanceTruth, DeterministicMotion) {
  const TransitionPair tp = build_transition(model(1, 1.0, 0, 0), 1e-4);
  ChannelState x(1);
  x.set_gain(0, Complex(0.5, 0.5));
  x.set_tx(0, 0.0, 10.0);
  std::mt19937_64 rng(1);
  const ChannelState y = advance_truth(x, tp, rng);
  EXPECT_NEAR(y.tx_position(0), 1e-3, 1e-18);
  EXPECT_EQ(y.tx_velocity(0), 10.0);
  EXPECT_EQ(y.gain(0), Complex(0.5, 0.5));
  EXPECT_EQ(advance_mean(x, tp).vector(), y.vector());
}

TEST(AdvanceTruth, ZeroVelocityScalesGains) {
  const TransitionPair tp = build_transition(model(1, 0.9, 0, 0), 1e-4);
  TransitionPair frozen = tp;
  frozen.Q.setZero();
  frozen.noise_factor.setZero();
  ChannelState x(1);
  x.set_gain(0, Complex(1, -2));
  x.set_tx(0, 0.3, 0);
  x.set_rx(0, -0.2, 0);
  std::mt19937_64 rng(2);
  const ChannelState y = advance_truth(x, frozen, rng);
  EXPECT_EQ(y.tx_position(0), 0.3);
  EXPECT_EQ(y.rx_position(0), -0.2);
  EXPECT_NEAR(std::abs(y.gain(0) - 0.9 * Complex(1, -2)), 0.0, 1e-15);
}

// Sample-covariance oracle with a frozen transition.
TEST(AdvanceTruth, EmpiricalNoiseCovariance) {
  TransitionPair tp = build_transition(model(1, 0.905, 1e-4, 1e2), 1e-4);
  tp.A.setIdentity();
  std::mt19937_64 rng(3);
  const ChannelState x0(1);
  const int n = 100000;
  RealMatrix acc = RealMatrix::Zero(6, 6);
  for (int i = 0; i < n; ++i) {
    const RealVector d = advance_truth(x0, tp, rng).vector();
    acc += d * d.transpose();
  }
  acc /= n;
  for (Index i = 0; i < 6; ++i) EXPECT_NEAR(acc(i, i), tp.Q(i, i), 0.05 * tp.Q(i, i)) << i;
}

TEST(AdvanceTruth, StationaryGainPower) {
  const TransitionPair tp = build_transition(model(1, 0.905, 0, 0), 1e-4);
  std::mt19937_64 rng(4);
  ChannelState x(1);
  x.set_gain(0, 1.0);
  double power = 0.0, re_var = 0.0;
  const int burn = 200, n = 100000;
  for (int i = 0; i < burn + n; ++i) {
    x = advance_truth(x, tp, rng);
    if (i >= burn) {
      power += std::norm(x.gain(0));
      re_var += x.gain(0).real() * x.gain(0).real();
    }
  }
  EXPECT_NEAR(power / n, 1.0, 0.1);
  EXPECT_NEAR(re_var / n, 0.5, 0.05);
}

TEST(AdvanceTruth, Reproducible) {
  const TransitionPair tp = build_transition(model(2, 0.905, 1e-4, 1e2), 1e-6);
  std::mt19937_64 a(77), b(77);
  ChannelState x(2);
  for (int i = 0; i < 100; ++i) {
    const ChannelState ya = advance_truth(x, tp, a);
    const ChannelState yb = advance_truth(x, tp, b);
    ASSERT_EQ(ya.vector(), yb.vector());
    x = ya;
  }
}

TEST(AdvanceMean, IdentityAndComposition) {
  std::mt19937_64 rng(5);
  const ChannelState x(2, gaussian_vector(12, rng));
  TransitionPair id = build_transition(model(2, 1.0, 0, 0), 1e-4);
  id.A.setIdentity();
  EXPECT_EQ(advance_mean(x, id).vector(), x.vector());

  const DynamicsModel m = model(2, 0.905, 1e-4, 1e2);
  const ChannelState twice = advance_mean(advance_mean(x, build_transition(m, 3e-5)), build_transition(m, 3e-5));
  const ChannelState once = advance_mean(x, build_transition(m, 6e-5));
  EXPECT_LT((twice.vector() - once.vector()).cwiseAbs().maxCoeff(), 1e-14);
  EXPECT_THROW(advance_mean(ChannelState(1), build_transition(m, 1e-4)), Error);
}

TEST(AdvanceCovariance, Identities) {
  std::mt19937_64 rng(6);
  const TransitionPair tp = build_transition(model(1, 0.905, 1e-4, 1e2), 1e-4);
  EXPECT_EQ(advance_covariance(RealMatrix::Zero(6, 6), tp), tp.Q);
  TransitionPair id = tp;
  id.A.setIdentity();
  const RealMatrix r = random_psd(6, rng);
  EXPECT_LT((advance_covariance(r, id) - (r + tp.Q)).norm(), 1e-12);
  const RealMatrix out = advance_covariance(r, tp);
  EXPECT_LT((out - tp.A * r * tp.A.transpose() - tp.Q).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_EQ(out, out.transpose());
  Eigen::SelfAdjointEigenSolver<RealMatrix> eig(out);
  EXPECT_GE(eig.eigenvalues().minCoeff(), -1e-10);
  EXPECT_THROW(advance_covariance(RealMatrix::Zero(5, 5), tp), Error);
}
