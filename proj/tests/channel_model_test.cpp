#include <gtest/gtest.h>

#include <numbers>

#include "beamtrack/channel_model.hpp"
#include "test_util.hpp"

using namespace beamtrack;
using namespace bt_test;
using std::numbers::pi;

namespace {

ChannelState random_state(Index paths, std::mt19937_64& rng) {
  return ChannelState(paths, gaussian_vector(6 * paths, rng));
}

}  // namespace

TEST(VirtualToSpatial, Values) {
  EXPECT_EQ(virtual_to_spatial(0.0, 0.5), 0.0);
  EXPECT_NEAR(virtual_to_spatial(1.0, 0.5), 0.3535534, 1e-7);
  EXPECT_NEAR(virtual_to_spatial(1e3, 0.5), 500.0 / std::sqrt(1e6 + 1.0), 1e-15);
  EXPECT_LT(virtual_to_spatial(1e3, 0.5), 0.5);
  EXPECT_GT(virtual_to_spatial(1e9, 0.5), 0.4999999);
  EXPECT_LE(virtual_to_spatial(1e9, 0.5), 0.5);
}

TEST(VirtualToSpatial, OddAndMonotone) {
  double prev = -1.0;
  for (double u = -50.0; u <= 50.0; u += 0.37) {
    const double nu = virtual_to_spatial(u, 0.5);
    EXPECT_DOUBLE_EQ(virtual_to_spatial(-u, 0.5), -nu);
    EXPECT_GT(nu, prev);
    EXPECT_LT(std::abs(nu), 0.5);
    prev = nu;
  }
}

TEST(AngleToVirtual, Values) {
  EXPECT_EQ(angle_to_virtual(0.0), 0.0);
  EXPECT_NEAR(angle_to_virtual(pi / 4), 1.0, 1e-15);
  EXPECT_NEAR(angle_to_virtual(-pi / 6), -0.5773503, 1e-7);
}

TEST(AngleToVirtual, SingularNearHalfPi) {
  for (double t : {pi / 2, -pi / 2, 3 * pi / 2, pi / 2 + 5e-10}) {
    try {
      angle_to_virtual(t);
      FAIL() << t;
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), Errc::SingularAngle);
    }
  }
}

TEST(AngleToVirtual, ChainGivesSine) {
  for (double t = -1.5; t <= 1.5; t += 0.01) {
    EXPECT_NEAR(virtual_to_spatial(angle_to_virtual(t), 0.5), 0.5 * std::sin(t), 1e-12);
  }
}

TEST(Steering, Values) {
  EXPECT_EQ(steering_vector(0.0, 4), ComplexVector::Ones(4));
  const ComplexVector a = steering_vector(0.25, 2);
  EXPECT_NEAR(std::abs(a(0) - Complex(0, -1)), 0.0, 1e-15);
  EXPECT_NEAR(std::abs(a(1) - Complex(-1, 0)), 0.0, 1e-15);
  const ComplexVector b = steering_vector(0.5, 3);
  EXPECT_NEAR(std::abs(b(0) + 1.0), 0.0, 1e-15);
  EXPECT_NEAR(std::abs(b(1) - 1.0), 0.0, 1e-15);
  EXPECT_NEAR(std::abs(b(2) + 1.0), 0.0, 1e-15);
}

TEST(Steering, UnitModulusAndConjugateSymmetry) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> nu(-0.5, 0.5);
  for (int t = 0; t < 50; ++t) {
    const double v = nu(rng);
    const ComplexVector a = steering_vector(v, 16);
    EXPECT_LT((a.cwiseAbs() - RealVector::Ones(16)).cwiseAbs().maxCoeff(), 1e-14);
    EXPECT_LT((steering_vector(-v, 16) - a.conjugate()).norm(), 1e-14);
  }
}

TEST(ChannelMatrix, Examples) {
  ChannelState x(1);
  x.set_gain(0, 1.0);
  EXPECT_EQ(channel_matrix(x, {3}, {2}), ComplexMatrix::Ones(2, 3));

  ChannelState y(1);
  y.set_gain(0, 2.0);
  y.set_tx(0, 0.7, 0.0);
  y.set_rx(0, -1.3, 0.0);
  EXPECT_NEAR(channel_matrix(y, {16}, {8}).norm(), 2.0 * std::sqrt(16.0 * 8.0), 1e-12);

  ChannelState z(2);
  z.set_gain(0, Complex(0.3, -1.1));
  z.set_gain(1, Complex(-0.3, 1.1));
  z.set_tx(0, 0.4, 0.0);
  z.set_tx(1, 0.4, 0.0);
  z.set_rx(0, 2.0, 0.0);
  z.set_rx(1, 2.0, 0.0);
  EXPECT_LT(channel_matrix(z, {4}, {4}).norm(), 1e-15);
}

TEST(ChannelMatrix, MatchesSumOfOuterProducts) {
  std::mt19937_64 rng(5);
  const ChannelState x = random_state(3, rng);
  const ArrayGeometry tx{6, 0.5}, rx{5, 0.4};
  ComplexMatrix h = ComplexMatrix::Zero(5, 6);
  for (Index l = 0; l < 3; ++l) {
    const ComplexVector ar = steering_vector(virtual_to_spatial(x.rx_position(l), 0.4), 5);
    const ComplexVector at = steering_vector(virtual_to_spatial(x.tx_position(l), 0.5), 6);
    h += x.gain(l) * ar * at.adjoint();
  }
  EXPECT_LT((channel_matrix(x, tx, rx) - h).norm(), 1e-13);
}

TEST(ChannelMatrix, PropertyNormBoundsAndHomogeneity) {
  std::mt19937_64 rng(6);
  for (int t = 0; t < 30; ++t) {
    const Index paths = 1 + static_cast<Index>(rng() % 4);
    ChannelState x = random_state(paths, rng);
    const ComplexMatrix h = channel_matrix(x, {8}, {6});
    double bound = 0.0;
    for (Index l = 0; l < paths; ++l) bound += std::abs(x.gain(l)) * std::sqrt(48.0);
    Eigen::JacobiSVD<ComplexMatrix> svd(h);
    EXPECT_LE(svd.singularValues()(0), bound * (1 + 1e-12));
    if (paths == 1) EXPECT_NEAR(svd.singularValues()(0), bound, 1e-12 * bound);
    EXPECT_LE((svd.singularValues().array() > 1e-9 * svd.singularValues()(0)).count(), paths);

    const double c = -2.5;
    ChannelState scaled = x;
    for (Index l = 0; l < paths; ++l) scaled.set_gain(l, c * x.gain(l));
    EXPECT_NEAR(channel_matrix(scaled, {8}, {6}).norm(), std::abs(c) * h.norm(), 1e-12 * h.norm());
  }
}

TEST(RealChannelVector, Examples) {
  ChannelState x(1);
  x.set_gain(0, 1.0);
  RealVector expected(8);
  expected << 1, 1, 1, 1, 0, 0, 0, 0;
  EXPECT_EQ(real_channel_vector(x, {2}, {2}), expected);

  ChannelState y(1);
  y.set_gain(0, Complex(0, 1));
  RealVector e2(2);
  e2 << 0, 1;
  EXPECT_EQ(real_channel_vector(y, {1}, {1}), e2);
}

TEST(RealChannelVector, RoundTrip) {
  std::mt19937_64 rng(7);
  const ChannelState x = random_state(4, rng);
  const ArrayGeometry tx{5}, rx{3};
  const RealVector h = real_channel_vector(x, tx, rx);
  const ComplexMatrix expected = channel_matrix(x, tx, rx);
  ComplexMatrix rebuilt(3, 5);
  for (Index j = 0; j < 5; ++j)
    for (Index i = 0; i < 3; ++i) rebuilt(i, j) = Complex(h(j * 3 + i), h(15 + j * 3 + i));
  EXPECT_LT((rebuilt - expected).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(ChannelState, LayoutAndErrors) {
  ChannelState x(2);
  x.set_gain(1, Complex(3, 4));
  x.set_tx(1, 5, 6);
  x.set_rx(0, 7, 8);
  RealVector expected = RealVector::Zero(12);
  expected(2) = 3;
  expected(3) = 4;
  expected(6) = 5;
  expected(7) = 6;
  expected(8) = 7;
  expected(9) = 8;
  EXPECT_EQ(x.vector(), expected);
  EXPECT_THROW(ChannelState(2, RealVector::Zero(11)), Error);
  EXPECT_THROW(ChannelState::from_vector(RealVector::Zero(7)), Error);
  EXPECT_EQ(ChannelState::from_vector(RealVector::Zero(18)).num_paths(), 3);
}
