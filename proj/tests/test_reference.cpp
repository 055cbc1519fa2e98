#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "hsplit/problems/rigid_body.hpp"
#include "hsplit/reference_solver.hpp"

namespace {

using namespace hsplit;

TEST(Dopri5, HarmonicOscillatorFullPeriod) {
  auto rhs = [](std::span<const double> x, std::span<double> dx) {
    dx[0] = x[1];
    dx[1] = -x[0];
  };
  ReferenceStats stats;
  const auto x = dopri5(rhs, {1.0, 0.0}, 2 * std::numbers::pi, {}, &stats);
  EXPECT_NEAR(x[0], 1.0, 1e-9);
  EXPECT_NEAR(x[1], 0.0, 1e-9);
  EXPECT_GT(stats.accepted, 10U);
}

TEST(Dopri5, ExponentialDecay) {
  auto rhs = [](std::span<const double> x, std::span<double> dx) { dx[0] = -2.0 * x[0]; };
  const auto x = dopri5(rhs, {3.0}, 1.5);
  EXPECT_NEAR(x[0], 3.0 * std::exp(-3.0), 1e-12);
}

TEST(Dopri5, ZeroIntervalReturnsInput) {
  auto rhs = [](std::span<const double>, std::span<double> dx) { dx[0] = 1.0; };
  EXPECT_EQ(dopri5(rhs, {0.25}, 0.0), std::vector<double>{0.25});
}

TEST(Dopri5, BlowUpUnderflows) {
  // x' = x^2, x(0) = 1 blows up at t = 1
  auto rhs = [](std::span<const double> x, std::span<double> dx) { dx[0] = x[0] * x[0]; };
  try {
    dopri5(rhs, {1.0}, 2.0);
    FAIL() << "expected step size underflow";
  } catch (const StepSizeUnderflowError& e) {
    EXPECT_NEAR(e.time_reached(), 1.0, 1e-3);
    EXPECT_LT(e.time_reached(), 1.0);
  }
}

TEST(Dopri5, InvalidArguments) {
  auto rhs = [](std::span<const double>, std::span<double> dx) { dx[0] = 0.0; };
  ReferenceOptions bad;
  bad.atol = 0.0;
  EXPECT_THROW(dopri5(rhs, {1.0}, 1.0, bad), std::invalid_argument);
  bad.atol = 1e-10;
  bad.rtol = -1.0;
  EXPECT_THROW(dopri5(rhs, {1.0}, 1.0, bad), std::invalid_argument);
  EXPECT_THROW(dopri5(rhs, {1.0}, -1.0), std::invalid_argument);
}

TEST(ReferenceSolve, RigidBodyKeepsNorm) {
  const RigidBody rb;
  const auto out = reference_solve(rb, RigidBody::initial_state(), 100.0);
  const double n = std::sqrt(out.x[0] * out.x[0] + out.x[1] * out.x[1] + out.x[2] * out.x[2]);
  EXPECT_NEAR(n, 1.0, 1e-9);
  EXPECT_EQ(out.t, 100.0);
}

TEST(ReferenceSolve, RigidBodyEnergyConserved) {
  const RigidBody rb;
  auto energy = [](const std::vector<double>& x) { return x[0] * x[0] / 2 + x[1] * x[1] / 1 + x[2] * x[2] / (2.0 / 3); };
  const auto x0 = RigidBody::initial_state();
  const auto out = reference_solve(rb, x0, 100.0);
  EXPECT_NEAR(energy(out.x), energy(x0.x), 1e-9);
}

}  // namespace
