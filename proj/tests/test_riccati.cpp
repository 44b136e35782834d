#include <cmath>

#include <gtest/gtest.h>

#include "sppc/errors.hpp"
#include "sppc/riccati.hpp"
#include "support.hpp"

namespace sppc {
namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

PlantModel scalar(double a, double b) {
  return PlantModel(MatrixXd::Constant(1, 1, a), VectorXd::Constant(1, b));
}

MatrixXd scalar(double q) { return MatrixXd::Constant(1, 1, q); }

// P = P - P^2/(P + 1) + 1  =>  P^2 - P - 1 = 0.
TEST(Riccati, GoldenRatio) {
  const double golden = (1.0 + std::sqrt(5.0)) / 2.0;
  const DareSolution s = solve_dare(scalar(1.0, 1.0), scalar(1.0), 1.0);
  EXPECT_NEAR(s.P(0, 0), golden, 1e-9);
  EXPECT_NEAR(s.K(0), -1.0 / golden, 1e-9);
}

// With r = 0 the optimal input cancels the state in one step.
TEST(Riccati, DeadbeatAtZeroInputWeight) {
  const DareSolution s = solve_dare(scalar(2.0, 1.0), scalar(1.0), 0.0);
  EXPECT_NEAR(s.P(0, 0), 1.0, 1e-12);
  EXPECT_NEAR(s.K(0), -2.0, 1e-12);
}

TEST(Riccati, ZeroDynamicsGiveQ) {
  testing::Rng rng(31);
  const MatrixXd Q = rng.spd(3);
  const PlantModel plant(MatrixXd::Zero(3, 3), rng.gaussian(3));
  for (double r : {0.0, 0.5, 10.0}) {
    const DareSolution s = solve_dare(plant, Q, r);
    EXPECT_LT(testing::rel_fro(s.P, Q), 1e-14);
    EXPECT_LT(s.K.norm(), 1e-14);
  }
}

TEST(Riccati, ScalarClosedForm) {
  // b^2 P^2 - (a^2 r - r + q b^2) P - q r = 0 for the scalar equation.
  testing::Rng rng(32);
  for (int trial = 0; trial < 50; ++trial) {
    const double a = rng.uniform(-2.0, 2.0), b = rng.uniform(0.2, 2.0);
    const double q = rng.uniform(0.1, 3.0), r = rng.uniform(0.0, 5.0);
    const double lin = a * a * r - r + q * b * b;
    const double P = (lin + std::sqrt(lin * lin + 4.0 * b * b * q * r)) / (2.0 * b * b);
    const DareSolution s = solve_dare(scalar(a, b), scalar(q), r);
    EXPECT_NEAR(s.P(0, 0), P, 1e-8 * (1.0 + P)) << "a=" << a << " b=" << b << " r=" << r;
  }
}

TEST(Riccati, FixedPointAndClosedLoopLyapunov) {
  testing::Rng rng(33);
  for (int trial = 0; trial < 50; ++trial) {
    const int n = rng.integer(1, 4);
    const PlantModel plant = rng.plant(n);
    const MatrixXd Q = rng.spd(n);
    const double r = trial % 3 == 0 ? 0.0 : rng.uniform(0.01, 10.0);
    const DareSolution s = solve_dare(plant, Q, r);
    const double scale = 1.0 + s.P.norm();
    EXPECT_LE((riccati_map(plant, Q, s.P, r) - s.P).norm(), 1e-9 * scale);
    EXPECT_TRUE(linalg::is_spd(s.P));
    const MatrixXd Acl = plant.A() + plant.B() * s.K;
    EXPECT_LT(linalg::spectral_radius(Acl), 1.0);
    const MatrixXd lyap = Acl.transpose() * s.P * Acl + Q + r * s.K.transpose() * s.K;
    EXPECT_LE((lyap - s.P).norm(), 1e-8 * scale);
    EXPECT_LT((gain(plant, s.P, r) - s.K).norm(), 1e-12 * (1.0 + s.K.norm()));
  }
}

TEST(Riccati, MonotoneInInputWeight) {
  testing::Rng rng(34);
  for (int trial = 0; trial < 30; ++trial) {
    const int n = rng.integer(1, 4);
    const PlantModel plant = rng.plant(n);
    const MatrixXd Q = rng.spd(n);
    const double r1 = rng.uniform(0.0, 2.0), r2 = r1 + rng.uniform(0.1, 5.0);
    const MatrixXd gap = solve_dare(plant, Q, r2).P - solve_dare(plant, Q, r1).P;
    EXPECT_GE(linalg::lambda_min(gap), -1e-8 * (1.0 + gap.norm()));
  }
}

TEST(Riccati, Errors) {
  const MatrixXd I = MatrixXd::Identity(2, 2);
  const PlantModel plant(I, VectorXd::Ones(2));
  EXPECT_THROW(solve_dare(plant, I, -1.0), ParameterError);
  EXPECT_THROW(solve_dare(PlantModel(I, VectorXd::Zero(2)), I, 1.0), ParameterError);
  EXPECT_THROW(solve_dare(plant, -I, 1.0), ParameterError);
  EXPECT_THROW(solve_dare(plant, MatrixXd::Identity(3, 3), 1.0), ParameterError);
  EXPECT_THROW(gain(scalar(1.0, 1.0), scalar(0.0), 0.0), ParameterError);

  MatrixXd A(2, 2);
  A << 2.0, 0.0, 0.0, 0.5;
  const PlantModel unstabilizable(A, VectorXd::Unit(2, 1));
  EXPECT_THROW(solve_dare(unstabilizable, I, 1.0), SolverError);

  DareOptions tight;
  tight.max_iterations = 2;
  EXPECT_THROW(solve_dare(benchmark_plant(), MatrixXd::Identity(4, 4), 1.0, tight), SolverError);
}

}  // namespace
}  // namespace sppc
