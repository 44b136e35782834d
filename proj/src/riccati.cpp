#include "sppc/riccati.hpp"

#include <cmath>
#include <string>

#include "sppc/errors.hpp"
#include "sppc/linalg.hpp"

namespace sppc {

Eigen::MatrixXd riccati_map(const PlantModel& plant, const Eigen::MatrixXd& Q,
                            const Eigen::MatrixXd& P, double r) {
  const Eigen::MatrixXd& A = plant.A();
  const Eigen::VectorXd& B = plant.B();
  const Eigen::VectorXd PB = P * B;
  const double denom = B.dot(PB) + r;
  const Eigen::RowVectorXd BtPA = PB.transpose() * A;
  return A.transpose() * P * A - BtPA.transpose() * BtPA / denom + Q;
}

Eigen::RowVectorXd gain(const PlantModel& plant, const Eigen::MatrixXd& P, double r) {
  if (P.rows() != plant.n() || P.cols() != plant.n()) {
    throw ParameterError("gain: P has the wrong size");
  }
  const Eigen::VectorXd PB = P * plant.B();
  const double denom = plant.B().dot(PB) + r;
  if (!(denom > 0.0)) {
    throw ParameterError("gain: BᵀPB + r must be positive, got " + std::to_string(denom));
  }
  return -(PB.transpose() * plant.A()) / denom;
}

DareSolution solve_dare(const PlantModel& plant, const Eigen::MatrixXd& Q, double r,
                        const DareOptions& options) {
  if (!(r >= 0.0) || !std::isfinite(r)) {
    throw ParameterError("input weight r must be finite and >= 0");
  }
  if (plant.B().squaredNorm() == 0.0) throw ParameterError("B = 0: plant has no input");
  linalg::require_spd(Q, plant.n(), "Q");

  DareSolution sol;
  sol.r = r;
  Eigen::MatrixXd P = linalg::symmetrize(Q);
  double residual = INFINITY;
  int it = 0;
  for (; it < options.max_iterations; ++it) {
    Eigen::MatrixXd next = linalg::symmetrize(riccati_map(plant, Q, P, r));
    if (!next.allFinite()) {
      throw SolverError("Riccati iteration diverged (non-finite iterate)", residual);
    }
    residual = (next - P).norm();
    P = std::move(next);
    if (residual <= options.tolerance * (1.0 + P.norm())) break;
  }
  // report the residual of the returned P, not of the previous iterate
  residual = (linalg::symmetrize(riccati_map(plant, Q, P, r)) - P).norm();
  if (residual > options.tolerance * (1.0 + P.norm())) {
    throw SolverError("Riccati iteration did not converge after " + std::to_string(it) +
                          " iterations (residual " + std::to_string(residual) + ")",
                      residual);
  }

  sol.P = P;
  sol.K = gain(plant, P, r);
  sol.residual = residual;
  sol.iterations = it + 1;

  const double rho = linalg::spectral_radius(plant.A() + plant.B() * sol.K);
  if (!(rho < 1.0)) {
    throw SolverError("Riccati limit is not stabilizing: spectral radius of A+BK is " +
                          std::to_string(rho),
                      residual);
  }
  return sol;
}

}  // namespace sppc
