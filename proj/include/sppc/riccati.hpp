#pragma once

#include <Eigen/Dense>

#include "sppc/plant.hpp"

namespace sppc {

struct DareOptions {
  double tolerance = 1e-10;  // relative: ||F(P) - P||_F <= tolerance (1 + ||P||_F)
  int max_iterations = 10000;
};

/// Stabilizing solution of P = AᵀPA - AᵀPB(BᵀPB + r)^{-1}BᵀPA + Q.
struct DareSolution {
  Eigen::MatrixXd P;
  Eigen::RowVectorXd K;  // -(BᵀPB + r)^{-1} BᵀPA
  double r = 0.0;
  double residual = 0.0;  // ||F(P) - P||_F at return
  int iterations = 0;
};

/// Right-hand side of the Riccati equation evaluated at P.
Eigen::MatrixXd riccati_map(const PlantModel& plant, const Eigen::MatrixXd& Q,
                            const Eigen::MatrixXd& P, double r);

/// Fixed-point iteration P_{k+1} = F(P_k) from P_0 = Q, symmetrized every step.
/// r = 0 is allowed. Throws ParameterError for B = 0, r < 0 or non-SPD Q and
/// SolverError on non-convergence or a non-stabilizing limit.
DareSolution solve_dare(const PlantModel& plant, const Eigen::MatrixXd& Q, double r,
                        const DareOptions& options = {});

/// -(BᵀPB + r)^{-1} BᵀPA. Throws ParameterError if BᵀPB + r <= 0.
Eigen::RowVectorXd gain(const PlantModel& plant, const Eigen::MatrixXd& P, double r);

}  // namespace sppc
