#pragma once

#include <vector>

#include <Eigen/Dense>

#include "sppc/plant.hpp"

namespace sppc {

/**
 * Horizon-stacked prediction operators for an N-step horizon.
 *
 * With predicted states x'_{i+1} = A x'_i + B u_i from x'_0 = x,
 *
 *   [x'_1; ...; x'_N] = Phi u + Upsilon x,
 *   Qbar = blockdiag(Q, ..., Q, P),
 *   G = Qbar^{1/2} Phi,   H = -Qbar^{1/2} Upsilon,
 *
 * so that ||G u - H x||^2 = sum_{i=1}^{N-1} ||x'_i||_Q^2 + ||x'_N||_P^2.
 *
 * Immutable once built. GᵀG, its Cholesky factor and GᵀH are cached since
 * every solver call needs them.
 */
class HorizonMatrices {
 public:
  int N() const { return N_; }
  Eigen::Index n() const { return Upsilon_.cols(); }

  const Eigen::MatrixXd& G() const { return G_; }
  const Eigen::MatrixXd& H() const { return H_; }
  const Eigen::MatrixXd& Phi() const { return Phi_; }
  const Eigen::MatrixXd& Upsilon() const { return Upsilon_; }
  const Eigen::MatrixXd& Qbar() const { return Qbar_; }
  const Eigen::MatrixXd& Qbar_sqrt() const { return Qbar_sqrt_; }
  const Eigen::MatrixXd& Q() const { return Q_; }
  const Eigen::MatrixXd& P() const { return P_; }

  /// Rows [i n, (i+1) n) of Phi, i = 0..N-1.
  const std::vector<Eigen::MatrixXd>& phi_blocks() const { return phi_blocks_; }

  /// GᵀG (symmetrized).
  const Eigen::MatrixXd& gram() const { return gram_; }
  const Eigen::LLT<Eigen::MatrixXd>& gram_llt() const { return gram_llt_; }
  /// GᵀH.
  const Eigen::MatrixXd& GtH() const { return GtH_; }
  /// 2 lambda_max(GᵀG): Lipschitz constant of the gradient of ||Gu - Hx||^2.
  double lipschitz() const { return lipschitz_; }

 private:
  friend HorizonMatrices build_horizon_matrices(const PlantModel&, int, const Eigen::MatrixXd&,
                                                const Eigen::MatrixXd&);
  HorizonMatrices() = default;

  int N_ = 0;
  Eigen::MatrixXd G_, H_, Phi_, Upsilon_, Qbar_, Qbar_sqrt_, Q_, P_;
  std::vector<Eigen::MatrixXd> phi_blocks_;
  Eigen::MatrixXd gram_, GtH_;
  Eigen::LLT<Eigen::MatrixXd> gram_llt_;
  double lipschitz_ = 0.0;
};

/// Throws ParameterError for N < 1 or non-SPD Q/P, DegeneracyError if GᵀG is
/// numerically singular (B = 0).
HorizonMatrices build_horizon_matrices(const PlantModel& plant, int N, const Eigen::MatrixXd& Q,
                                       const Eigen::MatrixXd& P);

/// W* = Hᵀ(I - G G†)H, the residual form of the least-squares packet:
/// ||G u* - H x||^2 = ||x||_{W*}^2. Symmetrized.
Eigen::MatrixXd compute_wstar(const HorizonMatrices& hm);

/// Predicted states [x'_1; ...; x'_N] = Phi u + Upsilon x.
Eigen::VectorXd predict_states(const HorizonMatrices& hm, const Eigen::VectorXd& x,
                               const Eigen::VectorXd& u);

}  // namespace sppc
