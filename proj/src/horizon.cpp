#include "sppc/horizon.hpp"

#include <string>

#include "sppc/errors.hpp"
#include "sppc/linalg.hpp"

namespace sppc {

HorizonMatrices build_horizon_matrices(const PlantModel& plant, int N, const Eigen::MatrixXd& Q,
                                       const Eigen::MatrixXd& P) {
  if (N < 1) throw ParameterError("horizon N must be >= 1, got " + std::to_string(N));
  const Eigen::Index n = plant.n();
  linalg::require_spd(Q, n, "Q");
  linalg::require_spd(P, n, "P");

  HorizonMatrices hm;
  hm.N_ = N;
  hm.Q_ = linalg::symmetrize(Q);
  hm.P_ = linalg::symmetrize(P);

  const Eigen::Index rows = N * n;

  // powers[i] = A^i B, i = 0..N-1
  std::vector<Eigen::VectorXd> powers(N);
  powers[0] = plant.B();
  for (int i = 1; i < N; ++i) powers[i] = plant.A() * powers[i - 1];

  hm.Phi_ = Eigen::MatrixXd::Zero(rows, N);
  for (int i = 0; i < N; ++i) {
    for (int j = 0; j <= i; ++j) hm.Phi_.block(i * n, j, n, 1) = powers[i - j];
  }

  hm.Upsilon_.resize(rows, n);
  Eigen::MatrixXd Ak = plant.A();
  for (int i = 0; i < N; ++i) {
    hm.Upsilon_.middleRows(i * n, n) = Ak;
    Ak = plant.A() * Ak;
  }

  const Eigen::MatrixXd Q_sqrt = linalg::spd_sqrt(hm.Q_);
  const Eigen::MatrixXd P_sqrt = linalg::spd_sqrt(hm.P_);
  hm.Qbar_ = Eigen::MatrixXd::Zero(rows, rows);
  hm.Qbar_sqrt_ = Eigen::MatrixXd::Zero(rows, rows);
  for (int i = 0; i < N - 1; ++i) {
    hm.Qbar_.block(i * n, i * n, n, n) = hm.Q_;
    hm.Qbar_sqrt_.block(i * n, i * n, n, n) = Q_sqrt;
  }
  hm.Qbar_.block((N - 1) * n, (N - 1) * n, n, n) = hm.P_;
  hm.Qbar_sqrt_.block((N - 1) * n, (N - 1) * n, n, n) = P_sqrt;

  hm.G_ = hm.Qbar_sqrt_ * hm.Phi_;
  hm.H_ = -hm.Qbar_sqrt_ * hm.Upsilon_;

  hm.phi_blocks_.reserve(N);
  for (int i = 0; i < N; ++i) hm.phi_blocks_.push_back(hm.Phi_.middleRows(i * n, n));

  hm.gram_ = linalg::symmetrize(hm.G_.transpose() * hm.G_);
  hm.GtH_ = hm.G_.transpose() * hm.H_;

  const Eigen::VectorXd eig = linalg::sym_eigenvalues(hm.gram_);
  if (eig.minCoeff() <= 1e-12 * std::max(1.0, eig.maxCoeff())) {
    throw DegeneracyError("GᵀG is singular: the input map B produces no response over the horizon");
  }
  hm.gram_llt_.compute(hm.gram_);
  if (hm.gram_llt_.info() != Eigen::Success) {
    throw DegeneracyError("Cholesky factorization of GᵀG failed");
  }
  hm.lipschitz_ = 2.0 * eig.maxCoeff();
  return hm;
}

Eigen::MatrixXd compute_wstar(const HorizonMatrices& hm) {
  // I - G G† is the orthogonal projector onto range(G)^perp; form the residual
  // E = (I - G G†) H from a thin QR of G so that W* = EᵀE stays PSD.
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(hm.G());
  const Eigen::MatrixXd Q1 =
      qr.householderQ() * Eigen::MatrixXd::Identity(hm.G().rows(), hm.G().cols());
  const Eigen::MatrixXd E = hm.H() - Q1 * (Q1.transpose() * hm.H());
  return linalg::symmetrize(E.transpose() * E);
}

Eigen::VectorXd predict_states(const HorizonMatrices& hm, const Eigen::VectorXd& x,
                               const Eigen::VectorXd& u) {
  if (x.size() != hm.n() || u.size() != hm.N()) {
    throw ParameterError("predict_states: dimension mismatch");
  }
  return hm.Phi() * u + hm.Upsilon() * x;
}

}  // namespace sppc
