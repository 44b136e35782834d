#include "sppc/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <Eigen/Eigenvalues>

#include "sppc/errors.hpp"

namespace sppc::linalg {

double asymmetry(const MatrixXd& m) {
  if (m.rows() != m.cols()) return INFINITY;
  if (m.size() == 0) return 0.0;
  const double scale = 1.0 + m.cwiseAbs().maxCoeff();
  return (m - m.transpose()).cwiseAbs().maxCoeff() / scale;
}

MatrixXd symmetrize(const MatrixXd& m) { return 0.5 * (m + m.transpose()); }

VectorXd sym_eigenvalues(const MatrixXd& m) {
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(symmetrize(m), Eigen::EigenvaluesOnly);
  return es.eigenvalues();
}

double lambda_min(const MatrixXd& m) { return sym_eigenvalues(m).minCoeff(); }

double lambda_max(const MatrixXd& m) { return sym_eigenvalues(m).maxCoeff(); }

double sigma_max(const MatrixXd& m) {
  if (m.size() == 0) return 0.0;
  Eigen::JacobiSVD<MatrixXd> svd(m);
  return svd.singularValues()(0);
}

namespace {

double clip_floor(const VectorXd& eig) {
  return kEigenClip * std::max(1.0, eig.maxCoeff());
}

}  // namespace

bool is_spd(const MatrixXd& m) {
  if (m.rows() != m.cols() || m.rows() == 0) return false;
  if (!m.allFinite() || asymmetry(m) > 1e-12) return false;
  const VectorXd eig = sym_eigenvalues(m);
  return eig.minCoeff() > clip_floor(eig);
}

void require_spd(const MatrixXd& m, Eigen::Index n, const char* what) {
  if (m.rows() != n || m.cols() != n) {
    throw ParameterError(std::string(what) + " must be " + std::to_string(n) + "x" +
                         std::to_string(n));
  }
  if (!is_spd(m)) {
    throw ParameterError(std::string(what) + " must be symmetric positive definite");
  }
}

MatrixXd spd_sqrt(const MatrixXd& m) {
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(symmetrize(m));
  const VectorXd& eig = es.eigenvalues();
  if (eig.minCoeff() <= clip_floor(eig)) {
    throw ParameterError("matrix square root requested for a matrix that is not positive definite");
  }
  return es.eigenvectors() * eig.cwiseSqrt().asDiagonal() * es.eigenvectors().transpose();
}

MatrixXd spd_inv_sqrt(const MatrixXd& m) {
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(symmetrize(m));
  const VectorXd& eig = es.eigenvalues();
  if (eig.minCoeff() <= clip_floor(eig)) {
    throw ParameterError("inverse square root requested for a matrix that is not positive definite");
  }
  return es.eigenvectors() * eig.cwiseSqrt().cwiseInverse().asDiagonal() *
         es.eigenvectors().transpose();
}

double spectral_radius(const MatrixXd& m) {
  if (m.size() == 0) return 0.0;
  Eigen::EigenSolver<MatrixXd> es(m, false);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

}  // namespace sppc::linalg
