#pragma once

#include <Eigen/Dense>

// Small dense helpers shared by the modules. All matrices are expected to be
// small (n <= ~32, N <= ~64), so nothing here tries to exploit structure.

namespace sppc::linalg {

using Eigen::MatrixXd;
using Eigen::VectorXd;

/// Largest |a_ij - a_ji| relative to 1 + max|a_ij|.
double asymmetry(const MatrixXd& m);

/// (M + M^T) / 2.
MatrixXd symmetrize(const MatrixXd& m);

/// Eigenvalues of the symmetric part of m, ascending.
VectorXd sym_eigenvalues(const MatrixXd& m);

double lambda_min(const MatrixXd& m);
double lambda_max(const MatrixXd& m);
double sigma_max(const MatrixXd& m);

/// Symmetric with all eigenvalues strictly above the clip floor.
bool is_spd(const MatrixXd& m);

/// Throws ParameterError naming `what` unless m is square, size n, symmetric and SPD.
void require_spd(const MatrixXd& m, Eigen::Index n, const char* what);

/// Symmetric PSD square root via eigendecomposition. Eigenvalues below the
/// clip floor raise ParameterError instead of being regularized.
MatrixXd spd_sqrt(const MatrixXd& m);

/// Inverse of spd_sqrt(m).
MatrixXd spd_inv_sqrt(const MatrixXd& m);

/// x^T M x.
inline double quad(const VectorXd& x, const MatrixXd& m) { return x.dot(m * x); }

/// Spectral radius of a general square matrix.
double spectral_radius(const MatrixXd& m);

/// Eigenvalues below this (relative to max(1, lambda_max)) count as zero.
inline constexpr double kEigenClip = 1e-14;

}  // namespace sppc::linalg
