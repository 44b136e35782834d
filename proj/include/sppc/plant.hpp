#pragma once

#include <Eigen/Dense>

namespace sppc {

/**
 * Single-input discrete-time LTI plant
 *
 *   x(k+1) = A x(k) + B u(k),   x in R^n, u in R.
 *
 * The constructor checks dimensions only. Reachability is a standing
 * assumption of the design procedures and can be queried with
 * check_reachability().
 */
class PlantModel {
 public:
  PlantModel(Eigen::MatrixXd A, Eigen::VectorXd B);

  const Eigen::MatrixXd& A() const { return A_; }
  const Eigen::VectorXd& B() const { return B_; }
  Eigen::Index n() const { return A_.rows(); }

 private:
  Eigen::MatrixXd A_;
  Eigen::VectorXd B_;
};

/// A x + B u.
Eigen::VectorXd propagate(const PlantModel& plant, const Eigen::VectorXd& x, double u);

/// [B, AB, ..., A^{n-1}B].
Eigen::MatrixXd controllability_matrix(const PlantModel& plant);

/// True iff the controllability matrix has numerical rank n, counting singular
/// values above 1e-10 times the largest.
bool check_reachability(const PlantModel& plant);

/// 4-state benchmark plant with two unstable modes (|lambda| ~ 1.53 and 1.14).
PlantModel benchmark_plant();

}  // namespace sppc
