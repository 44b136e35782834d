#pragma once

#include <string_view>

#include <Eigen/Dense>

#include "sppc/horizon.hpp"

namespace sppc {

enum class SolverTag { L1L2, L0_OMP, LS, RIDGE };

std::string_view to_string(SolverTag tag);

/**
 * A control packet: the N tentative inputs u_0..u_{N-1} computed from one
 * state measurement, plus solver diagnostics.
 *
 * `certificate` is solver specific:
 *  - L1L2:   KKT residual of the l1-l2 problem (0 at the exact minimizer)
 *  - L0_OMP: constraint slack ||x||_W^2 - ||Gu - Hx||^2 (>= 0 when feasible)
 *  - LS:     ||Gᵀ(Gu - Hx)||_inf (normal-equation residual)
 *  - RIDGE:  ||Gᵀ(Gu - Hx) + r u||_inf
 */
struct Packet {
  Eigen::VectorXd u;
  int sparsity = 0;
  SolverTag solver_tag = SolverTag::LS;
  int iterations = 0;
  double certificate = 0.0;
  bool converged = true;
  double objective = 0.0;  // J(x,u) for L1L2, ||Gu - Hx||^2 otherwise
};

struct SolverSettings {
  double zero_tol = 1e-8;  // |u_i| <= zero_tol ||u||_inf counts as zero
  double fista_tol = 1e-13;  // relative objective change between momentum steps
  int fista_max_iter = 20000;
  double kkt_tol = 1e-6;  // stop once the KKT residual is below kkt_tol * mu

  void validate() const;
};

/// Entries with |u_i| <= zero_tol ||u||_inf count as zero. The threshold
/// scales with u, so a packet and any nonzero multiple of it have the same
/// count; u = 0 counts 0.
double zero_threshold(const Eigen::VectorXd& u, double zero_tol);

/// ||u||_0 under zero_threshold.
int count_nonzeros(const Eigen::VectorXd& u, double zero_tol);

/// u* = (GᵀG)^{-1} GᵀH x. Throws DegeneracyError if the normal equations
/// cannot be solved to tolerance.
Packet least_squares_packet(const HorizonMatrices& hm, const Eigen::VectorXd& x,
                            const SolverSettings& settings = {});

/// (GᵀG + rI)^{-1} GᵀH x, the minimizer of ||Gu - Hx||^2 + r ||u||^2.
Packet ridge_packet(const HorizonMatrices& hm, double r, const Eigen::VectorXd& x,
                    const SolverSettings& settings = {});

/// l1-l2 objective J(x,u) = ||Gu - Hx||^2 + mu ||u||_1 + ||x||_Q^2.
double l1l2_objective(const HorizonMatrices& hm, double mu, const Eigen::VectorXd& x,
                      const Eigen::VectorXd& u);

/// KKT residual of min ||Gu - Hx||^2 + mu ||u||_1 at u (see Packet).
double l1l2_kkt_residual(const HorizonMatrices& hm, double mu, const Eigen::VectorXd& x,
                         const Eigen::VectorXd& u, double zero_tol);

/// FISTA with step 1/L, L = 2 lambda_max(GᵀG), and function-value restart, so
/// accepted iterates never increase the objective. Starts from u = 0; when
/// ||GᵀHx||_inf <= mu/2 the first prox step returns exactly zero.
/// Exhausting fista_max_iter returns the best iterate with converged = false.
Packet fista_l1l2(const HorizonMatrices& hm, double mu, const Eigen::VectorXd& x,
                  const SolverSettings& settings = {});

/**
 * Weight W of the l2 constraint ||Gu - Hx||^2 <= ||x||_W^2.
 *
 * validated() checks W - W* is positive definite so that the constraint set
 * is non-empty for every x. unchecked() skips the check; it exists for audits
 * that probe deliberately infeasible designs.
 */
class ConstraintWeight {
 public:
  static ConstraintWeight validated(const HorizonMatrices& hm, Eigen::MatrixXd W);
  static ConstraintWeight unchecked(Eigen::MatrixXd W);

  const Eigen::MatrixXd& matrix() const { return W_; }
  /// lambda_min(W - W*), or NaN for unchecked weights.
  double margin() const { return margin_; }

 private:
  ConstraintWeight(Eigen::MatrixXd W, double margin) : W_(std::move(W)), margin_(margin) {}
  Eigen::MatrixXd W_;
  double margin_;
};

/// Orthogonal matching pursuit for min ||u||_0 s.t. ||Gu - Hx||^2 <= ||x||_W^2.
/// Greedy on |[Gᵀ(Gu - Hx)]_i| (lowest index wins ties), least-squares refit on
/// the support, stops at the first feasible iterate. Throws DesignError if
/// even the full support is infeasible.
Packet omp_l0(const HorizonMatrices& hm, const ConstraintWeight& W, const Eigen::VectorXd& x,
              const SolverSettings& settings = {});

}  // namespace sppc
