#pragma once

#include <Eigen/Dense>

#include "sppc/horizon.hpp"
#include "sppc/plant.hpp"
#include "sppc/riccati.hpp"
#include "sppc/solvers.hpp"

namespace sppc {

// ---------------------------------------------------------------------------
// l1-l2 packets: practical stability
// ---------------------------------------------------------------------------

/**
 * Parameters of an l1-l2 packetized controller with a practical-stability
 * certificate.
 *
 * The terminal weight P solves the Riccati equation with input weight
 * r = mu^2 N / (4 epsilon). With a1 = mu sqrt(n) sigma_max(G†H) and
 * a2 = lambda_max(W*), the value function satisfies
 *
 *   lambda_min(Q) |x|^2 <= V(x) <= phi(|x|) = a1 |x| + (a2 + lambda_max(Q)) |x|^2
 *
 * and contracts by rho = 1 - lambda_min(Q) / (a1 + a2 + lambda_max(Q)) across
 * any admissible dropout burst, up to epsilon + lambda_min(Q)/4. The state is
 * ultimately bounded by R = sqrt((epsilon / lambda_min(Q) + 1/4) / (1 - rho)).
 */
struct L1L2Design {
  PlantModel plant;
  Eigen::MatrixXd Q;
  double mu;
  int N;
  double epsilon;
  double r;
  DareSolution dare;
  HorizonMatrices horizon;  // built with Q and dare.P
  double a1;
  double a2;
  double rho;
  double R;
  Eigen::MatrixXd Wstar;

  double phi(double t) const;
};

/// Solves the Riccati equation at r = mu^2 N / (4 epsilon) and assembles the design.
L1L2Design design_l1l2(const PlantModel& plant, const Eigen::MatrixXd& Q, double mu, int N,
                       double epsilon);

/// Assembles a design around a given Riccati solution. design_l1l2 calls this
/// with the matching r; passing a mismatched one builds negative controls.
L1L2Design assemble_l1l2(const PlantModel& plant, const Eigen::MatrixXd& Q, double mu, int N,
                         double epsilon, DareSolution dare);

// ---------------------------------------------------------------------------
// l2-constrained l0 packets: asymptotic stability
// ---------------------------------------------------------------------------

/**
 * Parameters of an l0 (OMP) packetized controller.
 *
 * Built in five steps: Q; P from the Riccati equation with r = 0;
 * rho = 1 - lambda_min(P^{-1/2} Q P^{-1/2}), c1 = max_i lambda_max(Phi_iᵀ P Phi_i, GᵀG)
 * and c = (1 + rho + ... + rho^{N-1}) c1; Eps = beta (1 - rho) P / c; W = (P - Q) + Eps.
 */
struct L0Design {
  PlantModel plant;
  Eigen::MatrixXd Q;
  int N;
  double beta;
  DareSolution dare;
  HorizonMatrices horizon;  // built with Q and dare.P
  double c1;
  double rho;
  double c;
  Eigen::MatrixXd Eps;
  Eigen::MatrixXd Wstar;  // Hᵀ(I - GG†)H from the horizon operators
  Eigen::MatrixXd W;
  ConstraintWeight weight;
};

/// Throws ParameterError for beta outside (0,1) and DesignError if an
/// internal consistency check fails (rho >= 1, W not above W*, Eps not SPD).
L0Design design_l0(const PlantModel& plant, const Eigen::MatrixXd& Q, int N, double beta);

/// Copy of `design` with W replaced and Eps = W - W*; the weight is not
/// validated. For negative controls and user overrides.
L0Design with_weight(const L0Design& design, Eigen::MatrixXd W);

// ---------------------------------------------------------------------------
// Set membership and value function
// ---------------------------------------------------------------------------

/// Dead zone of the l1-l2 controller: ||GᵀH x||_inf <= mu / 2.
bool omega_contains(const HorizonMatrices& hm, double mu, const Eigen::VectorXd& x);

struct ValueEstimate {
  double value;  // J(x, u) at the FISTA packet; >= V(x)
  bool converged;
  Packet packet;
};

/// V(x) = min_u J(x,u), evaluated through FISTA. An upper approximation of the
/// true minimum within the solver tolerance.
ValueEstimate value_function(const HorizonMatrices& hm, double mu, const Eigen::VectorXd& x,
                             const SolverSettings& settings = {});

// ---------------------------------------------------------------------------
// Audits
// ---------------------------------------------------------------------------

/// Relative slack granted to audited inequalities whose left side is computed
/// through an iterative solver.
inline constexpr double kAuditRelSlack = 1e-6;

/// One audited inequality lhs <= rhs.
struct InequalityAudit {
  double lhs = 0.0;
  double rhs = 0.0;
  bool pass = true;

  double slack() const { return rhs - lhs; }
};

/// lhs <= rhs + rel_slack |rhs| + abs_slack.
InequalityAudit check_inequality(double lhs, double rhs, double rel_slack, double abs_slack = 0.0);

/// Value-function sandwich lambda_min(Q)|x|^2 <= V(x) <= phi(|x|).
struct SandwichAudit {
  InequalityAudit lower;
  InequalityAudit upper;
  bool pass() const { return lower.pass && upper.pass; }
};

SandwichAudit audit_value_bounds(const L1L2Design& design, const Eigen::VectorXd& x,
                                 const SolverSettings& settings = {});

/// Applies the first `steps` entries of `packet` open loop from x.
Eigen::VectorXd roll_open_loop(const PlantModel& plant, const Eigen::VectorXd& x,
                               const Eigen::VectorXd& packet, int steps);

/// V(f^i(x)) <= rho V(x) + epsilon + lambda_min(Q)/4 after i = dropouts
/// open-loop steps on the FISTA packet computed at x.
InequalityAudit audit_contraction_l1l2(const L1L2Design& design, const Eigen::VectorXd& x,
                                       int dropouts, const SolverSettings& settings = {});

struct L0ContractionAudit {
  InequalityAudit bound;     // |x_i|_P^2 <= rho^i |x|_P^2 + c |x|_Eps^2
  InequalityAudit envelope;  // |x_i|_P^2 <= xᵀ(rho P + c Eps) x
  InequalityAudit decrease;  // xᵀ(rho P + c Eps) x < |x|_P^2 (x != 0)
  bool pass() const { return bound.pass && envelope.pass && decrease.pass; }
};

/// Contraction of V_P(x) = |x|_P^2 along i = dropouts open-loop
/// steps on the OMP packet computed at x.
L0ContractionAudit audit_contraction_l0(const L0Design& design, const Eigen::VectorXd& x,
                                        int dropouts, const SolverSettings& settings = {});

/// |G(u - u*)|^2 <= |x|_Eps^2 for the OMP packet u, with absolute slack
/// 1e-9 max(1, |x|_W^2). If OMP finds no feasible packet (W below W*) the
/// least-squares packet stands in and the audit fails on the sign of the
/// right side.
InequalityAudit audit_residual_l0(const L0Design& design, const Eigen::VectorXd& x,
                                  const SolverSettings& settings = {});

}  // namespace sppc
