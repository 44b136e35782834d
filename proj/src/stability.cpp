#include "sppc/stability.hpp"

#include <cmath>
#include <string>

#include <Eigen/Eigenvalues>

#include "sppc/errors.hpp"
#include "sppc/linalg.hpp"

namespace sppc {

using Eigen::MatrixXd;
using Eigen::VectorXd;

double L1L2Design::phi(double t) const {
  return a1 * t + (a2 + linalg::lambda_max(Q)) * t * t;
}

L1L2Design design_l1l2(const PlantModel& plant, const MatrixXd& Q, double mu, int N,
                       double epsilon) {
  if (!(mu > 0.0) || !std::isfinite(mu)) throw ParameterError("mu must be > 0");
  if (!(epsilon > 0.0) || !std::isfinite(epsilon)) throw ParameterError("epsilon must be > 0");
  if (N < 1) throw ParameterError("horizon N must be >= 1");
  const double r = mu * mu * N / (4.0 * epsilon);
  return assemble_l1l2(plant, Q, mu, N, epsilon, solve_dare(plant, Q, r));
}

L1L2Design assemble_l1l2(const PlantModel& plant, const MatrixXd& Q, double mu, int N,
                         double epsilon, DareSolution dare) {
  HorizonMatrices hm = build_horizon_matrices(plant, N, Q, dare.P);

  const MatrixXd lsq_map = hm.gram_llt().solve(hm.GtH());  // G†H
  const double a1 = mu * std::sqrt(static_cast<double>(plant.n())) * linalg::sigma_max(lsq_map);
  MatrixXd Wstar = compute_wstar(hm);
  const double a2 = std::max(0.0, linalg::lambda_max(Wstar));
  const VectorXd q_eig = linalg::sym_eigenvalues(Q);
  const double rho = 1.0 - q_eig.minCoeff() / (a1 + a2 + q_eig.maxCoeff());
  if (!(rho >= 0.0 && rho < 1.0)) {
    throw DesignError("l1-l2 design: contraction rate rho = " + std::to_string(rho) +
                      " outside [0,1)");
  }
  const double R = std::sqrt((epsilon / q_eig.minCoeff() + 0.25) / (1.0 - rho));
  const double r = dare.r;

  return L1L2Design{plant, linalg::symmetrize(Q), mu, N, epsilon, r, std::move(dare),
                    std::move(hm), a1, a2, rho, R, std::move(Wstar)};
}

L0Design design_l0(const PlantModel& plant, const MatrixXd& Q, int N, double beta) {
  if (!(beta > 0.0 && beta < 1.0)) throw ParameterError("beta must lie in (0,1)");
  if (N < 1) throw ParameterError("horizon N must be >= 1");

  // step 2: Riccati with r = 0
  DareSolution dare = solve_dare(plant, Q, 0.0);
  const MatrixXd& P = dare.P;
  HorizonMatrices hm = build_horizon_matrices(plant, N, Q, P);

  // step 3: rho via the symmetric similarity P^{-1/2} Q P^{-1/2} (same spectrum as Q P^{-1})
  const MatrixXd P_isqrt = linalg::spd_inv_sqrt(P);
  const double rho = 1.0 - linalg::lambda_min(P_isqrt * Q * P_isqrt);
  if (!(rho < 1.0)) {
    throw DesignError("l0 design: rho = " + std::to_string(rho) + " >= 1 (P is not above Q)");
  }
  if (rho < -1e-12) {
    throw DesignError("l0 design: rho = " + std::to_string(rho) + " < 0 (P is below Q)");
  }
  const double rho_c = std::max(rho, 0.0);

  // c1: largest generalized eigenvalue of the pencil (Phi_iᵀ P Phi_i, GᵀG)
  double c1 = 0.0;
  for (const MatrixXd& block : hm.phi_blocks()) {
    const MatrixXd lhs = linalg::symmetrize(block.transpose() * P * block);
    Eigen::GeneralizedSelfAdjointEigenSolver<MatrixXd> ges(lhs, hm.gram(), Eigen::EigenvaluesOnly);
    if (ges.info() != Eigen::Success) throw DesignError("l0 design: pencil eigensolver failed");
    c1 = std::max(c1, ges.eigenvalues().maxCoeff());
  }
  if (!(c1 > 0.0)) throw DesignError("l0 design: c1 must be positive");

  // c = (1 + rho + ... + rho^{N-1}) c1, i.e. (1 - rho^N)/(1 - rho) c1
  double geometric = 0.0;
  double power = 1.0;
  for (int i = 0; i < N; ++i) {
    geometric += power;
    power *= rho_c;
  }
  const double c = geometric * c1;

  // steps 4 and 5
  MatrixXd Eps = beta * (1.0 - rho_c) / c * P;
  MatrixXd W = linalg::symmetrize((P - Q) + Eps);
  MatrixXd Wstar = compute_wstar(hm);
  if (!linalg::is_spd(Eps)) throw DesignError("l0 design: Eps is not positive definite");
  ConstraintWeight weight = ConstraintWeight::validated(hm, W);

  return L0Design{plant, linalg::symmetrize(Q), N, beta, std::move(dare), std::move(hm), c1,
                  rho_c, c, std::move(Eps), std::move(Wstar), std::move(W), std::move(weight)};
}

L0Design with_weight(const L0Design& design, MatrixXd W) {
  if (W.rows() != design.plant.n() || W.cols() != design.plant.n()) {
    throw ParameterError("W override must be n x n");
  }
  L0Design out = design;
  out.W = linalg::symmetrize(W);
  out.Eps = out.W - out.Wstar;
  out.weight = ConstraintWeight::unchecked(out.W);
  return out;
}

bool omega_contains(const HorizonMatrices& hm, double mu, const VectorXd& x) {
  if (x.size() != hm.n()) throw ParameterError("omega_contains: state has the wrong size");
  return (hm.GtH() * x).lpNorm<Eigen::Infinity>() <= mu / 2.0;
}

ValueEstimate value_function(const HorizonMatrices& hm, double mu, const VectorXd& x,
                             const SolverSettings& settings) {
  Packet p = fista_l1l2(hm, mu, x, settings);
  return ValueEstimate{p.objective, p.converged, std::move(p)};
}

InequalityAudit check_inequality(double lhs, double rhs, double rel_slack, double abs_slack) {
  InequalityAudit a;
  a.lhs = lhs;
  a.rhs = rhs;
  a.pass = std::isfinite(lhs) && std::isfinite(rhs) &&
           lhs <= rhs + rel_slack * std::abs(rhs) + abs_slack;
  return a;
}

SandwichAudit audit_value_bounds(const L1L2Design& design, const VectorXd& x,
                                 const SolverSettings& settings) {
  const double norm = x.norm();
  const double v = value_function(design.horizon, design.mu, x, settings).value;
  SandwichAudit out;
  out.lower = check_inequality(linalg::lambda_min(design.Q) * norm * norm, v, 0.0, 1e-12);
  out.upper = check_inequality(v, design.phi(norm), kAuditRelSlack, 1e-12);
  return out;
}

VectorXd roll_open_loop(const PlantModel& plant, const VectorXd& x, const VectorXd& packet,
                        int steps) {
  if (steps < 0 || steps > packet.size()) {
    throw ParameterError("roll_open_loop: steps must lie in [0, N]");
  }
  VectorXd state = x;
  for (int l = 0; l < steps; ++l) state = propagate(plant, state, packet(l));
  return state;
}

InequalityAudit audit_contraction_l1l2(const L1L2Design& design, const VectorXd& x, int dropouts,
                                       const SolverSettings& settings) {
  if (dropouts < 1 || dropouts > design.N) {
    throw ParameterError("audit: dropouts must lie in [1, N]");
  }
  const ValueEstimate v0 = value_function(design.horizon, design.mu, x, settings);
  const VectorXd xi = roll_open_loop(design.plant, x, v0.packet.u, dropouts);
  const double vi = value_function(design.horizon, design.mu, xi, settings).value;
  const double rhs = design.rho * v0.value + design.epsilon + linalg::lambda_min(design.Q) / 4.0;
  return check_inequality(vi, rhs, kAuditRelSlack, 1e-12);
}

L0ContractionAudit audit_contraction_l0(const L0Design& design, const VectorXd& x, int dropouts,
                                        const SolverSettings& settings) {
  if (dropouts < 1 || dropouts > design.N) {
    throw ParameterError("audit: dropouts must lie in [1, N]");
  }
  const MatrixXd& P = design.dare.P;
  const Packet p = omp_l0(design.horizon, design.weight, x, settings);
  const VectorXd xi = roll_open_loop(design.plant, x, p.u, dropouts);

  const double v0 = linalg::quad(x, P);
  const double vi = linalg::quad(xi, P);
  const double eps_term = design.c * linalg::quad(x, design.Eps);
  const double envelope = design.rho * v0 + eps_term;

  L0ContractionAudit out;
  out.bound =
      check_inequality(vi, std::pow(design.rho, dropouts) * v0 + eps_term, kAuditRelSlack, 1e-12);
  out.envelope = check_inequality(vi, envelope, kAuditRelSlack, 1e-12);
  out.decrease = check_inequality(envelope, v0, 0.0, 0.0);
  // strict for x != 0
  if (x.squaredNorm() > 0.0) out.decrease.pass = out.decrease.pass && envelope < v0;
  return out;
}

InequalityAudit audit_residual_l0(const L0Design& design, const VectorXd& x,
                                  const SolverSettings& settings) {
  const HorizonMatrices& hm = design.horizon;
  const Packet star = least_squares_packet(hm, x, settings);
  VectorXd u;
  try {
    u = omp_l0(hm, design.weight, x, settings).u;
  } catch (const DesignError&) {
    u = star.u;
  }
  const double lhs = (hm.G() * (u - star.u)).squaredNorm();
  const double rhs = linalg::quad(x, design.W - design.Wstar);
  const double slack = 1e-9 * std::max(1.0, linalg::quad(x, design.W));
  return check_inequality(lhs, rhs, 0.0, slack);
}

}  // namespace sppc
