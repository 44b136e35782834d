#include "sppc/solvers.hpp"

#include <cmath>
#include <string>
#include <vector>

#include "sppc/errors.hpp"
#include "sppc/linalg.hpp"

namespace sppc {

using Eigen::MatrixXd;
using Eigen::VectorXd;

std::string_view to_string(SolverTag tag) {
  switch (tag) {
    case SolverTag::L1L2:
      return "L1L2";
    case SolverTag::L0_OMP:
      return "L0_OMP";
    case SolverTag::LS:
      return "LS";
    case SolverTag::RIDGE:
      return "RIDGE";
  }
  return "?";
}

void SolverSettings::validate() const {
  if (!(zero_tol > 0.0) || !(fista_tol > 0.0) || !(kkt_tol > 0.0)) {
    throw ParameterError("solver tolerances must be positive");
  }
  if (fista_max_iter < 1) throw ParameterError("fista_max_iter must be >= 1");
}

double zero_threshold(const VectorXd& u, double zero_tol) {
  return u.size() == 0 ? 0.0 : zero_tol * u.cwiseAbs().maxCoeff();
}

int count_nonzeros(const VectorXd& u, double zero_tol) {
  const double thr = zero_threshold(u, zero_tol);
  return static_cast<int>((u.array().abs() > thr).count());
}

namespace {

// FISTA iterations between attempts to solve exactly on the current support.
constexpr int kRefineEvery = 10;

void check_state(const HorizonMatrices& hm, const VectorXd& x) {
  if (x.size() != hm.n()) {
    throw ParameterError("state has " + std::to_string(x.size()) + " entries, expected " +
                         std::to_string(hm.n()));
  }
  if (!x.allFinite()) throw ParameterError("state must be finite");
}

double residual_sq(const HorizonMatrices& hm, const VectorXd& x, const VectorXd& u) {
  return (hm.G() * u - hm.H() * x).squaredNorm();
}

VectorXd soft_threshold(const VectorXd& v, double tau) {
  return v.unaryExpr([tau](double a) {
    const double m = std::abs(a) - tau;
    return m > 0.0 ? std::copysign(m, a) : 0.0;
  });
}

// KKT residual from the gradient g = 2Gᵀ(Gu - Hx).
double kkt_from_gradient(const VectorXd& u, const VectorXd& g, double mu, double zero_tol) {
  const double thr = zero_threshold(u, zero_tol);
  double worst = 0.0;
  for (Eigen::Index i = 0; i < u.size(); ++i) {
    const double viol = std::abs(u(i)) > thr ? std::abs(g(i) + std::copysign(mu, u(i)))
                                             : std::max(0.0, std::abs(g(i)) - mu);
    worst = std::max(worst, viol);
  }
  return worst;
}

// Solves the stationarity conditions 2(M v - b)_S = -mu sign_S on a candidate
// support S with fixed signs, v = 0 off S. Returns an empty vector if the
// solution does not reproduce the signs.
VectorXd solve_on_support(const MatrixXd& M, const VectorXd& b, double mu,
                          const std::vector<Eigen::Index>& support,
                          const std::vector<double>& signs) {
  VectorXd out = VectorXd::Zero(b.size());
  if (support.empty()) return out;
  const auto s = static_cast<Eigen::Index>(support.size());
  MatrixXd Ms(s, s);
  VectorXd rhs(s);
  for (Eigen::Index a = 0; a < s; ++a) {
    for (Eigen::Index c = 0; c < s; ++c) Ms(a, c) = M(support[a], support[c]);
    rhs(a) = b(support[a]) - 0.5 * mu * signs[a];
  }
  const VectorXd v = Ms.llt().solve(rhs);
  for (Eigen::Index a = 0; a < s; ++a) {
    if (!std::isfinite(v(a)) || v(a) == 0.0 || (v(a) > 0.0) != (signs[a] > 0.0)) return {};
    out(support[a]) = v(a);
  }
  return out;
}

// Candidate supports read off an approximate iterate: its nonzeros with their
// signs, and the coordinates whose gradient sits on the +-mu boundary.
std::vector<VectorXd> refinement_candidates(const MatrixXd& M, const VectorXd& b,
                                            const VectorXd& u, double mu, double zero_tol) {
  const double thr = zero_threshold(u, zero_tol);
  const VectorXd g = 2.0 * (M * u - b);
  std::vector<VectorXd> out;
  for (int pass = 0; pass < 2; ++pass) {
    std::vector<Eigen::Index> support;
    std::vector<double> signs;
    for (Eigen::Index i = 0; i < u.size(); ++i) {
      if (pass == 0 && std::abs(u(i)) > thr) {
        support.push_back(i);
        signs.push_back(u(i) > 0.0 ? 1.0 : -1.0);
      } else if (pass == 1 && std::abs(g(i)) >= mu * (1.0 - 1e-3)) {
        support.push_back(i);
        signs.push_back(g(i) < 0.0 ? 1.0 : -1.0);
      }
    }
    if (support.empty()) continue;
    VectorXd v = solve_on_support(M, b, mu, support, signs);
    if (v.size() == u.size()) out.push_back(std::move(v));
  }
  return out;
}

}  // namespace

Packet least_squares_packet(const HorizonMatrices& hm, const VectorXd& x,
                            const SolverSettings& settings) {
  check_state(hm, x);
  const VectorXd b = hm.GtH() * x;
  Packet p;
  p.solver_tag = SolverTag::LS;
  p.u = hm.gram_llt().solve(b);
  p.certificate = (hm.G().transpose() * (hm.G() * p.u - hm.H() * x)).cwiseAbs().maxCoeff();
  const double bound = 1e-8 * (1.0 + (b.size() ? b.cwiseAbs().maxCoeff() : 0.0));
  if (!p.u.allFinite() || p.certificate > bound) {
    throw DegeneracyError("least-squares packet: normal equations not satisfied (residual " +
                          std::to_string(p.certificate) + ")");
  }
  p.sparsity = count_nonzeros(p.u, settings.zero_tol);
  p.objective = residual_sq(hm, x, p.u);
  return p;
}

Packet ridge_packet(const HorizonMatrices& hm, double r, const VectorXd& x,
                    const SolverSettings& settings) {
  check_state(hm, x);
  if (!(r > 0.0) || !std::isfinite(r)) throw ParameterError("ridge weight r must be > 0");
  const VectorXd b = hm.GtH() * x;
  MatrixXd M = hm.gram();
  M.diagonal().array() += r;
  Packet p;
  p.solver_tag = SolverTag::RIDGE;
  p.u = M.llt().solve(b);
  p.certificate =
      (hm.G().transpose() * (hm.G() * p.u - hm.H() * x) + r * p.u).cwiseAbs().maxCoeff();
  p.sparsity = count_nonzeros(p.u, settings.zero_tol);
  p.objective = residual_sq(hm, x, p.u);
  return p;
}

double l1l2_objective(const HorizonMatrices& hm, double mu, const VectorXd& x, const VectorXd& u) {
  return residual_sq(hm, x, u) + mu * u.lpNorm<1>() + linalg::quad(x, hm.Q());
}

double l1l2_kkt_residual(const HorizonMatrices& hm, double mu, const VectorXd& x,
                         const VectorXd& u, double zero_tol) {
  const VectorXd g = 2.0 * hm.G().transpose() * (hm.G() * u - hm.H() * x);
  return kkt_from_gradient(u, g, mu, zero_tol);
}

Packet fista_l1l2(const HorizonMatrices& hm, double mu, const VectorXd& x,
                  const SolverSettings& settings) {
  check_state(hm, x);
  settings.validate();
  if (!(mu > 0.0) || !std::isfinite(mu)) throw ParameterError("mu must be > 0");

  const MatrixXd& M = hm.gram();
  const VectorXd b = hm.GtH() * x;
  const double c0 = (hm.H() * x).squaredNorm();
  const double L = hm.lipschitz();
  const double tau = mu / L;
  const int N = hm.N();

  // ||Gu - Hx||^2 + mu ||u||_1 via the Gram form. Restart and stopping
  // decisions use the increment F(z) - F(u) instead, which avoids cancelling
  // against ||Hx||^2 near the optimum.
  const auto F = [&](const VectorXd& u) {
    return u.dot(M * u) - 2.0 * b.dot(u) + c0 + mu * u.lpNorm<1>();
  };
  const auto increment = [&](const VectorXd& z, const VectorXd& u) {
    return (z - u).dot(M * (z + u) - 2.0 * b) + mu * (z.lpNorm<1>() - u.lpNorm<1>());
  };
  const double kkt_target = settings.kkt_tol * mu;

  VectorXd u = VectorXd::Zero(N);
  VectorXd y = u;
  double Fu = F(u);
  double t = 1.0;
  bool restarted = true;  // y == u
  bool converged = false;
  bool stalled = false;  // stopped on objective change or rounding floor
  double kkt = kkt_from_gradient(u, 2.0 * (M * u - b), mu, settings.zero_tol);
  int it = 0;
  if (kkt <= kkt_target) converged = true;

  // Exact solve on a support identified by the iterate, accepted only if it
  // certifies.
  const auto try_refine = [&]() {
    if (u.cwiseAbs().maxCoeff() == 0.0) return false;
    for (VectorXd& cand : refinement_candidates(M, b, u, mu, settings.zero_tol)) {
      const double kkt_cand = kkt_from_gradient(cand, 2.0 * (M * cand - b), mu, settings.zero_tol);
      if (kkt_cand <= kkt_target && kkt_cand <= kkt) {
        Fu += increment(cand, u);
        u = std::move(cand);
        kkt = kkt_cand;
        return true;
      }
    }
    return false;
  };

  while (!converged && it < settings.fista_max_iter) {
    ++it;
    const VectorXd grad = 2.0 * (M * y - b);
    VectorXd z = soft_threshold(y - grad / L, tau);
    const double dF = increment(z, u);
    if (dF > 0.0) {
      if (restarted) {
        // a plain prox-gradient step cannot ascend; this is the rounding floor
        stalled = true;
        break;
      }
      y = u;
      t = 1.0;
      restarted = true;
      continue;
    }
    const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
    y = z + ((t - 1.0) / t_next) * (z - u);
    t = t_next;
    const bool momentum_step = !restarted;
    restarted = false;
    const double change = -dF;
    u = std::move(z);
    Fu += dF;
    kkt = kkt_from_gradient(u, 2.0 * (M * u - b), mu, settings.zero_tol);
    if (kkt <= kkt_target) {
      converged = true;
    } else if (it % kRefineEvery == 0 && try_refine()) {
      converged = true;
    } else if (momentum_step && change <= settings.fista_tol * std::max(1.0, std::abs(Fu))) {
      stalled = true;
      break;
    }
  }
  if (!converged && try_refine()) converged = true;
  if (stalled) converged = true;

  Packet p;
  p.solver_tag = SolverTag::L1L2;
  p.u = std::move(u);
  p.iterations = it;
  p.certificate = l1l2_kkt_residual(hm, mu, x, p.u, settings.zero_tol);
  p.converged = converged;
  p.sparsity = count_nonzeros(p.u, settings.zero_tol);
  p.objective = l1l2_objective(hm, mu, x, p.u);
  return p;
}

ConstraintWeight ConstraintWeight::validated(const HorizonMatrices& hm, MatrixXd W) {
  if (W.rows() != hm.n() || W.cols() != hm.n()) {
    throw ParameterError("constraint weight W must be n x n");
  }
  if (!W.allFinite() || linalg::asymmetry(W) > 1e-10) {
    throw ParameterError("constraint weight W must be finite and symmetric");
  }
  W = linalg::symmetrize(W);
  const double margin = linalg::lambda_min(W - compute_wstar(hm));
  if (!(margin > 1e-12 * std::max(1.0, linalg::lambda_max(W)))) {
    throw DesignError("constraint weight W does not exceed W*: lambda_min(W - W*) = " +
                      std::to_string(margin));
  }
  return ConstraintWeight(std::move(W), margin);
}

ConstraintWeight ConstraintWeight::unchecked(MatrixXd W) {
  return ConstraintWeight(std::move(W), std::nan(""));
}

Packet omp_l0(const HorizonMatrices& hm, const ConstraintWeight& weight, const VectorXd& x,
              const SolverSettings& settings) {
  check_state(hm, x);
  const MatrixXd& W = weight.matrix();
  if (W.rows() != hm.n() || W.cols() != hm.n()) {
    throw ParameterError("constraint weight W must be n x n");
  }
  const int N = hm.N();
  const VectorXd Hx = hm.H() * x;
  const double budget = linalg::quad(x, W);

  Packet p;
  p.solver_tag = SolverTag::L0_OMP;
  p.u = VectorXd::Zero(N);
  VectorXd res = -Hx;  // Gu - Hx
  double res_sq = res.squaredNorm();

  std::vector<Eigen::Index> support;
  std::vector<bool> in_support(N, false);
  while (!(res_sq <= budget)) {
    if (static_cast<int>(support.size()) == N) {
      throw DesignError("OMP: constraint infeasible at full support (W does not exceed W*); "
                        "residual " + std::to_string(res_sq) + " > budget " +
                        std::to_string(budget));
    }
    const VectorXd corr = hm.G().transpose() * res;
    Eigen::Index best = -1;
    double best_abs = -1.0;
    for (Eigen::Index i = 0; i < N; ++i) {
      if (!in_support[i] && std::abs(corr(i)) > best_abs) {
        best = i;
        best_abs = std::abs(corr(i));
      }
    }
    support.push_back(best);
    in_support[best] = true;

    const auto s = static_cast<Eigen::Index>(support.size());
    MatrixXd Gs(hm.G().rows(), s);
    for (Eigen::Index a = 0; a < s; ++a) Gs.col(a) = hm.G().col(support[a]);
    const VectorXd v = Gs.householderQr().solve(Hx);
    p.u.setZero();
    for (Eigen::Index a = 0; a < s; ++a) p.u(support[a]) = v(a);
    res = hm.G() * p.u - Hx;
    res_sq = res.squaredNorm();
  }

  p.iterations = static_cast<int>(support.size());
  p.certificate = budget - res_sq;
  p.sparsity = count_nonzeros(p.u, settings.zero_tol);
  p.objective = res_sq;
  return p;
}

}  // namespace sppc
