#include "pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <random>
#include <sstream>

#include <CLI11.hpp>

#include "sppc/linalg.hpp"

#ifndef SPPC_VERSION
#define SPPC_VERSION "unknown"
#endif

namespace sppc::cli {

using Eigen::MatrixXd;
using Eigen::VectorXd;
using nlohmann::json;

namespace {

json to_json(const MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

json to_json(const VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

json to_json(const Eigen::RowVectorXd& v) {
  return std::vector<double>(v.data(), v.data() + v.size());
}

json dare_json(const DareSolution& d) {
  return {{"r", d.r}, {"P", to_json(d.P)}, {"K", to_json(d.K)}, {"residual", d.residual},
          {"iterations", d.iterations}};
}

std::string family_name(SolverTag t) { return std::string(to_string(t)); }

}  // namespace

std::vector<BuiltController> build_controllers(const ExperimentConfig& cfg,
                                               bool validate_weights) {
  const SolverSettings settings = cfg.solver;
  settings.validate();
  std::vector<BuiltController> out;
  std::shared_ptr<const HorizonMatrices> ls_cache;
  for (const ControllerSpec& spec : cfg.controllers) {
    BuiltController b;
    b.spec = spec;
    switch (spec.family) {
      case SolverTag::L1L2: {
        auto d = std::make_shared<const L1L2Design>(
            design_l1l2(cfg.plant, spec.Q, spec.mu, cfg.N, spec.epsilon));
        b.l1l2 = d;
        b.dare = d->dare;
        b.horizon = std::shared_ptr<const HorizonMatrices>(d, &d->horizon);
        b.designer = [d, settings](const VectorXd& x) {
          return fista_l1l2(d->horizon, d->mu, x, settings);
        };
        break;
      }
      case SolverTag::L0_OMP: {
        L0Design base = design_l0(cfg.plant, spec.Q, cfg.N, spec.beta);
        if (spec.W) {
          base = with_weight(base, *spec.W);
          if (validate_weights) base.weight = ConstraintWeight::validated(base.horizon, base.W);
        }
        auto d = std::make_shared<const L0Design>(std::move(base));
        b.l0 = d;
        b.dare = d->dare;
        b.horizon = std::shared_ptr<const HorizonMatrices>(d, &d->horizon);
        b.designer = [d, settings](const VectorXd& x) {
          return omp_l0(d->horizon, d->weight, x, settings);
        };
        break;
      }
      case SolverTag::RIDGE:
      case SolverTag::LS: {
        b.dare = solve_dare(cfg.plant, spec.Q, 0.0);
        auto hm = std::make_shared<const HorizonMatrices>(
            build_horizon_matrices(cfg.plant, cfg.N, spec.Q, b.dare.P));
        b.horizon = hm;
        if (spec.family == SolverTag::RIDGE) {
          b.designer = [hm, r = spec.r, settings](const VectorXd& x) {
            return ridge_packet(*hm, r, x, settings);
          };
        } else {
          b.designer = [hm, settings](const VectorXd& x) {
            return least_squares_packet(*hm, x, settings);
          };
        }
        break;
      }
    }
    out.push_back(std::move(b));
  }
  return out;
}

Experiment make_experiment(const ExperimentConfig& cfg, const std::vector<BuiltController>& ctrls) {
  Experiment e{cfg.plant, cfg.N, {}, cfg.channel, cfg.steps};
  for (const BuiltController& c : ctrls) e.designers.push_back({c.spec.label, c.designer});
  return e;
}

json design_report(const ExperimentConfig& cfg, const std::vector<BuiltController>& ctrls) {
  json report;
  report["plant"] = {{"n", cfg.plant.n()},
                     {"A", to_json(cfg.plant.A())},
                     {"B", to_json(cfg.plant.B())},
                     {"reachable", check_reachability(cfg.plant)},
                     {"open_loop_spectral_radius", linalg::spectral_radius(cfg.plant.A())}};
  report["horizon"] = cfg.N;
  report["controllers"] = json::array();
  for (const BuiltController& c : ctrls) {
    json j = {{"label", c.spec.label}, {"family", family_name(c.spec.family)}};
    j["Q"] = to_json(c.spec.Q);
    j["riccati"] = dare_json(c.dare);
    const MatrixXd Acl = cfg.plant.A() + cfg.plant.B() * c.dare.K;
    json checks = {{"riccati_residual", c.dare.residual},
                   {"closed_loop_spectral_radius", linalg::spectral_radius(Acl)},
                   {"gram_condition", linalg::lambda_max(c.horizon->gram()) /
                                          linalg::lambda_min(c.horizon->gram())}};
    if (c.l1l2) {
      const L1L2Design& d = *c.l1l2;
      j["mu"] = d.mu;
      j["epsilon"] = d.epsilon;
      j["r"] = d.r;
      j["a1"] = d.a1;
      j["a2"] = d.a2;
      j["rho"] = d.rho;
      j["R"] = d.R;
      j["Wstar"] = to_json(d.Wstar);
      checks["rho_in_unit_interval"] = d.rho >= 0.0 && d.rho < 1.0;
    } else if (c.l0) {
      const L0Design& d = *c.l0;
      j["beta"] = d.beta;
      j["rho"] = d.rho;
      j["c1"] = d.c1;
      j["c"] = d.c;
      j["Eps"] = to_json(d.Eps);
      j["W"] = to_json(d.W);
      j["Wstar"] = to_json(d.Wstar);
      const MatrixXd& P = d.dare.P;
      const double wstar_gap = (d.Wstar - (P - d.Q)).norm();
      const double wstar_bound = 1e-8 * (1.0 + P.norm());
      checks["wstar_vs_P_minus_Q"] = wstar_gap;
      checks["wstar_vs_P_minus_Q_bound"] = wstar_bound;
      checks["W_minus_Wstar_lambda_min"] = linalg::lambda_min(d.W - d.Wstar);
      checks["W_minus_P_minus_Q_minus_Eps"] = (d.W - (P - d.Q) - d.Eps).norm();
      checks["Eps_lambda_min"] = linalg::lambda_min(d.Eps);
      checks["rho_in_unit_interval"] = d.rho >= 0.0 && d.rho < 1.0;
      checks["W_overridden"] = c.spec.W.has_value();
      if (!(wstar_gap <= wstar_bound)) {
        throw DesignError(c.spec.label + ": W* = P - Q identity violated (" +
                          std::to_string(wstar_gap) + " > " + std::to_string(wstar_bound) + ")");
      }
    } else if (c.spec.family == SolverTag::RIDGE) {
      j["r"] = c.spec.r;
    }
    j["checks"] = std::move(checks);
    report["controllers"].push_back(std::move(j));
  }
  return report;
}

json simulate_report(const ExperimentConfig& cfg, const std::vector<BuiltController>& ctrls) {
  const Experiment e = make_experiment(cfg, ctrls);
  const RunInputs in = make_run_inputs(e, run_seed(cfg.seed, 0));
  json report = {{"seed", cfg.seed}, {"run_seed", in.seed}, {"steps", cfg.steps},
                 {"x0", to_json(in.x0)}};
  std::vector<int> dropped(in.trace.dropped.begin(), in.trace.dropped.begin() + cfg.steps);
  report["dropped"] = dropped;
  report["controllers"] = json::array();
  for (const NamedDesigner& d : e.designers) {
    SimTrace t;
    try {
      t = run_closed_loop(e.plant, d.designer, in.trace, in.x0, e.T);
    } catch (const ProtocolError& err) {
      throw RunError(0, in.seed, d.label, err.what(), true);
    } catch (const Error& err) {
      throw RunError(0, in.seed, d.label, err.what(), false);
    }
    const TraceCheck check = check_sim_trace(e.plant, t);
    json states = json::array(), packets = json::array();
    for (const VectorXd& x : t.states) states.push_back(to_json(x));
    for (const VectorXd& u : t.packets) packets.push_back(to_json(u));
    report["controllers"].push_back({{"label", d.label},
                                     {"states", std::move(states)},
                                     {"inputs", t.inputs},
                                     {"ages", t.ages},
                                     {"sparsity", t.sparsity},
                                     {"norms", t.norms},
                                     {"packets", std::move(packets)},
                                     {"protocol_consistent", check.protocol_consistent},
                                     {"max_propagation_error", check.max_propagation_error}});
  }
  return report;
}

namespace {

// Pass count and worst slack of one audited inequality across draws.
struct Tally {
  int checked = 0;
  int passed = 0;
  double worst_slack = std::numeric_limits<double>::infinity();
  double worst_relative_slack = std::numeric_limits<double>::infinity();

  void add(const InequalityAudit& a) {
    ++checked;
    if (a.pass) ++passed;
    const double s = std::isfinite(a.slack()) ? a.slack() : -std::numeric_limits<double>::infinity();
    worst_slack = std::min(worst_slack, s);
    worst_relative_slack = std::min(worst_relative_slack, s / std::max(std::abs(a.rhs), 1e-300));
  }
  void fail() {
    ++checked;
    worst_slack = -std::numeric_limits<double>::infinity();
    worst_relative_slack = -std::numeric_limits<double>::infinity();
  }
  json to_json() const {
    json j = {{"checked", checked}, {"passed", passed}};
    // JSON has no infinities; an empty tally reports null.
    j["worst_slack"] = std::isfinite(worst_slack) ? json(worst_slack) : json(nullptr);
    j["worst_relative_slack"] =
        std::isfinite(worst_relative_slack) ? json(worst_relative_slack) : json(nullptr);
    return j;
  }
  bool ok() const { return passed == checked; }
};

}  // namespace

AuditOutcome audit_report(const ExperimentConfig& cfg, const std::vector<BuiltController>& ctrls) {
  AuditOutcome out;
  out.report = {{"draws", cfg.draws}, {"seed", cfg.seed}, {"controllers", json::array()}};
  for (std::size_t idx = 0; idx < ctrls.size(); ++idx) {
    const BuiltController& c = ctrls[idx];
    std::mt19937_64 rng(derive_seed(cfg.seed, 1000 + idx));
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> decade(-2.0, 1.0);
    std::uniform_int_distribution<int> burst(1, cfg.N);
    const auto draw_state = [&] {
      VectorXd x(cfg.plant.n());
      for (Eigen::Index i = 0; i < x.size(); ++i) x(i) = normal(rng);
      return VectorXd(x * std::pow(10.0, decade(rng)));
    };

    std::vector<std::pair<std::string, Tally>> tallies;
    if (c.l1l2) {
      Tally lower, upper, contraction;
      for (int k = 0; k < cfg.draws; ++k) {
        const VectorXd x = draw_state();
        const SandwichAudit s = audit_value_bounds(*c.l1l2, x, cfg.solver);
        lower.add(s.lower);
        upper.add(s.upper);
        contraction.add(audit_contraction_l1l2(*c.l1l2, x, burst(rng), cfg.solver));
      }
      tallies = {{"value_lower_bound", lower}, {"value_upper_bound", upper},
                 {"value_contraction", contraction}};
    } else if (c.l0) {
      Tally residual, bound, envelope, decrease;
      for (int k = 0; k < cfg.draws; ++k) {
        const VectorXd x = draw_state();
        const int i = burst(rng);
        residual.add(audit_residual_l0(*c.l0, x, cfg.solver));
        try {
          const L0ContractionAudit a = audit_contraction_l0(*c.l0, x, i, cfg.solver);
          bound.add(a.bound);
          envelope.add(a.envelope);
          decrease.add(a.decrease);
        } catch (const DesignError&) {
          // No feasible packet: every contraction claim fails for this draw.
          bound.fail();
          envelope.fail();
          decrease.fail();
        }
      }
      tallies = {{"residual_bound", residual}, {"contraction_bound", bound},
                 {"contraction_envelope", envelope}, {"strict_decrease", decrease}};
    }

    json audits = json::object();
    bool ok = true;
    for (const auto& [name, t] : tallies) {
      audits[name] = t.to_json();
      ok = ok && t.ok();
    }
    out.pass = out.pass && ok;
    out.report["controllers"].push_back({{"label", c.spec.label},
                                         {"family", family_name(c.spec.family)},
                                         {"audits", std::move(audits)},
                                         {"pass", ok}});
  }
  out.report["pass"] = out.pass;
  return out;
}

std::string format_double(double v) {
  std::ostringstream s;
  s.imbue(std::locale::classic());
  s << std::setprecision(17) << v;
  return s.str();
}

void write_series_csv(const std::filesystem::path& path, const std::vector<std::string>& labels,
                      const std::vector<std::vector<double>>& series) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + path.string());
  f << "k";
  for (const std::string& l : labels) f << ',' << l;
  f << '\n';
  const std::size_t T = series.empty() ? 0 : series.front().size();
  for (std::size_t k = 0; k < T; ++k) {
    f << k;
    for (const auto& s : series) f << ',' << format_double(s[k]);
    f << '\n';
  }
  if (!f) throw std::runtime_error("write failed: " + path.string());
}

CsvTable read_csv(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot read " + path.string());
  CsvTable t;
  std::string line;
  const auto split = [](const std::string& l) {
    std::vector<std::string> cells;
    std::stringstream ss(l);
    for (std::string cell; std::getline(ss, cell, ',');) cells.push_back(cell);
    return cells;
  };
  if (std::getline(f, line)) t.header = split(line);
  while (std::getline(f, line)) {
    std::vector<double> row;
    for (const std::string& cell : split(line)) row.push_back(std::stod(cell));
    t.rows.push_back(std::move(row));
  }
  return t;
}

namespace {

void write_json(const std::filesystem::path& path, const json& j) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + path.string());
  f << j.dump(2) << '\n';
}

struct Overrides {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<int> runs;
  std::optional<int> threads;
  std::optional<int> draws;
  std::optional<std::string> out;
};

ExperimentConfig resolve(const Overrides& o) {
  ExperimentConfig cfg = load_config(o.config);
  if (o.seed) cfg.seed = *o.seed;
  if (o.runs) cfg.runs = *o.runs;
  if (o.threads) cfg.threads = *o.threads;
  if (o.draws) cfg.draws = *o.draws;
  if (o.out) cfg.out = *o.out;
  return cfg;
}

int cmd_design(const ExperimentConfig& cfg, std::ostream& out) {
  const auto ctrls = build_controllers(cfg, true);
  const json report = design_report(cfg, ctrls);
  std::filesystem::create_directories(cfg.out);
  write_json(std::filesystem::path(cfg.out) / "design.json", report);
  out << report.dump(2) << '\n';
  return kOk;
}

int cmd_simulate(const ExperimentConfig& cfg, std::ostream& out) {
  const auto ctrls = build_controllers(cfg, true);
  const json report = simulate_report(cfg, ctrls);
  std::filesystem::create_directories(cfg.out);
  const auto path = std::filesystem::path(cfg.out) / "simulate.json";
  write_json(path, report);
  out << "wrote " << path.string() << '\n';
  return kOk;
}

int cmd_montecarlo(const ExperimentConfig& cfg, std::ostream& out) {
  const auto ctrls = build_controllers(cfg, true);
  const Experiment e = make_experiment(cfg, ctrls);
  MonteCarloOptions opts;
  opts.threads = cfg.threads;
  const auto t0 = std::chrono::steady_clock::now();
  const MonteCarloResult r = monte_carlo(e, cfg.runs, cfg.seed, opts);
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  const std::filesystem::path dir = cfg.out;
  std::filesystem::create_directories(dir);
  write_series_csv(dir / "avg_norm.csv", r.labels, r.avg_norm);
  write_series_csv(dir / "avg_sparsity.csv", r.labels, r.avg_sparsity);
  json channel = {{"model", cfg.channel.kind == ChannelModel::Kind::BoundedUniform
                                ? "bounded_uniform"
                                : "bernoulli"}};
  if (cfg.channel.kind == ChannelModel::Kind::BoundedUniform) {
    channel["gap"] = cfg.channel.gap;
  } else {
    channel["p"] = cfg.channel.p_drop;
  }
  const json meta = {{"seed", cfg.seed},
                     {"runs", cfg.runs},
                     {"steps", cfg.steps},
                     {"horizon", cfg.N},
                     {"threads", cfg.threads},
                     {"labels", r.labels},
                     {"channel", channel},
                     {"versions",
                      {{"sppc", SPPC_VERSION},
                       {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." +
                                     std::to_string(EIGEN_MAJOR_VERSION) + "." +
                                     std::to_string(EIGEN_MINOR_VERSION)},
                       {"compiler", __VERSION__}}},
                     {"wall_time_s", wall}};
  write_json(dir / "meta.json", meta);
  out << "wrote " << (dir / "avg_norm.csv").string() << ", " << (dir / "avg_sparsity.csv").string()
      << " (" << cfg.runs << " runs, " << cfg.steps << " steps, " << wall << " s)\n";
  return kOk;
}

int cmd_audit(const ExperimentConfig& cfg, std::ostream& out, std::ostream& err) {
  const auto ctrls = build_controllers(cfg, false);
  const AuditOutcome a = audit_report(cfg, ctrls);
  std::filesystem::create_directories(cfg.out);
  write_json(std::filesystem::path(cfg.out) / "audit.json", a.report);
  out << a.report.dump(2) << '\n';
  if (!a.pass) {
    err << "audit failed: see failing entries in audit.json\n";
    return kAuditFailure;
  }
  return kOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Sparse packetized predictive control: design, audit and simulate"};
  app.require_subcommand(1);
  Overrides o;
  const auto add_common = [&o](CLI::App* sub) {
    sub->add_option("--config", o.config, "experiment config (JSON)")->required();
    sub->add_option("--seed", o.seed, "master seed");
    sub->add_option("--out", o.out, "output directory");
    sub->add_option("--threads", o.threads, "worker threads")->check(CLI::Range(1, 1024));
    sub->add_option("--runs", o.runs, "Monte Carlo runs")->check(CLI::Range(1, 10000000));
  };
  CLI::App* design = app.add_subcommand("design", "derive and check controller constants");
  CLI::App* simulate = app.add_subcommand("simulate", "one closed-loop trace per controller");
  CLI::App* montecarlo = app.add_subcommand("montecarlo", "averaged norm and sparsity over runs");
  CLI::App* audit = app.add_subcommand("audit", "check the stability inequalities on random states");
  for (CLI::App* sub : {design, simulate, montecarlo, audit}) add_common(sub);
  audit->add_option("--draws", o.draws, "random states per controller")->check(CLI::Range(0, 100000000));

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << e.what() << '\n';
    return kConfigError;
  }

  try {
    const ExperimentConfig cfg = resolve(o);
    if (*design) return cmd_design(cfg, out);
    if (*simulate) return cmd_simulate(cfg, out);
    if (*montecarlo) return cmd_montecarlo(cfg, out);
    return cmd_audit(cfg, out, err);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const ParameterError& e) {
    err << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const RunError& e) {
    err << (e.protocol() ? "protocol error: " : "design failure: ") << e.what()
        << " (replay with --seed " << e.seed() << " --runs 1)\n";
    return e.protocol() ? kProtocolError : kDesignError;
  } catch (const Error& e) {
    err << "design failure: " << e.what() << '\n';
    return kDesignError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kUnexpected;
  }
}

}  // namespace sppc::cli
