#include "config.hpp"

#include <cmath>
#include <fstream>
#include <initializer_list>
#include <limits>
#include <set>

namespace sppc::cli {

using Eigen::MatrixXd;
using Eigen::VectorXd;
using nlohmann::json;

namespace {

void only_keys(const json& obj, const std::string& where, std::initializer_list<const char*> keys) {
  if (!obj.is_object()) throw ConfigError(where + ": expected an object");
  const std::set<std::string> allowed(keys.begin(), keys.end());
  for (const auto& item : obj.items()) {
    if (!allowed.count(item.key())) throw ConfigError(where + ": unknown key '" + item.key() + "'");
  }
}

const json& need(const json& obj, const std::string& key, const std::string& where) {
  if (!obj.contains(key)) throw ConfigError(where + ": missing '" + key + "'");
  return obj.at(key);
}

double number(const json& v, const std::string& what) {
  if (!v.is_number()) throw ConfigError(what + ": expected a number");
  const double d = v.get<double>();
  if (!std::isfinite(d)) throw ConfigError(what + ": must be finite");
  return d;
}

double positive(const json& v, const std::string& what) {
  const double d = number(v, what);
  if (!(d > 0.0)) throw ConfigError(what + ": must be > 0");
  return d;
}

std::int64_t integer(const json& v, const std::string& what, std::int64_t lo,
                     std::int64_t hi = std::numeric_limits<std::int64_t>::max()) {
  if (!v.is_number_integer()) throw ConfigError(what + ": expected an integer");
  const auto i = v.get<std::int64_t>();
  if (i < lo || i > hi) {
    throw ConfigError(what + ": must lie in [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
  }
  return i;
}

MatrixXd matrix(const json& v, const std::string& what) {
  if (!v.is_array() || v.empty()) throw ConfigError(what + ": expected a non-empty array of rows");
  const std::size_t rows = v.size();
  if (!v[0].is_array() || v[0].empty()) throw ConfigError(what + ": rows must be non-empty arrays");
  const std::size_t cols = v[0].size();
  MatrixXd m(rows, cols);
  for (std::size_t i = 0; i < rows; ++i) {
    if (!v[i].is_array() || v[i].size() != cols) throw ConfigError(what + ": ragged rows");
    for (std::size_t j = 0; j < cols; ++j) {
      m(i, j) = number(v[i][j], what + "[" + std::to_string(i) + "][" + std::to_string(j) + "]");
    }
  }
  return m;
}

VectorXd vector(const json& v, const std::string& what) {
  if (!v.is_array() || v.empty()) throw ConfigError(what + ": expected a non-empty array");
  VectorXd out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    // Accept a column written as [[b1], [b2], ...] too.
    const json& e = v[i].is_array() && v[i].size() == 1 ? v[i][0] : v[i];
    out(i) = number(e, what + "[" + std::to_string(i) + "]");
  }
  return out;
}

MatrixXd square(const json& v, Eigen::Index n, const std::string& what) {
  MatrixXd m = matrix(v, what);
  if (m.rows() != n || m.cols() != n) {
    throw ConfigError(what + ": expected " + std::to_string(n) + "x" + std::to_string(n));
  }
  return m;
}

PlantModel parse_plant(const json& v, const std::filesystem::path& base_dir) {
  if (v.is_string()) {
    if (v.get<std::string>() == "benchmark") return benchmark_plant();
    throw ConfigError("plant: the only named plant is \"benchmark\"");
  }
  if (v.is_object() && v.contains("file")) {
    only_keys(v, "plant", {"file"});
    if (!v["file"].is_string()) throw ConfigError("plant.file: expected a path");
    std::filesystem::path p = v["file"].get<std::string>();
    if (p.is_relative()) p = base_dir / p;
    std::ifstream in(p);
    if (!in) throw ConfigError("plant.file: cannot open " + p.string());
    json inner;
    try {
      inner = json::parse(in);
    } catch (const json::exception& e) {
      throw ConfigError("plant.file: " + std::string(e.what()));
    }
    return parse_plant(inner, p.parent_path());
  }
  only_keys(v, "plant", {"A", "B"});
  const MatrixXd A = matrix(need(v, "A", "plant"), "plant.A");
  const VectorXd B = vector(need(v, "B", "plant"), "plant.B");
  if (A.rows() != A.cols()) throw ConfigError("plant.A: must be square");
  if (B.size() != A.rows()) throw ConfigError("plant.B: length must match plant.A");
  return PlantModel(A, B);
}

SolverTag parse_family(const json& v, const std::string& where) {
  if (!v.is_string()) throw ConfigError(where + ".family: expected a string");
  const std::string s = v.get<std::string>();
  if (s == "L1L2") return SolverTag::L1L2;
  if (s == "L0_OMP") return SolverTag::L0_OMP;
  if (s == "RIDGE") return SolverTag::RIDGE;
  if (s == "LS") return SolverTag::LS;
  throw ConfigError(where + ".family: unknown family '" + s + "' (L1L2, L0_OMP, RIDGE, LS)");
}

ControllerSpec parse_controller(const json& v, std::size_t index, Eigen::Index n,
                                const MatrixXd& Q) {
  const std::string where = "controllers[" + std::to_string(index) + "]";
  only_keys(v, where, {"label", "family", "mu", "epsilon", "beta", "r", "Q", "W"});
  ControllerSpec c;
  const json& label = need(v, "label", where);
  if (!label.is_string() || label.get<std::string>().empty()) {
    throw ConfigError(where + ".label: expected a non-empty string");
  }
  c.label = label.get<std::string>();
  if (c.label.find_first_of(",\"\n\r") != std::string::npos) {
    throw ConfigError(where + ".label: must not contain commas, quotes or newlines");
  }
  c.family = parse_family(need(v, "family", where), where);
  c.Q = v.contains("Q") ? square(v["Q"], n, where + ".Q") : Q;

  const auto forbid = [&](std::initializer_list<const char*> keys) {
    for (const char* k : keys) {
      if (v.contains(k)) {
        throw ConfigError(where + ": '" + k + "' does not apply to family " +
                          std::string(to_string(c.family)));
      }
    }
  };
  switch (c.family) {
    case SolverTag::L1L2:
      c.mu = positive(need(v, "mu", where), where + ".mu");
      c.epsilon = positive(need(v, "epsilon", where), where + ".epsilon");
      forbid({"beta", "r", "W"});
      break;
    case SolverTag::L0_OMP: {
      c.beta = number(need(v, "beta", where), where + ".beta");
      if (!(c.beta > 0.0 && c.beta < 1.0)) throw ConfigError(where + ".beta: must lie in (0,1)");
      if (v.contains("W")) c.W = square(v["W"], n, where + ".W");
      forbid({"mu", "epsilon", "r"});
      break;
    }
    case SolverTag::RIDGE:
      c.r = positive(need(v, "r", where), where + ".r");
      forbid({"mu", "epsilon", "beta", "W"});
      break;
    case SolverTag::LS:
      forbid({"mu", "epsilon", "beta", "r", "W"});
      break;
  }
  return c;
}

}  // namespace

ExperimentConfig parse_config(const json& doc, const std::filesystem::path& base_dir) {
  only_keys(doc, "config", {"plant", "horizon", "Q", "controllers", "channel", "run", "audit", "solver"});
  ExperimentConfig cfg;
  if (doc.contains("plant")) cfg.plant = parse_plant(doc["plant"], base_dir);
  const Eigen::Index n = cfg.plant.n();
  cfg.N = static_cast<int>(integer(need(doc, "horizon", "config"), "horizon", 1, 64));
  cfg.Q = doc.contains("Q") ? square(doc["Q"], n, "Q") : MatrixXd::Identity(n, n);

  const json& ctrls = need(doc, "controllers", "config");
  if (!ctrls.is_array() || ctrls.empty()) throw ConfigError("controllers: expected a non-empty array");
  std::set<std::string> labels;
  for (std::size_t i = 0; i < ctrls.size(); ++i) {
    cfg.controllers.push_back(parse_controller(ctrls[i], i, n, cfg.Q));
    if (!labels.insert(cfg.controllers.back().label).second) {
      throw ConfigError("controllers: duplicate label '" + cfg.controllers.back().label + "'");
    }
  }

  if (doc.contains("channel")) {
    const json& ch = doc["channel"];
    only_keys(ch, "channel", {"model", "gap", "p"});
    const json& model = need(ch, "model", "channel");
    if (model == "bounded_uniform") {
      cfg.channel.kind = ChannelModel::Kind::BoundedUniform;
      if (ch.contains("p")) throw ConfigError("channel.p: only for the bernoulli model");
      if (ch.contains("gap")) cfg.channel.gap = static_cast<int>(integer(ch["gap"], "channel.gap", 1, 1000000));
      if (cfg.N < 2) throw ConfigError("channel: bounded_uniform dropouts need horizon >= 2");
    } else if (model == "bernoulli") {
      cfg.channel.kind = ChannelModel::Kind::Bernoulli;
      if (ch.contains("gap")) throw ConfigError("channel.gap: only for the bounded_uniform model");
      cfg.channel.p_drop = number(need(ch, "p", "channel"), "channel.p");
      if (!(cfg.channel.p_drop >= 0.0 && cfg.channel.p_drop < 1.0)) {
        throw ConfigError("channel.p: must lie in [0,1)");
      }
    } else {
      throw ConfigError("channel.model: expected \"bounded_uniform\" or \"bernoulli\"");
    }
  }

  if (doc.contains("run")) {
    const json& run = doc["run"];
    only_keys(run, "run", {"runs", "steps", "seed", "threads", "out"});
    if (run.contains("runs")) cfg.runs = static_cast<int>(integer(run["runs"], "run.runs", 1, 10000000));
    if (run.contains("steps")) cfg.steps = static_cast<int>(integer(run["steps"], "run.steps", 1, 10000000));
    if (run.contains("seed")) {
      const json& seed = run["seed"];
      if (!seed.is_number_integer() || (!seed.is_number_unsigned() && seed.get<std::int64_t>() < 0)) {
        throw ConfigError("run.seed: expected a non-negative integer");
      }
      cfg.seed = seed.get<std::uint64_t>();
    }
    if (run.contains("threads")) cfg.threads = static_cast<int>(integer(run["threads"], "run.threads", 1, 1024));
    if (run.contains("out")) {
      if (!run["out"].is_string()) throw ConfigError("run.out: expected a path");
      cfg.out = run["out"].get<std::string>();
    }
  }

  if (doc.contains("audit")) {
    only_keys(doc["audit"], "audit", {"draws"});
    if (doc["audit"].contains("draws")) {
      cfg.draws = static_cast<int>(integer(doc["audit"]["draws"], "audit.draws", 0, 100000000));
    }
  }

  if (doc.contains("solver")) {
    const json& s = doc["solver"];
    only_keys(s, "solver", {"zero_tol", "fista_tol", "fista_max_iter", "kkt_tol"});
    if (s.contains("zero_tol")) cfg.solver.zero_tol = positive(s["zero_tol"], "solver.zero_tol");
    if (s.contains("fista_tol")) cfg.solver.fista_tol = positive(s["fista_tol"], "solver.fista_tol");
    if (s.contains("kkt_tol")) cfg.solver.kkt_tol = positive(s["kkt_tol"], "solver.kkt_tol");
    if (s.contains("fista_max_iter")) {
      cfg.solver.fista_max_iter = static_cast<int>(integer(s["fista_max_iter"], "solver.fista_max_iter", 1, 100000000));
    }
  }
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  json doc;
  try {
    doc = json::parse(in, nullptr, true, /*ignore_comments=*/true);
  } catch (const json::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  return parse_config(doc, path.parent_path());
}

}  // namespace sppc::cli
