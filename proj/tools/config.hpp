#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "sppc/errors.hpp"
#include "sppc/netsim.hpp"
#include "sppc/plant.hpp"
#include "sppc/solvers.hpp"

namespace sppc::cli {

/// The config file is malformed or names inconsistent parameters.
class ConfigError : public Error {
 public:
  using Error::Error;
};

struct ControllerSpec {
  std::string label;
  SolverTag family = SolverTag::LS;
  double mu = 0.0;       // L1L2
  double epsilon = 0.0;  // L1L2
  double beta = 0.0;     // L0_OMP
  double r = 0.0;        // RIDGE
  Eigen::MatrixXd Q;     // falls back to the experiment-wide Q
  std::optional<Eigen::MatrixXd> W;  // L0_OMP override of the designed weight
};

struct ExperimentConfig {
  PlantModel plant = benchmark_plant();
  int N = 10;
  Eigen::MatrixXd Q;
  std::vector<ControllerSpec> controllers;
  ChannelModel channel;
  int runs = 1;
  int steps = 100;
  std::uint64_t seed = 0;
  int threads = 1;
  std::string out = "out";
  int draws = 100;
  SolverSettings solver;
};

/// Validates every field before returning; throws ConfigError naming the
/// offending key. Relative plant file paths resolve against base_dir.
ExperimentConfig parse_config(const nlohmann::json& doc, const std::filesystem::path& base_dir);
ExperimentConfig load_config(const std::filesystem::path& path);

}  // namespace sppc::cli
