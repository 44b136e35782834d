#pragma once

#include <filesystem>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "config.hpp"
#include "sppc/netsim.hpp"
#include "sppc/stability.hpp"

namespace sppc::cli {

enum ExitCode : int {
  kOk = 0,
  kUnexpected = 1,
  kConfigError = 2,
  kDesignError = 3,
  kAuditFailure = 4,
  kProtocolError = 5,
};

/// One configured controller with its design and a thread-safe designer.
struct BuiltController {
  ControllerSpec spec;
  std::shared_ptr<const L1L2Design> l1l2;  // L1L2
  std::shared_ptr<const L0Design> l0;      // L0_OMP
  std::shared_ptr<const HorizonMatrices> horizon;  // every family
  DareSolution dare;                               // P, K behind `horizon`
  Designer designer;
};

/// LS and RIDGE predict with P from the r = 0 Riccati equation. With
/// validate_weights = false a W override below W* is accepted as is (for
/// audits that must report the violation rather than refuse to run).
std::vector<BuiltController> build_controllers(const ExperimentConfig& cfg, bool validate_weights);

Experiment make_experiment(const ExperimentConfig& cfg, const std::vector<BuiltController>& ctrls);

nlohmann::json design_report(const ExperimentConfig& cfg, const std::vector<BuiltController>& ctrls);

nlohmann::json simulate_report(const ExperimentConfig& cfg,
                               const std::vector<BuiltController>& ctrls);

struct AuditOutcome {
  nlohmann::json report;
  bool pass = true;
};

AuditOutcome audit_report(const ExperimentConfig& cfg, const std::vector<BuiltController>& ctrls);

/// %.17g; the only float formatting used for CSV.
std::string format_double(double v);

/// Header `k,<label...>` and one row per step k = 0..T-1.
void write_series_csv(const std::filesystem::path& path, const std::vector<std::string>& labels,
                      const std::vector<std::vector<double>>& series);

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
};

CsvTable read_csv(const std::filesystem::path& path);

/// Parses argv-style arguments (without the program name), runs the
/// subcommand and returns an ExitCode. Diagnostics go to `err`.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace sppc::cli
