#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>
#include <json.hpp>

#include "config.hpp"
#include "pipeline.hpp"

namespace sppc::cli {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    dir_ = fs::temp_directory_path() / (std::string("sppc_cli_") + info->name());
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  fs::path write_config(const json& cfg, const std::string& name = "config.json") {
    const fs::path p = dir_ / name;
    std::ofstream(p) << cfg.dump(2);
    return p;
  }

  int run(std::vector<std::string> args) {
    out_.str("");
    err_.str("");
    return run_cli(args, out_, err_);
  }

  static std::string slurp(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    std::ostringstream s;
    s << f.rdbuf();
    return s.str();
  }

  static json small_config() {
    return {{"plant", "benchmark"},
            {"horizon", 10},
            {"controllers",
             {{{"label", "L1L2(i)"}, {"family", "L1L2"}, {"mu", 10.7167}, {"epsilon", 1.0}},
              {{"label", "OMP"}, {"family", "L0_OMP"}, {"beta", 2.0 / 3.0}},
              {{"label", "RIDGE"}, {"family", "RIDGE"}, {"r", 4.1042}},
              {{"label", "LS"}, {"family", "LS"}}}},
            {"channel", {{"model", "bounded_uniform"}, {"gap", 1}}},
            {"run", {{"runs", 6}, {"steps", 30}, {"seed", 5}}}};
  }

  fs::path dir_;
  std::ostringstream out_, err_;
};

TEST_F(CliTest, MissingParameterIsAConfigError) {
  json cfg = small_config();
  cfg["controllers"][0].erase("mu");
  const fs::path p = write_config(cfg);
  EXPECT_EQ(run({"design", "--config", p.string(), "--out", (dir_ / "o").string()}), kConfigError);
  EXPECT_NE(err_.str().find("mu"), std::string::npos);
  EXPECT_FALSE(fs::exists(dir_ / "o"));
}

TEST_F(CliTest, RejectsMalformedInput) {
  std::ofstream(dir_ / "broken.json") << "{ \"horizon\": 10, ";
  EXPECT_EQ(run({"design", "--config", (dir_ / "broken.json").string()}), kConfigError);
  EXPECT_EQ(run({"design", "--config", (dir_ / "absent.json").string()}), kConfigError);
  EXPECT_EQ(run({"design"}), kConfigError);
  EXPECT_EQ(run({"launch", "--config", "x"}), kConfigError);
  EXPECT_EQ(run({}), kConfigError);

  json cfg = small_config();
  cfg["controllers"][1]["mu"] = 1.0;
  EXPECT_EQ(run({"design", "--config", write_config(cfg).string()}), kConfigError);
  cfg = small_config();
  cfg["controllers"][1]["beta"] = 1.5;
  EXPECT_EQ(run({"design", "--config", write_config(cfg).string()}), kConfigError);
  cfg = small_config();
  cfg["plant"] = {{"A", {{1.0, 0.0}, {0.0, 1.0}}}, {"B", {1.0, 1.0, 1.0}}};
  EXPECT_EQ(run({"design", "--config", write_config(cfg).string()}), kConfigError);
  cfg = small_config();
  cfg["controllers"][3]["label"] = "OMP";
  EXPECT_EQ(run({"design", "--config", write_config(cfg).string()}), kConfigError);
  cfg = small_config();
  cfg["run"]["stpes"] = 10;
  EXPECT_EQ(run({"design", "--config", write_config(cfg).string()}), kConfigError);
  cfg = small_config();
  cfg["Q"] = {{1.0, 0.0, 0.0, 0.0}, {0.0, -1.0, 0.0, 0.0}, {0.0, 0.0, 1.0, 0.0}, {0.0, 0.0, 0.0, 1.0}};
  EXPECT_EQ(run({"design", "--config", write_config(cfg).string()}), kConfigError);
}

TEST_F(CliTest, PlantFromFile) {
  std::ofstream(dir_ / "plant.json") << R"({"A": [[2.0]], "B": [1.0]})";
  json cfg = {{"plant", {{"file", "plant.json"}}},
              {"horizon", 1},
              {"controllers", {{{"label", "OMP"}, {"family", "L0_OMP"}, {"beta", 0.5}}}}};
  const ExperimentConfig parsed = load_config(write_config(cfg));
  EXPECT_EQ(parsed.plant.A()(0, 0), 2.0);
  EXPECT_EQ(parsed.N, 1);
  EXPECT_EQ(parsed.Q, Eigen::MatrixXd::Identity(1, 1));
}

TEST_F(CliTest, DeadbeatDesignReport) {
  json cfg = {{"plant", {{"A", {{2.0}}}, {"B", {1.0}}}},
              {"horizon", 1},
              {"controllers", {{{"label", "OMP"}, {"family", "L0_OMP"}, {"beta", 0.5}}}}};
  ASSERT_EQ(run({"design", "--config", write_config(cfg).string(), "--out", (dir_ / "o").string()}),
            kOk)
      << err_.str();
  const json report = json::parse(slurp(dir_ / "o" / "design.json"));
  const json& c = report["controllers"][0];
  EXPECT_NEAR(c["riccati"]["P"][0][0].get<double>(), 1.0, 1e-12);
  EXPECT_NEAR(c["riccati"]["K"][0].get<double>(), -2.0, 1e-12);
  EXPECT_NEAR(c["rho"].get<double>(), 0.0, 1e-12);
  EXPECT_NEAR(c["W"][0][0].get<double>(), 0.5, 1e-12);
  EXPECT_EQ(json::parse(out_.str()), report);
}

TEST_F(CliTest, BenchmarkDesignReport) {
  const fs::path p = write_config(small_config());
  ASSERT_EQ(run({"design", "--config", p.string(), "--out", (dir_ / "o").string()}), kOk) << err_.str();
  const json report = json::parse(slurp(dir_ / "o" / "design.json"));
  ASSERT_EQ(report["controllers"].size(), 4u);
  const json& omp = report["controllers"][1];
  EXPECT_TRUE(omp["checks"]["rho_in_unit_interval"].get<bool>());
  EXPECT_LE(omp["checks"]["wstar_vs_P_minus_Q"].get<double>(),
            omp["checks"]["wstar_vs_P_minus_Q_bound"].get<double>());
  EXPECT_GT(omp["checks"]["W_minus_Wstar_lambda_min"].get<double>(), 0.0);
  EXPECT_LT(omp["checks"]["W_minus_P_minus_Q_minus_Eps"].get<double>(), 1e-12);
  const json& l1 = report["controllers"][0];
  EXPECT_GT(l1["R"].get<double>(), 0.0);
  EXPECT_LT(l1["rho"].get<double>(), 1.0);
}

json corrupted_config() {
  json cfg = {{"plant", {{"A", {{2.0}}}, {"B", {1.0}}}},
              {"horizon", 1},
              {"controllers", {{{"label", "OMP"}, {"family", "L0_OMP"}, {"beta", 0.5}}}},
              {"audit", {{"draws", 20}}}};
  // W* = 0 for this plant, so a negative W sits below it.
  cfg["controllers"][0]["W"] = {{-0.25}};
  return cfg;
}

TEST_F(CliTest, WeightBelowWstarFailsDesign) {
  EXPECT_EQ(run({"design", "--config", write_config(corrupted_config()).string(), "--out",
                 (dir_ / "o").string()}),
            kDesignError);
  EXPECT_NE(err_.str().find("W*"), std::string::npos);
}

TEST_F(CliTest, WeightBelowWstarFailsAudit) {
  ASSERT_EQ(run({"audit", "--config", write_config(corrupted_config()).string(), "--out",
                 (dir_ / "o").string()}),
            kAuditFailure);
  const json report = json::parse(slurp(dir_ / "o" / "audit.json"));
  const json& residual = report["controllers"][0]["audits"]["residual_bound"];
  EXPECT_EQ(residual["checked"].get<int>(), 20);
  EXPECT_LT(residual["passed"].get<int>(), 20);
  EXPECT_FALSE(report["pass"].get<bool>());
}

TEST_F(CliTest, AuditPassesOnBenchmark) {
  json cfg = small_config();
  cfg["audit"] = {{"draws", 30}};
  ASSERT_EQ(run({"audit", "--config", write_config(cfg).string(), "--out", (dir_ / "o").string()}),
            kOk)
      << out_.str() << err_.str();
  const json report = json::parse(out_.str());
  EXPECT_TRUE(report["pass"].get<bool>());
  EXPECT_EQ(report["controllers"][0]["audits"]["value_upper_bound"]["passed"].get<int>(), 30);
  EXPECT_EQ(report["controllers"][1]["audits"]["strict_decrease"]["passed"].get<int>(), 30);
}

TEST_F(CliTest, AuditWithZeroDraws) {
  ASSERT_EQ(run({"audit", "--config", write_config(small_config()).string(), "--draws", "0",
                 "--out", (dir_ / "o").string()}),
            kOk);
  const json report = json::parse(out_.str());
  EXPECT_EQ(report["draws"].get<int>(), 0);
  EXPECT_EQ(report["controllers"][0]["audits"]["value_lower_bound"]["checked"].get<int>(), 0);
}

TEST_F(CliTest, SingleRunMonteCarloEqualsSimulation) {
  json cfg = small_config();
  const fs::path p = write_config(cfg);
  const std::string mc = (dir_ / "mc").string(), sim = (dir_ / "sim").string();
  ASSERT_EQ(run({"montecarlo", "--config", p.string(), "--runs", "1", "--out", mc}), kOk) << err_.str();
  ASSERT_EQ(run({"simulate", "--config", p.string(), "--out", sim}), kOk) << err_.str();
  const CsvTable norms = read_csv(fs::path(mc) / "avg_norm.csv");
  const CsvTable sparsity = read_csv(fs::path(mc) / "avg_sparsity.csv");
  const json trace = json::parse(slurp(fs::path(sim) / "simulate.json"));
  EXPECT_EQ(norms.header, (std::vector<std::string>{"k", "L1L2(i)", "OMP", "RIDGE", "LS"}));
  ASSERT_EQ(norms.rows.size(), 30u);
  for (std::size_t d = 0; d < 4; ++d) {
    const json& c = trace["controllers"][d];
    EXPECT_TRUE(c["protocol_consistent"].get<bool>());
    for (std::size_t k = 0; k < 30; ++k) {
      EXPECT_EQ(norms.rows[k][0], static_cast<double>(k));
      EXPECT_EQ(norms.rows[k][d + 1], c["norms"][k].get<double>());
      EXPECT_EQ(sparsity.rows[k][d + 1], c["sparsity"][k].get<double>());
    }
  }
}

TEST_F(CliTest, CsvRoundTripsTheInProcessResult) {
  const ExperimentConfig cfg = parse_config(small_config(), dir_);
  const auto ctrls = build_controllers(cfg, true);
  const MonteCarloResult r = monte_carlo(make_experiment(cfg, ctrls), cfg.runs, cfg.seed);
  ASSERT_EQ(run({"montecarlo", "--config", write_config(small_config()).string(), "--out",
                 (dir_ / "o").string()}),
            kOk);
  const CsvTable t = read_csv(dir_ / "o" / "avg_norm.csv");
  ASSERT_EQ(t.rows.size(), static_cast<std::size_t>(cfg.steps));
  for (int k = 0; k < cfg.steps; ++k) {
    ASSERT_EQ(t.rows[k].size(), r.labels.size() + 1);
    for (std::size_t d = 0; d < r.labels.size(); ++d) EXPECT_EQ(t.rows[k][d + 1], r.avg_norm[d][k]);
  }
  const json meta = json::parse(slurp(dir_ / "o" / "meta.json"));
  EXPECT_EQ(meta["seed"].get<std::uint64_t>(), 5u);
  EXPECT_EQ(meta["runs"].get<int>(), 6);
  EXPECT_TRUE(meta.contains("wall_time_s"));
  EXPECT_TRUE(meta["versions"].contains("sppc"));
}

TEST_F(CliTest, MonteCarloIsByteIdenticalAcrossRepeatsAndThreads) {
  const fs::path p = write_config(small_config());
  const std::string a = (dir_ / "a").string(), b = (dir_ / "b").string(), c = (dir_ / "c").string();
  ASSERT_EQ(run({"montecarlo", "--config", p.string(), "--seed", "17", "--out", a}), kOk);
  ASSERT_EQ(run({"montecarlo", "--config", p.string(), "--seed", "17", "--out", b}), kOk);
  ASSERT_EQ(run({"montecarlo", "--config", p.string(), "--seed", "17", "--threads", "3", "--out", c}),
            kOk);
  for (const char* f : {"avg_norm.csv", "avg_sparsity.csv"}) {
    const std::string ref = slurp(fs::path(a) / f);
    EXPECT_FALSE(ref.empty());
    EXPECT_EQ(ref, slurp(fs::path(b) / f));
    EXPECT_EQ(ref, slurp(fs::path(c) / f));
  }
}

TEST_F(CliTest, UnboundedDropoutsAreAProtocolError) {
  json cfg = small_config();
  cfg["channel"] = {{"model", "bernoulli"}, {"p", 0.95}};
  EXPECT_EQ(run({"montecarlo", "--config", write_config(cfg).string(), "--out", (dir_ / "o").string()}),
            kProtocolError);
  EXPECT_NE(err_.str().find("--seed"), std::string::npos);
}

TEST(Format, SeventeenSignificantDigits) {
  EXPECT_EQ(format_double(0.1), "0.10000000000000001");
  EXPECT_EQ(format_double(1.0), "1");
  for (double v : {0.1, 1.0 / 3.0, 6.02214076e23, -1e-17}) EXPECT_EQ(std::stod(format_double(v)), v);
}

}  // namespace
}  // namespace sppc::cli
