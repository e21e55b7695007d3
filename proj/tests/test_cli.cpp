#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <sstream>

#include <gtest/gtest.h>

#include "cli.hpp"
#include "kdc/kdc.hpp"

using namespace kdc;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result run_cli(std::vector<std::string> args) {
  std::ostringstream out;
  std::ostringstream err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    unsetenv("KDC_SEED");
    dir_ = fs::temp_directory_path() /
           ("kdc_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override {
    unsetenv("KDC_SEED");
    fs::remove_all(dir_);
  }
  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  // Ideal n = 40 instance with four clusters of ten.
  void generate_ideal() {
    const auto r = run_cli({"generate", "--n", "40", "--r-hat", "10", "--p", "1", "--q", "0",
                            "--seed", "7", "--out", path("g.csv"), "--partition-out",
                            path("g.json")});
    ASSERT_EQ(r.code, cli::kOk) << r.err;
  }

  fs::path dir_;
};

}  // namespace

TEST_F(CliTest, GenerateIsDeterministic) {
  generate_ideal();
  const std::string first = io::read_file(path("g.csv"));
  const std::string partition = io::read_file(path("g.json"));
  generate_ideal();
  EXPECT_EQ(io::read_file(path("g.csv")), first);
  EXPECT_EQ(io::read_file(path("g.json")), partition);
  const Partition p = io::read_partition(path("g.json"));
  EXPECT_EQ(p.k(), 4);
  EXPECT_EQ(p.n(), 40);
}

TEST_F(CliTest, GenerateBinaryFormat) {
  const auto r = run_cli({"generate", "--n", "12", "--k", "3", "--p", "0.9", "--q", "0.1",
                          "--format", "bin", "--out", path("g.bin")});
  ASSERT_EQ(r.code, cli::kOk) << r.err;
  EXPECT_EQ(io::read_matrix(path("g.bin")).rows(), 12);
  EXPECT_TRUE(fs::exists(path("g.partition.json")));
}

TEST_F(CliTest, GenerateEchoesResolvedConfig) {
  generate_ideal();
  const json j = json::parse(io::read_file(path("g.json")));
  EXPECT_EQ(j.at("config").at("seed"), 7);
  EXPECT_EQ(j.at("config").at("dist_between"), "bernoulli:0");
}

TEST_F(CliTest, OutOfRangeProbabilityIsAValidationError) {
  const auto r = run_cli({"generate", "--n", "40", "--r-hat", "10", "--q", "1.1", "--out",
                          path("g.csv")});
  EXPECT_EQ(r.code, cli::kValidation);
  EXPECT_FALSE(fs::exists(path("g.csv")));
}

TEST_F(CliTest, MissingRequiredSettingIsAValidationError) {
  EXPECT_EQ(run_cli({"generate", "--r-hat", "10"}).code, cli::kValidation);
  EXPECT_EQ(run_cli({"bogus"}).code, cli::kValidation);
  EXPECT_EQ(run_cli({"generate", "--n", "abc"}).code, cli::kValidation);
}

TEST_F(CliTest, ValidateOnlyAcceptsGeneratedMatrix) {
  generate_ideal();
  const auto r = run_cli({"certify", "--matrix", path("g.csv"), "--partition", path("g.json"),
                          "--validate-only"});
  ASSERT_EQ(r.code, cli::kOk) << r.err;
  EXPECT_TRUE(json::parse(r.out).at("valid").get<bool>());
}

TEST_F(CliTest, ValidateOnlyRejectsAsymmetricMatrix) {
  io::write_file(path("bad.csv"), "1,0.5\n0.2,1\n");
  EXPECT_EQ(run_cli({"certify", "--matrix", path("bad.csv"), "--validate-only"}).code,
            cli::kValidation);
}

TEST_F(CliTest, SolveRecoversIdealInstance) {
  generate_ideal();
  const auto r = run_cli({"solve", "--matrix", path("g.csv"), "--truth", path("g.json"),
                          "--out", path("y.csv"), "--diagnostics", path("d.csv")});
  ASSERT_EQ(r.code, cli::kOk) << r.err;
  const json report = json::parse(r.out);
  EXPECT_TRUE(report.at("truth").at("recovered").get<bool>());
  EXPECT_TRUE(report.at("truth").at("partition_match").get<bool>());
  EXPECT_EQ(report.at("config").at("k"), 4);
  EXPECT_EQ(io::read_matrix(path("y.csv")).rows(), 40);
  std::istringstream diag(io::read_file(path("d.csv")));
  std::string header;
  std::getline(diag, header);
  EXPECT_EQ(header, "iter,objective,primal_residual,dual_residual");
}

TEST_F(CliTest, CertifyGroundTruthIsUnique) {
  generate_ideal();
  const auto r = run_cli({"certify", "--matrix", path("g.csv"), "--partition", path("g.json"),
                          "--alpha", "1", "--beta", "0", "--out", path("cert.json")});
  ASSERT_EQ(r.code, cli::kOk) << r.err;
  const json report = json::parse(io::read_file(path("cert.json")));
  EXPECT_EQ(report.at("verdict"), "certified_unique");
  EXPECT_TRUE(report.at("kkt").at("all_passed").get<bool>());
  for (const char* key : {"mu", "mu_max", "s_tilde_norm", "lambda_min_entry", "xi_min_entry"}) {
    EXPECT_TRUE(report.contains(key)) << key;
  }
}

TEST_F(CliTest, CertifyErrorClassesHaveDistinctCodes) {
  generate_ideal();
  EXPECT_EQ(run_cli({"certify", "--matrix", path("g.csv"), "--partition", path("g.json"),
                     "--alpha", "0.5", "--beta", "0.5"})
                .code,
            cli::kGap);

  io::write_file(path("small.json"), R"({"clusters": [[1, 2]], "outliers": [3]})");
  EXPECT_EQ(run_cli({"certify", "--matrix", path("g.csv"), "--partition", path("small.json"),
                     "--alpha", "1", "--beta", "0"})
                .code,
            cli::kDimension);

  io::write_file(path("garbage.csv"), "1,x\n");
  EXPECT_EQ(run_cli({"certify", "--matrix", path("garbage.csv"), "--validate-only"}).code,
            cli::kParse);

  EXPECT_EQ(run_cli({"certify", "--matrix", path("g.csv"), "--partition", path("g.json"),
                     "--alpha", "1", "--beta", "0", "--out", "/nonexistent_dir/c.json"})
                .code,
            cli::kWrite);
}

TEST_F(CliTest, PredictPrintsPhaseCurve) {
  const auto r = run_cli({"predict", "--n", "1000", "--q", "0.05"});
  ASSERT_EQ(r.code, cli::kOk) << r.err;
  EXPECT_NE(r.out.find("phase_curve_r_hat"), std::string::npos);
  EXPECT_NE(r.out.find("228.80890"), std::string::npos) << r.out;
}

TEST_F(CliTest, PredictReadsConstantsFromConfig) {
  io::write_file(path("c.json"), R"({"n": 500, "r_hat": 50, "constants": {"c_unique": 6}})");
  const auto r = run_cli({"predict", "--config", path("c.json")});
  ASSERT_EQ(r.code, cli::kOk) << r.err;
  const double expected = bounds::uniqueness_bound(0.0, 50, 500, 6.0);
  std::ostringstream s;
  s.precision(10);
  s << expected;
  EXPECT_NE(r.out.find(s.str()), std::string::npos) << r.out;
}

TEST_F(CliTest, FlagsOverrideConfigAndEnvOverridesSeed) {
  io::write_file(path("c.json"), R"({"n": 30, "r_hat": 10, "seed": 3, "q": 0.2})");
  ASSERT_EQ(run_cli({"generate", "--config", path("c.json"), "--n", "20", "--out",
                     path("a.csv")})
                .code,
            cli::kOk);
  EXPECT_EQ(io::read_partition(path("a.partition.json")).n(), 20);

  setenv("KDC_SEED", "99", 1);
  ASSERT_EQ(run_cli({"generate", "--config", path("c.json"), "--seed", "1", "--out",
                     path("b.csv")})
                .code,
            cli::kOk);
  ASSERT_EQ(run_cli({"generate", "--config", path("c.json"), "--seed", "2", "--out",
                     path("c.csv")})
                .code,
            cli::kOk);
  EXPECT_EQ(io::read_file(path("b.csv")), io::read_file(path("c.csv")));
  EXPECT_EQ(json::parse(io::read_file(path("b.partition.json"))).at("config").at("seed"), 99);
}

TEST_F(CliTest, MalformedConfigIsAParseError) {
  io::write_file(path("c.json"), "{\"n\": ");
  EXPECT_EQ(run_cli({"predict", "--config", path("c.json")}).code, cli::kParse);
}

TEST_F(CliTest, SweepWritesCsv) {
  const auto r = run_cli({"sweep", "--n", "20", "--r-hat-grid", "5,10", "--q-grid", "0:0.1:0.1",
                          "--trials", "1", "--jobs", "1", "--out", path("s.csv")});
  ASSERT_EQ(r.code, cli::kOk) << r.err;
  std::istringstream csv(io::read_file(path("s.csv")));
  std::string line;
  int rows = 0;
  std::getline(csv, line);
  EXPECT_EQ(line, "r_hat,q,trials,successes,mean_rel_err,mean_iters,curve_r_hat");
  while (std::getline(csv, line)) ++rows;
  EXPECT_EQ(rows, 4);
  EXPECT_TRUE(fs::exists(path("s.csv.config.json")));
}

TEST_F(CliTest, BinaryReportsExitCodes) {
  const std::string cmd = std::string(KDC_CLI_PATH) + " generate --n 10 --r-hat 5 --q 1.1 --out " +
                          path("x.csv") + " 2>/dev/null";
  const int status = std::system(cmd.c_str());
  ASSERT_TRUE(WIFEXITED(status));
  EXPECT_EQ(WEXITSTATUS(status), cli::kValidation);
}
