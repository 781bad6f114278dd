#include "linpred/io.hpp"

#include <gtest/gtest.h>

#include <sys/wait.h>

#include <array>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <regex>
#include <sstream>
#include <string>

namespace fs = std::filesystem;

namespace {

struct CliRun {
  int code = -1;
  std::string output;
};

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("linpred_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string p(const std::string& name) const { return (dir_ / name).string(); }

  CliRun run(const std::string& args) const {
    const std::string cmd = "cd '" + dir_.string() + "' && '" LINPRED_CLI_PATH "' " + args + " 2>&1";
    CliRun r;
    FILE* pipe = popen(cmd.c_str(), "r");
    if (!pipe) return r;
    std::array<char, 512> buf;
    while (std::fgets(buf.data(), buf.size(), pipe)) r.output += buf.data();
    const int status = pclose(pipe);
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return r;
  }

  // Designed 3x3-mode sensitivities, phantom and k-space on a 64 grid.
  void designed_kspace(const std::string& grid = "64") {
    ASSERT_EQ(run("simulate --coils designed --modes 3x3 --grid " + grid + " --out sens.bin --phantom-out rho.bin").code, 0);
    ASSERT_EQ(run("forward --sens sens.bin --phantom rho.bin --out k.bin").code, 0);
  }

  fs::path dir_;
};

double value_after(const std::string& text, const std::string& key) {
  const std::regex re(key + " ([-+0-9.eEinf]+)");
  std::smatch m;
  if (!std::regex_search(text, m, re)) return std::nan("");
  return std::stod(m[1]);
}

std::string file_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

}  // namespace

TEST_F(Cli, HelpAndUsageErrors) {
  EXPECT_EQ(run("--help").code, 0);
  EXPECT_EQ(run("bogus").code, 2);
  EXPECT_EQ(run("simulate --coils helmholtz").code, 2);
  EXPECT_EQ(run("simulate --coils birdcage --modes 3x3").code, 2);
  EXPECT_EQ(run("simulate --coils designed --plane axial").code, 2);
  EXPECT_EQ(run("recon").code, 2);
}

TEST_F(Cli, DesignedSelfTestAndGrappaRecon) {
  const auto sim = run("simulate --coils designed --modes 3x3 --grid 64 --out sens.bin --phantom-out rho.bin");
  ASSERT_EQ(sim.code, 0) << sim.output;
  EXPECT_NE(sim.output.find("coils 9 grid 64x64"), std::string::npos);
  EXPECT_NE(sim.output.find("self-test passed"), std::string::npos);
  ASSERT_EQ(run("forward --sens sens.bin --phantom rho.bin --out k.bin").code, 0);
  const auto r = run("recon --method grappa --in k.bin --rx 2 --ry 1 --acr 31 --reference k.bin --out r.bin --png r.pgm");
  ASSERT_EQ(r.code, 0) << r.output;
  EXPECT_LT(value_after(r.output, "nrmse"), 1e-4);
  EXPECT_TRUE(fs::exists(p("r.bin")));
  EXPECT_TRUE(fs::exists(p("r.pgm")));
  const auto t = linpred::read_tensor(p("r.bin"));
  EXPECT_EQ(t.dims, (std::vector<std::uint64_t>{9, 64, 64}));
}

TEST_F(Cli, EvenKernelIsUsageError) {
  designed_kspace();
  const auto r = run("recon --method grappa --in k.bin --rx 2 --kernel 4 --out r.bin");
  EXPECT_EQ(r.code, 2) << r.output;
  EXPECT_FALSE(fs::exists(p("r.bin")));
}

TEST_F(Cli, SpiritBothDirections) {
  designed_kspace();
  const auto r = run("recon --method spirit --in k.bin --rx 2 --ry 2 --acr 31 --reference k.bin --dump-objective obj.csv");
  ASSERT_EQ(r.code, 0) << r.output;
  EXPECT_TRUE(std::isfinite(value_after(r.output, "iterations")));
  EXPECT_LT(value_after(r.output, "nrmse"), 1e-3);
  std::ifstream csv(p("obj.csv"));
  std::string header, line;
  std::getline(csv, header);
  EXPECT_EQ(header, "iteration,objective");
  double prev = INFINITY;
  int rows = 0;
  while (std::getline(csv, line)) {
    const double v = std::stod(line.substr(line.find(',') + 1));
    EXPECT_LE(v, prev * (1 + 1e-12));
    prev = v;
    ++rows;
  }
  EXPECT_GE(rows, 2);
}

TEST_F(Cli, SingleElementWarns) {
  const auto r = run("simulate --coils birdcage --elements 1 --grid 32 --out s.bin --phantom-out rho.bin");
  EXPECT_EQ(r.code, 0) << r.output;
  EXPECT_NE(r.output.find("warning"), std::string::npos);
}

TEST_F(Cli, SagittalConditionNumbers) {
  const auto r = run("simulate --coils birdcage --plane sagittal --grid 64 --out s.bin");
  ASSERT_EQ(r.code, 0) << r.output;
  const double h = value_after(r.output, "condition horizontal");
  const double v = value_after(r.output, "condition vertical");
  EXPECT_GE(v, 1e3 * h);
}

TEST_F(Cli, MetricReportsLabels) {
  ASSERT_EQ(run("simulate --coils birdcage --plane sagittal --grid 96 --out s.bin --phantom-out rho.bin").code, 0);
  ASSERT_EQ(run("forward --sens s.bin --phantom rho.bin --out k.bin").code, 0);
  for (const char* k : {"3", "7"}) {
    const auto r = run(std::string("metric --in k.bin --kernel ") + k + " --report rep.csv --dataset sag");
    ASSERT_EQ(r.code, 0) << r.output;
    EXPECT_NE(r.output.find(std::string("kernel ") + k + "x" + k), std::string::npos);
    EXPECT_GT(value_after(r.output, "error vertical"), value_after(r.output, "error horizontal"));
  }
  const auto rep = run("report --in rep.csv");
  EXPECT_EQ(rep.code, 0);
  EXPECT_NE(rep.output.find("2 rows"), std::string::npos);
  std::ifstream csv(p("rep.csv"));
  std::string header;
  std::getline(csv, header);
  EXPECT_EQ(header, linpred::kReportHeader);
}

TEST_F(Cli, OutputsAreDeterministic) {
  designed_kspace("32");
  ASSERT_EQ(run("forward --sens sens.bin --phantom rho.bin --noise 0.01 --seed 5 --out n1.bin").code, 0);
  ASSERT_EQ(run("forward --sens sens.bin --phantom rho.bin --noise 0.01 --seed 5 --out n2.bin").code, 0);
  EXPECT_EQ(file_bytes(p("n1.bin")), file_bytes(p("n2.bin")));
  ASSERT_EQ(run("recon --method spirit --in n1.bin --rx 2 --acr 15 --out a.bin").code, 0);
  ASSERT_EQ(run("recon --method spirit --in n1.bin --rx 2 --acr 15 --out b.bin").code, 0);
  EXPECT_EQ(file_bytes(p("a.bin")), file_bytes(p("b.bin")));
}

TEST_F(Cli, CalibrateThenApplyWeights) {
  designed_kspace();
  ASSERT_EQ(run("calibrate --method grappa --in k.bin --rx 2 --acr 31 --lambda 0 --out w.bin").code, 0);
  const auto r = run("recon --method grappa --in k.bin --rx 2 --acr 31 --weights w.bin --reference k.bin");
  ASSERT_EQ(r.code, 0) << r.output;
  EXPECT_LT(value_after(r.output, "nrmse"), 1e-6);
}

TEST_F(Cli, DataErrorsLeaveNoOutput) {
  std::ofstream(p("junk.bin")) << "not a tensor";
  const auto r = run("recon --method grappa --in junk.bin --rx 2 --out r.bin");
  EXPECT_EQ(r.code, 3) << r.output;
  EXPECT_FALSE(fs::exists(p("r.bin")));
  EXPECT_EQ(run("recon --method grappa --in missing.bin --rx 2").code, 3);
  designed_kspace("32");
  const auto big = run("recon --method grappa --in k.bin --rx 2 --acr 40 --out r.bin");
  EXPECT_EQ(big.code, 3) << big.output;
  EXPECT_FALSE(fs::exists(p("r.bin")));
}

TEST_F(Cli, MaskPgm) {
  const auto r = run("mask --nx 16 --ny 8 --rx 2 --acr 0 --out m.pgm");
  ASSERT_EQ(r.code, 0) << r.output;
  EXPECT_NE(r.output.find("acquired 64 of 128"), std::string::npos);
  const auto img = linpred::read_pgm(p("m.pgm"));
  EXPECT_EQ(img.width, 16);
  EXPECT_EQ(img.height, 8);
}
