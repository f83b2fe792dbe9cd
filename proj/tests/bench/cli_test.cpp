#include <gtest/gtest.h>

#include <sys/wait.h>

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <algorithm>

namespace {

struct CliResult {
  int code;
  std::string out;
};

/// Runs the CLI with `args`, capturing standard output only.
CliResult run_cli(const std::string& args) {
  const std::string cmd = std::string(PPUSH_BENCH_BIN) + " " + args + " 2>/dev/null";
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) return {-1, ""};
  std::string out;
  std::array<char, 4096> buf;
  while (std::size_t n = std::fread(buf.data(), 1, buf.size(), pipe)) out.append(buf.data(), n);
  const int status = pclose(pipe);
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, out};
}

TEST(Cli, SelftestPasses) {
  const CliResult r = run_cli("selftest");
  EXPECT_EQ(r.code, 0);
  EXPECT_EQ(r.out.find("FAIL"), std::string::npos);
  EXPECT_NE(r.out.find("PASS"), std::string::npos);
}

TEST(Cli, ScaleToStdoutPrintsOnlyCsv) {
  const CliResult r = run_cli(
      "scale --d 8 --layers 2 --particles 1,2 --epochs 1 --out - --algo ensemble");
  EXPECT_EQ(r.code, 0);
  EXPECT_EQ(r.out.rfind("algorithm,particles,devices,active_capacity,D,mean_epoch_seconds,"
                        "epochs_measured\n", 0), 0u);
  EXPECT_EQ(std::count(r.out.begin(), r.out.end(), '\n'), 3);
}

TEST(Cli, ScaleWritesCompanionFiles) {
  const auto dir = std::filesystem::temp_directory_path() / "ppush_cli_test";
  std::filesystem::create_directories(dir);
  const auto out = dir / "timing.csv";
  const CliResult r = run_cli("scale --d 8,16 --layers 1 --particles 2 --epochs 2 --out " +
                        out.string());
  EXPECT_EQ(r.code, 0);
  EXPECT_TRUE(r.out.empty());
  EXPECT_TRUE(std::filesystem::exists(out));
  std::ifstream sd(dir / "timing_slowdown.csv");
  std::string header, row;
  std::getline(sd, header);
  std::getline(sd, row);
  EXPECT_EQ(header, "particles,D_from,D_to,slowdown");
  EXPECT_EQ(row.rfind("2,8,16,", 0), 0u);
  EXPECT_TRUE(std::filesystem::exists(dir / "timing_epochs.csv"));
  std::filesystem::remove_all(dir);
}

TEST(Cli, RegressSingleParticleHasZeroStdColumn) {
  const CliResult r = run_cli("regress --algo ensemble --particles 1 --epochs 2 --out -");
  ASSERT_EQ(r.code, 0);
  std::istringstream is(r.out);
  std::string line;
  std::getline(is, line);
  EXPECT_EQ(line, "x,mean,std,p0");
  int rows = 0;
  while (std::getline(is, line)) {
    const auto a = line.find(',');
    const auto b = line.find(',', a + 1);
    const auto c = line.find(',', b + 1);
    EXPECT_EQ(line.substr(b + 1, c - b - 1), "0");
    ++rows;
  }
  EXPECT_GT(rows, 10);
}

TEST(Cli, ConfigErrorsExitWithTwo) {
  EXPECT_EQ(run_cli("scale --algo mcmc --out -").code, 2);
  EXPECT_EQ(run_cli("scale --d 8,x --out -").code, 2);
  EXPECT_EQ(run_cli("scale --d 0 --out -").code, 2);
  EXPECT_EQ(run_cli("scale --particles 2 --active 3 --out -").code, 2);
  EXPECT_EQ(run_cli("scale --no-such-flag").code, 2);
  EXPECT_EQ(run_cli("").code, 2);
  EXPECT_EQ(run_cli("regress --particles 0 --out -").code, 2);
  EXPECT_EQ(run_cli("scale --d 8 --layers 1 --particles 1 --epochs 1 --out /nonexistent/dir/x.csv").code, 2);
}

}  // namespace
