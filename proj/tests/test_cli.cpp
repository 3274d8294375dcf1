#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>
#include <sys/wait.h>

#include "compound/io.hpp"

namespace fs = std::filesystem;

namespace {

struct CmdResult {
  int status = -1;
  std::string output;  // stdout and stderr interleaved
};

CmdResult run_cli(const std::string& args) {
  std::string cmd = std::string(COMPOUND_CLI_PATH) + " " + args + " 2>&1";
  FILE* pipe = ::popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  CmdResult r;
  char buf[4096];
  std::size_t n = 0;
  while ((n = std::fread(buf, 1, sizeof buf, pipe)) > 0) r.output.append(buf, n);
  int rc = ::pclose(pipe);
  r.status = WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
  return r;
}

// Each test works in its own scratch directory so runs cannot interfere.
struct ScratchDir {
  fs::path path;
  explicit ScratchDir(const std::string& tag) {
    path = fs::temp_directory_path() /
           ("compound_cli_" + tag + "_" + std::to_string(::getpid()));
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~ScratchDir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
  std::string str() const { return path.string(); }
};

long count_lines(const fs::path& p) {
  std::string text = compound::read_file(p.string());
  long lines = 0;
  for (char c : text)
    if (c == '\n') ++lines;
  return lines;
}

bool contains(const std::string& haystack, const std::string& needle) {
  return haystack.find(needle) != std::string::npos;
}

}  // namespace

TEST_CASE("cli reports a version") {
  CmdResult r = run_cli("--version");
  CHECK(r.status == 0);
  CHECK(contains(r.output, "0.1.0"));
}

TEST_CASE("simulate writes the model and observation files") {
  ScratchDir dir("simulate");
  CmdResult r = run_cli("simulate --seed 3 --out " + dir.str());
  INFO(r.output);
  REQUIRE(r.status == 0);
  CHECK(fs::exists(dir.path / "model_structure.txt"));
  CHECK(fs::exists(dir.path / "model_mean.txt"));
  CHECK(fs::exists(dir.path / "model_atom_1.csv"));
  CHECK(fs::exists(dir.path / "observation.csv"));
  CHECK(fs::exists(dir.path / "manifest.json"));
  CHECK(contains(r.output, "norm compatibility ratio"));

  // d=2, cutoff=6: header plus a metadata line plus (2*6+1)^2 rows.
  CHECK(count_lines(dir.path / "observation.csv") == 2 + 13 * 13);

  SECTION("rerunning with the same seed reproduces the artefacts byte for byte") {
    std::string obs = compound::read_file((dir.path / "observation.csv").string());
    std::string man = compound::read_file((dir.path / "manifest.json").string());
    CmdResult again = run_cli("simulate --seed 3 --out " + dir.str());
    REQUIRE(again.status == 0);
    CHECK(compound::read_file((dir.path / "observation.csv").string()) == obs);
    CHECK(compound::read_file((dir.path / "manifest.json").string()) == man);
  }
}

TEST_CASE("simulate rejects an out-of-range noise level") {
  ScratchDir dir("simulate_bad_eps");
  CmdResult r = run_cli("simulate --epsilon 1.5 --out " + dir.str());
  CHECK(r.status == 2);
  CHECK(contains(r.output, "0 < epsilon < 1"));
}

TEST_CASE("estimate consumes a simulated observation") {
  ScratchDir dir("estimate");
  REQUIRE(run_cli("simulate --seed 11 --out " + dir.str()).status == 0);

  SECTION("exact mode writes the estimate and the ensemble") {
    CmdResult r = run_cli("estimate --seed 11 --out " + dir.str());
    INFO(r.output);
    REQUIRE(r.status == 0);
    CHECK(fs::exists(dir.path / "estimate.csv"));
    CHECK(fs::exists(dir.path / "ensemble.csv"));
    // d=2, cutoff=6, s_max=1: one constant candidate plus 2*(2*6+1)
    // single-support candidates per coordinate choice -> (1+7)^2 rows.
    CHECK(count_lines(dir.path / "ensemble.csv") == 1 + 64);
  }

  SECTION("mcmc mode writes the visit log") {
    CmdResult r = run_cli("estimate --seed 11 --mode mcmc --steps 2000 --burn-in 100 --out " +
                          dir.str());
    INFO(r.output);
    REQUIRE(r.status == 0);
    CHECK(fs::exists(dir.path / "estimate.csv"));
    CHECK(fs::exists(dir.path / "chain.csv"));
    CHECK(count_lines(dir.path / "chain.csv") >= 2);
  }
}

TEST_CASE("estimate fails cleanly when no observation exists") {
  ScratchDir dir("estimate_missing");
  CmdResult r = run_cli("estimate --out " + dir.str());
  CHECK(r.status == 2);
}

TEST_CASE("estimate refuses an exact sweep that would enumerate too many candidates") {
  ScratchDir dir("estimate_capacity");
  // A 12-dimensional observation is cheap to read, but the exact candidate
  // walk at s=2 crosses the enumeration ceiling.
  std::ostringstream obs;
  obs << "# epsilon=0.2, cutoff=1, seed=0\n";
  obs << "j_1,j_2,j_3,j_4,j_5,j_6,j_7,j_8,j_9,j_10,j_11,j_12,y\n";
  obs << "0,0,0,0,0,0,0,0,0,0,0,0,0.5\n";
  obs << "1,0,0,0,0,0,0,0,0,0,0,0,-0.25\n";
  compound::write_file((dir.path / "wide.csv").string(), obs.str());

  CmdResult r = run_cli("estimate --d 12 --s 2 --mode exact --observation " +
                        (dir.path / "wide.csv").string() + " --out " + dir.str());
  INFO(r.output);
  CHECK(r.status == 3);
  CHECK(contains(r.output, "mcmc"));
}

TEST_CASE("benchmark sweeps the noise grid and fits the decay") {
  ScratchDir dir("benchmark");
  CmdResult r = run_cli(
      "benchmark --seed 5 --replicates 8 --eps-grid 0.3,0.25,0.2,0.15 --out " + dir.str());
  INFO(r.output);
  REQUIRE(r.status == 0);
  CHECK(count_lines(dir.path / "risk.csv") == 1 + 4);
  CHECK(count_lines(dir.path / "plot.csv") == 1 + 4);
  CHECK(count_lines(dir.path / "fit.csv") == 2);
  CHECK(fs::exists(dir.path / "manifest.json"));
  CHECK(contains(r.output, "rate fit"));
}

TEST_CASE("benchmark refuses to fit across a change of dominant term") {
  ScratchDir dir("benchmark_guard");
  // With a tiny smoothness budget the rate is clamped at large epsilon and
  // bias-dominated at small epsilon, so no single power law applies.
  CmdResult r = run_cli(
      "benchmark --seed 5 --d 4 --s 1 --m 1 --beta 0.5 --L 0.09 "
      "--eps-grid 0.29,0.25,0.1,0.07 --replicates 8 --out " + dir.str());
  INFO(r.output);
  CHECK(r.status == 2);
  CHECK(contains(r.output, "refusing to fit"));
  CHECK(fs::exists(dir.path / "risk.csv"));      // measurements still recorded
  CHECK(!fs::exists(dir.path / "fit.csv"));
}

TEST_CASE("verify-bounds writes the check table and certificates") {
  ScratchDir dir("verify_bounds");
  CmdResult r = run_cli("verify-bounds --d 4 --s 2 --m 2 --out " + dir.str());
  INFO(r.output);
  REQUIRE(r.status == 0);
  REQUIRE(fs::exists(dir.path / "checks.csv"));
  std::string checks = compound::read_file((dir.path / "checks.csv").string());
  CHECK(contains(checks, "check_name,lhs,rhs,passed"));
  CHECK(!contains(checks, "false"));
  // Greedy packing at separation 1/8 keeps all three (4,2,2) partitions.
  CHECK(count_lines(dir.path / "packing.txt") == 3);
  // The length-9 code lists one word per line.
  CHECK(count_lines(dir.path / "code.txt") == 256);
}

TEST_CASE("verify-bounds reports capacity limits on oversized shapes") {
  ScratchDir dir("verify_bounds_capacity");
  CmdResult r = run_cli("verify-bounds --d 50 --s 5 --m 5 --out " + dir.str());
  INFO(r.output);
  CHECK(r.status == 3);
}
