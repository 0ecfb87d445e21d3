#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "commands.hpp"
#include "feig/matgen.hpp"

using feig::cli::run_cli;

namespace {

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run run(std::vector<std::string> args) {
  args.insert(args.begin(), "feig");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::filesystem::path scratch(const std::string& name) {
  const auto d = std::filesystem::temp_directory_path() / "feig_cli_test";
  std::filesystem::create_directories(d);
  return d / name;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

TEST_CASE("usage errors exit with 1") {
  CHECK(run({}).code == 1);
  CHECK(run({"bogus"}).code == 1);
  const Run r = run({"refine", "--gen", "n=20,cond=1e4", "--delta", "1e-20"});
  CHECK(r.code == 1);
  CHECK(r.err.find("delta below unit roundoff") != std::string::npos);
  CHECK(run({"refine", "--input", scratch("missing.mtx").string()}).code == 1);
  CHECK(run({"refine", "--gen", "n=20,cond=0.1"}).code == 1);
  CHECK(run({"refine", "--gen", "n=20,cond=1e4", "--mode", "nope"}).code == 1);
  CHECK(run({"--threads", "0", "verify", "--suite", "eft", "--count", "10"}).code == 1);
}

TEST_CASE("parse errors report the line") {
  const auto p = scratch("bad.mtx");
  std::ofstream(p) << "%%MatrixMarket matrix coordinate real general\n2 2 1\n1 x 2\n";
  const Run r = run({"refine", "--input", p.string()});
  CHECK(r.code == 1);
  CHECK(r.err.find("line 3") != std::string::npos);
}

TEST_CASE("refine without the oracle leaves true errors empty") {
  const Run r = run({"refine", "--gen", "n=30,cond=1e4"});
  REQUIRE(r.code == 0);
  const auto j = nlohmann::json::parse(r.out);
  CHECK(j["final"]["forward_error"].is_null());
  CHECK(j["config"]["oracle"] == false);
}

TEST_CASE("refine on a generated matrix") {
  const Run r = run({"refine", "--gen", "n=100,cond=1e8,seed=3", "--delta", "1e-6", "--oracle", "on"});
  REQUIRE(r.code == 0);
  const auto j = nlohmann::json::parse(r.out);
  CHECK(j["schema"] == "feig-report v1");
  CHECK(j["exit_code"] == 0);
  CHECK(j["final"]["forward_error"].get<double>() <= 1e-5);
  CHECK(j["history"]["iterations"].get<int>() >= 1);
  CHECK_FALSE(j.contains("timings"));
  CHECK_FALSE(j["history"]["steps"][0].contains("elapsed_seconds"));
}

TEST_CASE("refine reads a MatrixMarket file and writes CSV") {
  const auto m = scratch("in.mtx");
  const auto csv = scratch("hist.csv");
  const auto js = scratch("rep.json");
  REQUIRE(run({"gen", "--n", "40", "--cond", "1e6", "--out", m.string()}).code == 0);
  const Run r = run({"refine", "--input", m.string(), "--delta", "1e-10", "--oracle", "on", "--csv", csv.string(), "--out",
                     js.string()});
  CHECK(r.code == 0);
  const std::string text = slurp(csv);
  CHECK(text.rfind("# ", 0) == 0);
  CHECK(text.find("v1") != std::string::npos);
  const auto j = nlohmann::json::parse(slurp(js));
  CHECK(j["final"]["forward_error"].get<double>() <= 1e-9);
}

TEST_CASE("an iteration cap that is too small exits with 2") {
  const Run r = run({"refine", "--gen", "n=60,cond=1e10", "--delta", "1e-12", "--max-iter", "1"});
  CHECK(r.code == 2);
  const auto j = nlohmann::json::parse(r.out);
  CHECK(j["history"]["status"] == "max-iterations");
}

TEST_CASE("verify suites") {
  Run r = run({"verify", "--suite", "eft", "--count", "2000"});
  CHECK(r.code == 0);
  CHECK(r.out.find("eft: PASS") != std::string::npos);
  r = run({"verify", "--suite", "split"});
  CHECK(r.code == 0);
  CHECK(run({"verify", "--suite", "nope"}).code == 1);
}

TEST_CASE("table-sparse on an empty directory") {
  const auto d = scratch("empty_dir");
  std::filesystem::remove_all(d);
  std::filesystem::create_directories(d);
  const Run r = run({"table-sparse", "--dir", d.string()});
  CHECK(r.code == 0);
  std::istringstream lines(r.out);
  std::string line;
  int data = 0;
  while (std::getline(lines, line))
    if (!line.empty() && line[0] != '#' && line.rfind("name,", 0) != 0) ++data;
  CHECK(data == 0);
}

TEST_CASE("table-sparse on a generated banded file") {
  const auto d = scratch("band_dir");
  std::filesystem::remove_all(d);
  std::filesystem::create_directories(d);
  REQUIRE(run({"gen", "--n", "80", "--cond", "1e6", "--bandwidth", "2", "--out", (d / "b.mtx").string()}).code == 0);
  const Run r = run({"table-sparse", "--dir", d.string(), "--delta", "1e-8"});
  CHECK(r.code == 0);
  CHECK(r.out.find("b,80,") != std::string::npos);
}

TEST_CASE("output is byte-identical across runs and thread counts") {
  const Run a = run({"refine", "--gen", "n=64,cond=1e10,seed=9", "--delta", "1e-10"});
  const Run b = run({"refine", "--gen", "n=64,cond=1e10,seed=9", "--delta", "1e-10"});
  const Run c = run({"--threads", "4", "refine", "--gen", "n=64,cond=1e10,seed=9", "--delta", "1e-10"});
  CHECK(a.out == b.out);
  CHECK(a.out == c.out);
  const auto f1 = scratch("f1.csv"), f2 = scratch("f2.csv");
  REQUIRE(run({"figure", "--which", "fig1", "--n", "30", "--conds", "1e2", "1e6", "--out", f1.string()}).code == 0);
  REQUIRE(run({"--threads", "3", "figure", "--which", "fig1", "--n", "30", "--conds", "1e2", "1e6", "--out",
               f2.string()})
              .code == 0);
  CHECK(slurp(f1) == slurp(f2));
}

TEST_CASE("seed from the environment") {
  ::setenv("FORWARD_EIG_SEED", "5", 1);
  CHECK(feig::cli::default_seed() == 5);
  const auto p1 = scratch("s1.mtx"), p2 = scratch("s2.mtx");
  CHECK(run({"gen", "--n", "10", "--out", p1.string()}).code == 0);
  CHECK(run({"gen", "--n", "10", "--seed", "5", "--out", p2.string()}).code == 0);
  CHECK(slurp(p1) == slurp(p2));
  ::setenv("FORWARD_EIG_SEED", "abc", 1);
  CHECK(run({"gen", "--n", "10", "--out", p1.string()}).code == 1);
  ::unsetenv("FORWARD_EIG_SEED");
  CHECK(feig::cli::default_seed() == 1);
}

TEST_CASE("gen writes a readable binary fixture") {
  const auto p = scratch("g.bin");
  REQUIRE(run({"gen", "--n", "16", "--cond", "1e3", "--out", p.string()}).code == 0);
  const feig::Matrix a = feig::read_binary_fixture(p);
  CHECK(a.rows() == 16);
  CHECK(a.is_symmetric());
  CHECK(run({"gen", "--n", "16", "--out", scratch("g.txt").string()}).code == 1);
}
