#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "cat/cli.hpp"
#include "cat/harness.hpp"

using namespace cat;

namespace {

struct Invocation {
  int code = -1;
  std::string out;
  std::string err;
};

Invocation invoke(std::vector<std::string> args, const std::string& input = "") {
  args.insert(args.begin(), "cat-search");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::istringstream in(input);
  std::ostringstream out, err;
  Invocation r;
  r.code = cli::run(static_cast<int>(argv.size()), argv.data(), in, out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::filesystem::path temp_path(const std::string& name) {
  return std::filesystem::temp_directory_path() / ("cat_cli_" + name);
}

}  // namespace

TEST_CASE("session line protocol") {
  const auto r = invoke({"session", "--strategy", "fun", "--n", "64"}, "pass\npass\npass\nfail\npass\nfail\n");
  CHECK(r.code == cli::kExitOk);
  CHECK(r.out == "PROBE 1\nPROBE 2\nPROBE 4\nPROBE 8\nPROBE 5\nPROBE 6\nRESULT 5 NEGATIVES 2 TOTAL 6\n");
}

TEST_CASE("session tolerates noise and stops on quit or EOF") {
  const auto noisy = invoke({"session", "--strategy", "binary", "--n", "1"}, "  maybe\n pass \n");
  CHECK(noisy.code == cli::kExitOk);
  CHECK(noisy.out == "PROBE 1\nRESULT 1 NEGATIVES 0 TOTAL 1\n");
  CHECK(noisy.err.find("expected pass") != std::string::npos);

  CHECK(invoke({"session", "--strategy", "fun", "--n", "8"}, "quit\n").code == cli::kExitOk);
  CHECK(invoke({"session", "--strategy", "fun", "--n", "8"}, "pass\n").code == cli::kExitIo);
}

TEST_CASE("usage errors exit 2") {
  CHECK(invoke({"sweep", "--strategy", "fun", "--n", "0", "--out", "x.csv"}).code == cli::kExitUsage);
  CHECK(invoke({"sweep", "--strategy", "quick", "--n", "4", "--out", "x.csv"}).code == cli::kExitUsage);
  CHECK(invoke({"sweep", "--strategy", "fun", "--n", "4", "--out", "x.csv", "--bogus"}).code == cli::kExitUsage);
  CHECK(invoke({}).code == cli::kExitUsage);
  CHECK(invoke({"verify", "--n-max", "8"}).code == cli::kExitUsage);
  CHECK(invoke({"--help"}).code == cli::kExitOk);
}

TEST_CASE("sweep writes the CSV") {
  const auto path = temp_path("sweep.csv");
  const auto r = invoke({"sweep", "--strategy", "fun", "--n", "16", "--out", path.string()});
  CHECK(r.code == cli::kExitOk);
  const auto rows = read_csv(path);
  CHECK(rows == sweep(StrategyKind::Fun, 16));
  CHECK(slurp(path) == format_sweep_csv(rows));
  std::filesystem::remove(path);
}

TEST_CASE("sweep reports unwritable output as an I/O error") {
  CHECK(invoke({"sweep", "--strategy", "fun", "--n", "4", "--out", "/nonexistent-dir/x.csv"}).code == cli::kExitIo);
}

TEST_CASE("compare writes sweeps and the dominance table") {
  const auto path = temp_path("cmp.csv");
  const auto dom = temp_path("cmp_dominance.csv");
  const auto r = invoke({"compare", "--strategies", "binary,fun", "--n", "16", "--out", path.string()});
  CHECK(r.code == cli::kExitOk);
  CHECK(read_csv(path).size() == 34);
  const auto text = slurp(dom);
  CHECK(text.rfind(std::string(kDominanceCsvHeader), 0) == 0);
  CHECK(text.find("16,5,fun,0") != std::string::npos);
  CHECK(text.find("16,5,binary,1") != std::string::npos);
  std::filesystem::remove(path);
  std::filesystem::remove(dom);
}

TEST_CASE("verify exit codes") {
  const auto r = invoke({"verify", "--n-max", "32"});
  CHECK(r.code == cli::kExitOk);
  CHECK(r.out.find("OVERALL PASS") != std::string::npos);
}

TEST_CASE("simulate is seeded by the flag or CAT_SEED") {
  const auto profile = temp_path("rect.json");
  std::ofstream(profile) << R"({"q":[0.88,0.82,0.71,0.67],"t":0.8,"k":200})";
  const auto a = temp_path("mc_a.csv");
  const auto b = temp_path("mc_b.csv");
  const auto c = temp_path("mc_c.csv");
  CHECK(invoke({"--seed", "9", "simulate", "--strategies", "binary", "--profile", profile.string(), "--runs", "20",
                "--out", a.string()})
            .code == cli::kExitOk);
  ::setenv("CAT_SEED", "9", 1);
  CHECK(invoke({"simulate", "--strategies", "binary", "--profile", profile.string(), "--runs", "20", "--out",
                b.string()})
            .code == cli::kExitOk);
  ::setenv("CAT_SEED", "10", 1);
  CHECK(invoke({"simulate", "--strategies", "binary", "--profile", profile.string(), "--runs", "20", "--out",
                c.string()})
            .code == cli::kExitOk);
  ::setenv("CAT_SEED", "ten", 1);
  CHECK(invoke({"simulate", "--profile", profile.string(), "--out", c.string()}).code == cli::kExitUsage);
  ::unsetenv("CAT_SEED");
  CHECK(slurp(a) == slurp(b));
  CHECK(slurp(a) != slurp(c));
  for (const auto& p : {profile, a, b, c}) std::filesystem::remove(p);
}

TEST_CASE("simulate rejects a non-stochastic profile") {
  const auto profile = temp_path("det.json");
  std::ofstream(profile) << R"({"n":4,"p":2})";
  CHECK(invoke({"simulate", "--profile", profile.string(), "--out", temp_path("never.csv").string()}).code ==
        cli::kExitUsage);
  CHECK(invoke({"simulate", "--profile", "/nonexistent.json", "--out", temp_path("never.csv").string()}).code ==
        cli::kExitIo);
  std::filesystem::remove(profile);
}
