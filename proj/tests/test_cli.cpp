#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

#include "json.hpp"

namespace fs = std::filesystem;
using Catch::Matchers::ContainsSubstring;

namespace {

const std::string kCli = QSTEER_CLI;
const std::string kDir = QSTEER_SCENARIO_DIR;

struct Run {
  int code;
  std::string out;
};

Run run(const std::string& args) {
  const std::string cmd = kCli + " " + args + " 2>&1";
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  std::string out;
  char buf[4096];
  while (std::size_t n = std::fread(buf, 1, sizeof buf, pipe)) out.append(buf, n);
  const int status = pclose(pipe);
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, out};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "qsteer_cli_test" / name;
  fs::remove_all(dir);
  return dir;
}

}  // namespace

TEST_CASE("engineer: calcium passes and writes artifacts") {
  const fs::path out = scratch("calcium");
  const Run r = run("engineer " + kDir + "/calcium.scenario --out " + out.string());
  CHECK(r.code == 0);
  CHECK_THAT(r.out, ContainsSubstring("PASS"));
  const auto report = nlohmann::json::parse(slurp(out / "report.json"));
  CHECK(report["final_error"].get<double>() <= 1e-3);
  CHECK(report["plan"]["mode"] == "pulse");
  CHECK(report["plan"]["n_star"][0]["n"].get<double>() == 0.5);

  std::istringstream csv(slurp(out / "trajectory.csv"));
  std::string line;
  std::getline(csv, line);
  CHECK(line.rfind("t_s,stage,re_rho_00", 0) == 0);
  int stage1 = 0;
  int stage2 = 0;
  while (std::getline(csv, line)) {
    const std::string stage = line.substr(line.find(',') + 1, 1);
    if (stage == "1") ++stage1;
    if (stage == "2") ++stage2;
  }
  CHECK(stage1 == 200);
  CHECK(stage2 == 199);
}

TEST_CASE("engineer: ground target is a near-empty run") {
  const Run r = run("engineer " + kDir + "/ground.scenario --out " + scratch("ground").string());
  CHECK(r.code == 0);
}

TEST_CASE("engineer: diagonal coupling in pulse mode is infeasible") {
  const Run r = run("engineer " + kDir + "/uncontrollable.scenario --out " + scratch("unc").string());
  CHECK(r.code == 3);
  CHECK_THAT(r.out, ContainsSubstring("2/4"));
  // The same system is fine once stage 2 is an ideal unitary.
  CHECK(run("engineer " + kDir + "/uncontrollable.scenario --mode ideal --out " + scratch("unc2").string()).code ==
        0);
}

TEST_CASE("engineer: parse failures exit 2") {
  const fs::path bad = scratch("bad");
  fs::create_directories(bad);
  std::ofstream(bad / "broken.scenario") << "{\n  \"system\": {\n    \"energies_rad_per_s\": [0, 1,]\n}\n";
  const Run r = run("engineer " + (bad / "broken.scenario").string() + " --out " + bad.string());
  CHECK(r.code == 2);
  CHECK_THAT(r.out, ContainsSubstring("line 3"));
  CHECK(run("engineer " + kDir + "/missing.scenario").code == 2);
  CHECK(run("engineer").code == 2);
  CHECK(run("engineer " + kDir + "/calcium.scenario --mode bogus").code == 2);
}

TEST_CASE("engineer: threshold override") {
  CHECK(run("engineer " + kDir + "/calcium.scenario --threshold 1e-9 --out " + scratch("thr").string()).code == 1);
}

TEST_CASE("verify: calcium spread and sweep") {
  const fs::path out = scratch("verify");
  const Run r = run("verify " + kDir + "/calcium.scenario --trials 100 --seed 7 --out " + out.string());
  CHECK(r.code == 0);
  const auto v = nlohmann::json::parse(slurp(out / "verify.json"));
  CHECK(v["all_to_one"]["max_pairwise_distance"].get<double>() <= 1e-6);
  CHECK(v["controllability_sweep"]["max_final_error"].get<double>() <= 1e-5);
}

TEST_CASE("verify: a = 1 reports a nonzero spread and fails") {
  const fs::path out = scratch("verify_a1");
  const Run r = run("verify " + kDir + "/calcium.scenario --trials 20 --seed 7 --a 1 --out " + out.string());
  CHECK(r.code == 1);
  const auto v = nlohmann::json::parse(slurp(out / "verify.json"));
  CHECK(v["all_to_one"]["max_pairwise_distance"].get<double>() > 1e-3);
}

TEST_CASE("verify: two trials with the same seed are reproducible") {
  const fs::path a = scratch("det_a");
  const fs::path b = scratch("det_b");
  CHECK(run("verify " + kDir + "/qutrit.scenario --trials 2 --seed 9 --out " + a.string()).code == 0);
  CHECK(run("verify " + kDir + "/qutrit.scenario --trials 2 --seed 9 --out " + b.string()).code == 0);
  CHECK(slurp(a / "verify.json") == slurp(b / "verify.json"));
}

TEST_CASE("engineer outputs are byte-identical across runs") {
  const fs::path a = scratch("eng_a");
  const fs::path b = scratch("eng_b");
  REQUIRE(run("engineer " + kDir + "/calcium.scenario --out " + a.string()).code == 0);
  REQUIRE(run("engineer " + kDir + "/calcium.scenario --out " + b.string()).code == 0);
  CHECK(slurp(a / "trajectory.csv") == slurp(b / "trajectory.csv"));
  CHECK(slurp(a / "report.json") == slurp(b / "report.json"));
}

TEST_CASE("controllability verdicts") {
  CHECK_THAT(run("controllability " + kDir + "/sigma_zx.system").out, ContainsSubstring("4/4 controllable"));
  CHECK_THAT(run("controllability " + kDir + "/commuting.system").out, ContainsSubstring("1/4 uncontrollable"));
  CHECK_THAT(run("controllability " + kDir + "/ladder3.system").out, ContainsSubstring("9/9 controllable"));
}

TEST_CASE("kraus: operators and constant-output check") {
  const Run r = run("kraus " + kDir + "/mixed_qubit.target");
  CHECK(r.code == 0);
  const auto j = nlohmann::json::parse(r.out);
  CHECK(j["operators"].size() == 4);
  CHECK(j["constant_output_spread"].get<double>() <= 1e-12);
  CHECK(j["trace_preservation_residual"].get<double>() <= 1e-10);
  CHECK(j["passed"] == true);
  CHECK(run("kraus " + kDir + "/calcium.scenario").code == 0);
}
