#include <catch2/catch_amalgamated.hpp>

#include <sstream>

#include "qsteer/io/commands.hpp"
#include "test_support.hpp"

using namespace qsteer;
using namespace qsteer::io;
using namespace qtest;
using Catch::Matchers::ContainsSubstring;
using Catch::Matchers::WithinRel;

namespace {

const std::string kDir = QSTEER_SCENARIO_DIR;

json base() {
  return json::parse(R"({
    "system": {
      "energies_rad_per_s": [0.0, 4.5e15],
      "einstein_a_per_s": [[0.0, 2.2e8], [0.0, 0.0]],
      "dipole_c_m": [[0.0, 2.4e-29], [2.4e-29, 0.0]]
    },
    "initial_state": {"pure": [1.0, 0.0]},
    "target_state": {"diagonal": [0.25, 0.75]},
    "stage2": {"mode": "pulse", "field_amplitude_v_per_m": 1.0e7}
  })");
}

std::string parse_error(const json& j) {
  try {
    parse_scenario(j);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::Parse);
    return e.what();
  }
  FAIL("expected a parse error");
  return {};
}

}  // namespace

TEST_CASE("bundled calcium scenario") {
  const Scenario s = load_scenario(kDir + "/calcium.scenario");
  CHECK(s.name == "calcium");
  CHECK(s.system.dim() == 2);
  CHECK(s.system.transition_frequency(0, 1) == kCaOmega);
  CHECK(s.system.einstein_a(0, 1) == kCaA);
  CHECK_THAT(s.system.coupling()(0, 1).real(), WithinRel(-kCaMu / units::kHbar, 1e-15));
  CHECK(hs_distance(s.initial_state, DensityMatrix::diagonal({1, 0})) == 0.0);
  CHECK(hs_distance(s.target_state, calcium_target()) == 0.0);
  CHECK(s.config.stage1_duration.value() == kCaStage1);
  CHECK(s.mode == Stage2Mode::Pulse);
  CHECK(s.config.field_amplitude == kCaField);
  CHECK(s.seed == 7);
  CHECK(s.trials == 100);
  CHECK(s.threshold.value() == 1e-3);
}

TEST_CASE("every bundled scenario parses") {
  for (const char* name : {"calcium", "calcium_e9", "ground", "uncontrollable", "qutrit"}) {
    CHECK_NOTHROW(load_scenario(kDir + "/" + name + ".scenario"));
  }
  CHECK(load_system(kDir + "/sigma_zx.system").dim() == 2);
  CHECK(load_system(kDir + "/ladder3.system").dim() == 3);
  CHECK(load_target(kDir + "/mixed_qubit.target").dim() == 2);
}

TEST_CASE("complex entries and state forms") {
  json j = base();
  j["target_state"] = json::parse(R"({"matrix": [[0.5, [0.2, 0.1]], [[0.2, -0.1], 0.5]]})");
  Scenario s = parse_scenario(j);
  CHECK(s.target_state(0, 1) == Complex(0.2, 0.1));

  j["target_state"] = json::parse(R"({"pure": [1.0, [0.0, 1.0]]})");
  s = parse_scenario(j);
  CHECK(std::abs(s.target_state(1, 0) - Complex(0.0, 0.5)) < 1e-15);

  j["system"].erase("dipole_c_m");
  j["system"]["coupling_rad_per_s_per_field"] = json::parse(R"([[0, [0, -1]], [[0, 1], 0]])");
  s = parse_scenario(j);
  CHECK(s.system.coupling()(0, 1) == Complex(0.0, -1.0));
}

TEST_CASE("errors name the offending field") {
  json j = base();
  j.erase("target_state");
  CHECK_THAT(parse_error(j), ContainsSubstring("target_state") && ContainsSubstring("missing"));

  j = base();
  j["system"]["energies_rad_per_s"][1] = "fast";
  CHECK_THAT(parse_error(j), ContainsSubstring("system.energies_rad_per_s[1]"));

  j = base();
  j["system"]["dipole_c_m"][1] = json::array({1.0});
  CHECK_THAT(parse_error(j), ContainsSubstring("system.dipole_c_m[1]"));

  j = base();
  j["system"]["einstein_a_per_s"][0][1] = -1.0;
  CHECK_THAT(parse_error(j), ContainsSubstring("system.einstein_a_per_s[0][1]"));

  j = base();
  j["system"]["energies_rad_per_s"] = json::array({1.0, 0.0});
  CHECK_THAT(parse_error(j), ContainsSubstring("increasing"));

  j = base();
  j["initial_state"] = json::parse(R"({"diagonal": [0.5, 0.2]})");
  CHECK_THAT(parse_error(j), ContainsSubstring("initial_state"));

  j = base();
  j["target_state"] = json::parse(R"({"diagonal": [0.2, 0.3, 0.5]})");
  CHECK_THAT(parse_error(j), ContainsSubstring("target_state") && ContainsSubstring("dimension"));

  j = base();
  j["stage2"]["mode"] = "bang-bang";
  CHECK_THAT(parse_error(j), ContainsSubstring("stage2.mode"));

  j = base();
  j["stage2"].erase("field_amplitude_v_per_m");
  CHECK_THAT(parse_error(j), ContainsSubstring("field_amplitude_v_per_m"));

  j = base();
  j["name"] = 4;
  CHECK_THAT(parse_error(j), ContainsSubstring("name"));

  j = base();
  j["stage1"] = json::parse(R"({"split": "yes"})");
  CHECK_THAT(parse_error(j), ContainsSubstring("stage1.split"));

  j = base();
  j["samples"] = 1;
  CHECK_THAT(parse_error(j), ContainsSubstring("samples"));

  j = base();
  j["seed"] = -3;
  CHECK_THAT(parse_error(j), ContainsSubstring("seed"));
}

TEST_CASE("malformed JSON reports line and column") {
  try {
    parse_json("{\n  \"name\": \"x\",\n  \"system\": [1, 2,,]\n}", "broken.scenario");
    FAIL("expected a parse error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::Parse);
    CHECK_THAT(std::string(e.what()), ContainsSubstring("broken.scenario") && ContainsSubstring("line 3"));
  }
  CHECK_THROWS_AS(load_scenario(kDir + "/does-not-exist.scenario"), Error);
}

TEST_CASE("CSV header follows the column contract") {
  CHECK(trajectory_header(2) ==
        "t_s,stage,re_rho_00,im_rho_00,re_rho_01,im_rho_01,re_rho_11,im_rho_11,obj_final,obj_tilde,"
        "bloch_x,bloch_y,bloch_z");
  CHECK(trajectory_header(3) ==
        "t_s,stage,re_rho_00,im_rho_00,re_rho_01,im_rho_01,re_rho_02,im_rho_02,re_rho_11,im_rho_11,"
        "re_rho_12,im_rho_12,re_rho_22,im_rho_22,obj_final,obj_tilde");
  CHECK(format_double(0.1) == "0.10000000000000001");
  CHECK(format_double(0.0) == "0");
}

TEST_CASE("CSV rows round-trip the report") {
  const Scenario s = load_scenario(kDir + "/calcium.scenario");
  const EngineeringPlan pl = plan(s.system, s.target_state, s.config);
  const EngineeringReport r = execute(s.system, s.initial_state, pl);
  std::ostringstream out;
  write_trajectory_csv(out, r);
  std::istringstream in(out.str());
  std::string line;
  std::getline(in, line);
  std::size_t rows = 0;
  double last_t = -1.0;
  while (std::getline(in, line)) {
    std::vector<double> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(std::stod(cell));
    REQUIRE(cells.size() == 13);
    const StagedPoint& pt = r.trajectory[rows];
    CHECK(cells[0] == pt.t);
    CHECK(cells[0] > last_t);
    last_t = cells[0];
    CHECK(cells[1] == pt.stage);
    CHECK(cells[4] == pt.rho(0, 1).real());
    CHECK(cells[8] == r.objective_series[rows].to_target);
    CHECK(cells[12] == bloch_vector(pt.rho)[2]);
    ++rows;
  }
  CHECK(rows == r.trajectory.size());
}
