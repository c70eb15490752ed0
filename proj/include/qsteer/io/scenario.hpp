#pragma once

// JSON scenario files. Every physical quantity carries its unit in the key
// name; complex numbers are either a bare number or a [re, im] pair, and
// matrices are arrays of rows. See scenarios/README.md for the schema.

#include <cstdint>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "qsteer/density.hpp"
#include "qsteer/errors.hpp"
#include "qsteer/open_dynamics.hpp"
#include "qsteer/state_engineering.hpp"
#include "qsteer/system.hpp"

namespace qsteer::io {

using nlohmann::json;

struct Scenario {
  std::string name;
  QSystem system;
  DensityMatrix initial_state;
  DensityMatrix target_state;
  EngineeringConfig config;
  Stage2Mode mode = Stage2Mode::IdealUnitary;
  std::optional<double> threshold;
  std::size_t trials = 100;
  std::uint64_t seed = 0;
};

namespace detail {

[[noreturn]] inline void fail(const std::string& path, const std::string& what) {
  throw Error(ErrorCode::Parse, path + ": " + what);
}

inline const json& field(const json& obj, const std::string& key, const std::string& path) {
  if (!obj.is_object()) fail(path, "expected an object");
  const auto it = obj.find(key);
  if (it == obj.end()) fail(path + "." + key, "missing field");
  return *it;
}

inline double number(const json& j, const std::string& path) {
  if (!j.is_number()) fail(path, "expected a number");
  return j.get<double>();
}

inline double positive_number(const json& j, const std::string& path) {
  const double v = number(j, path);
  if (!(v > 0.0)) fail(path, "expected a positive number");
  return v;
}

inline Complex complex_number(const json& j, const std::string& path) {
  if (j.is_number()) return {j.get<double>(), 0.0};
  if (j.is_array() && j.size() == 2 && j[0].is_number() && j[1].is_number()) {
    return {j[0].get<double>(), j[1].get<double>()};
  }
  fail(path, "expected a number or an [re, im] pair");
}

inline std::vector<double> real_list(const json& j, const std::string& path) {
  if (!j.is_array() || j.empty()) fail(path, "expected a non-empty array of numbers");
  std::vector<double> out;
  for (std::size_t k = 0; k < j.size(); ++k) out.push_back(number(j[k], path + "[" + std::to_string(k) + "]"));
  return out;
}

inline ComplexVector complex_list(const json& j, const std::string& path) {
  if (!j.is_array() || j.empty()) fail(path, "expected a non-empty array");
  ComplexVector out(static_cast<Eigen::Index>(j.size()));
  for (std::size_t k = 0; k < j.size(); ++k) {
    out(static_cast<Eigen::Index>(k)) = complex_number(j[k], path + "[" + std::to_string(k) + "]");
  }
  return out;
}

inline ComplexMatrix complex_matrix(const json& j, Eigen::Index n, const std::string& path) {
  if (!j.is_array() || static_cast<Eigen::Index>(j.size()) != n) {
    fail(path, "expected " + std::to_string(n) + " rows");
  }
  ComplexMatrix m(n, n);
  for (Eigen::Index r = 0; r < n; ++r) {
    const std::string row_path = path + "[" + std::to_string(r) + "]";
    const json& row = j[static_cast<std::size_t>(r)];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != n) {
      fail(row_path, "expected " + std::to_string(n) + " entries");
    }
    for (Eigen::Index c = 0; c < n; ++c) {
      m(r, c) = complex_number(row[static_cast<std::size_t>(c)], row_path + "[" + std::to_string(c) + "]");
    }
  }
  return m;
}

}  // namespace detail

inline json parse_json(const std::string& text, const std::string& source) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::Parse, source + ": " + e.what());
  }
}

inline json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Parse, path + ": cannot open file");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_json(buf.str(), path);
}

/// System object: energies_rad_per_s, einstein_a_per_s (n x n, upper
/// triangle used), and either dipole_c_m (V = -mu / hbar per V/m) or
/// coupling_rad_per_s_per_field. Optional: h_eff_rad_per_s, generic.
inline QSystem parse_system(const json& j, const std::string& path = "system") {
  const std::vector<double> energies = detail::real_list(detail::field(j, "energies_rad_per_s", path),
                                                         path + ".energies_rad_per_s");
  const auto n = static_cast<Eigen::Index>(energies.size());

  RealMatrix a = RealMatrix::Zero(n, n);
  if (j.contains("einstein_a_per_s")) {
    const ComplexMatrix am = detail::complex_matrix(j["einstein_a_per_s"], n, path + ".einstein_a_per_s");
    for (Eigen::Index r = 0; r < n; ++r) {
      for (Eigen::Index c = r + 1; c < n; ++c) {
        if (am(r, c).imag() != 0.0 || am(r, c).real() < 0.0) {
          detail::fail(path + ".einstein_a_per_s[" + std::to_string(r) + "][" + std::to_string(c) + "]",
                       "Einstein coefficients must be nonnegative reals");
        }
        a(r, c) = am(r, c).real();
      }
    }
  }

  ComplexMatrix v = ComplexMatrix::Zero(n, n);
  const bool has_dipole = j.contains("dipole_c_m");
  const bool has_coupling = j.contains("coupling_rad_per_s_per_field");
  if (has_dipole && has_coupling) detail::fail(path, "give either dipole_c_m or coupling_rad_per_s_per_field");
  if (has_dipole) v = -detail::complex_matrix(j["dipole_c_m"], n, path + ".dipole_c_m") / units::kHbar;
  if (has_coupling) {
    v = detail::complex_matrix(j["coupling_rad_per_s_per_field"], n, path + ".coupling_rad_per_s_per_field");
  }

  std::optional<std::vector<double>> h_eff;
  if (j.contains("h_eff_rad_per_s")) {
    h_eff = detail::real_list(j["h_eff_rad_per_s"], path + ".h_eff_rad_per_s");
  }
  bool generic = true;
  if (j.contains("generic")) {
    if (!j["generic"].is_boolean()) detail::fail(path + ".generic", "expected true or false");
    generic = j["generic"].get<bool>();
  }
  try {
    return QSystem(energies, v, a, generic, h_eff);
  } catch (const Error& e) {
    detail::fail(path, e.what());
  }
}

/// State object: exactly one of "diagonal", "pure" or "matrix".
inline DensityMatrix parse_state(const json& j, const std::string& path) {
  if (!j.is_object()) detail::fail(path, "expected an object");
  try {
    if (j.contains("diagonal")) return DensityMatrix::diagonal(detail::real_list(j["diagonal"], path + ".diagonal"));
    if (j.contains("pure")) return density_from_pure(detail::complex_list(j["pure"], path + ".pure"));
    if (j.contains("matrix")) {
      const json& m = j["matrix"];
      if (!m.is_array()) detail::fail(path + ".matrix", "expected an array of rows");
      return DensityMatrix(detail::complex_matrix(m, static_cast<Eigen::Index>(m.size()), path + ".matrix"));
    }
  } catch (const Error& e) {
    if (e.code() == ErrorCode::Parse) throw;
    detail::fail(path, e.what());
  }
  detail::fail(path, "expected one of diagonal, pure, matrix");
}

inline Stage2Mode parse_mode(const std::string& text, const std::string& path) {
  if (text == "pulse") return Stage2Mode::Pulse;
  if (text == "ideal" || text == "ideal-unitary") return Stage2Mode::IdealUnitary;
  detail::fail(path, "mode must be \"pulse\" or \"ideal\"");
}

inline Scenario parse_scenario(const json& j) {
  if (!j.is_object()) detail::fail("(root)", "expected an object");
  QSystem sys = parse_system(detail::field(j, "system", "(root)"), "system");
  DensityMatrix initial = parse_state(detail::field(j, "initial_state", "(root)"), "initial_state");
  DensityMatrix target = parse_state(detail::field(j, "target_state", "(root)"), "target_state");
  if (initial.dim() != sys.dim()) detail::fail("initial_state", "dimension differs from the system");
  if (target.dim() != sys.dim()) detail::fail("target_state", "dimension differs from the system");

  std::string name = "scenario";
  if (j.contains("name")) {
    if (!j["name"].is_string()) detail::fail("name", "expected a string");
    name = j["name"].get<std::string>();
  }
  Scenario s{std::move(name), std::move(sys), std::move(initial), std::move(target)};
  EngineeringConfig& cfg = s.config;

  if (j.contains("stage1")) {
    const json& st = j["stage1"];
    if (!st.is_object()) detail::fail("stage1", "expected an object");
    if (st.contains("a")) cfg.a = detail::number(st["a"], "stage1.a");
    if (st.contains("duration_s")) {
      const double d = detail::number(st["duration_s"], "stage1.duration_s");
      if (d < 0.0) detail::fail("stage1.duration_s", "must be nonnegative");
      cfg.stage1_duration = d;
    }
    if (st.contains("split")) {
      if (!st["split"].is_boolean()) detail::fail("stage1.split", "expected true or false");
      cfg.split_stage1 = st["split"].get<bool>();
    }
  }

  s.mode = s.system.dim() == 2 ? Stage2Mode::Pulse : Stage2Mode::IdealUnitary;
  if (j.contains("stage2")) {
    const json& st = j["stage2"];
    if (!st.is_object()) detail::fail("stage2", "expected an object");
    if (st.contains("mode")) {
      if (!st["mode"].is_string()) detail::fail("stage2.mode", "expected a string");
      s.mode = parse_mode(st["mode"].get<std::string>(), "stage2.mode");
    }
    if (st.contains("field_amplitude_v_per_m")) {
      cfg.field_amplitude = detail::positive_number(st["field_amplitude_v_per_m"], "stage2.field_amplitude_v_per_m");
    }
    if (st.contains("dt_s")) cfg.coherent_dt = detail::positive_number(st["dt_s"], "stage2.dt_s");
    if (st.contains("ideal_duration_s")) {
      cfg.ideal_stage2_duration = detail::positive_number(st["ideal_duration_s"], "stage2.ideal_duration_s");
    }
  }
  if (s.mode == Stage2Mode::Pulse && !(cfg.field_amplitude > 0.0)) {
    detail::fail("stage2.field_amplitude_v_per_m", "pulse mode needs a positive field amplitude");
  }
  cfg.mode = s.mode;

  auto count = [&](const char* key, std::size_t fallback) {
    if (!j.contains(key)) return fallback;
    const json& v = j[key];
    if (!v.is_number_unsigned() || v.get<std::uint64_t>() == 0) detail::fail(key, "expected a positive integer");
    return static_cast<std::size_t>(v.get<std::uint64_t>());
  };
  cfg.samples = count("samples", cfg.samples);
  if (cfg.samples < 2) detail::fail("samples", "need at least 2");
  s.trials = count("trials", s.trials);
  if (j.contains("seed")) {
    if (!j["seed"].is_number_unsigned()) detail::fail("seed", "expected a nonnegative integer");
    s.seed = j["seed"].get<std::uint64_t>();
  }
  if (j.contains("n_max")) cfg.n_max = detail::positive_number(j["n_max"], "n_max");
  if (j.contains("threshold")) s.threshold = detail::positive_number(j["threshold"], "threshold");
  return s;
}

inline Scenario load_scenario(const std::string& path) {
  const json j = read_json_file(path);
  try {
    return parse_scenario(j);
  } catch (const Error& e) {
    throw Error(ErrorCode::Parse, path + ": " + e.what());
  }
}

// Accepts either {"system": {...}} or a bare system object.
inline QSystem load_system(const std::string& path) {
  const json j = read_json_file(path);
  try {
    if (j.is_object() && j.contains("system")) return parse_system(j["system"], "system");
    return parse_system(j, "(root)");
  } catch (const Error& e) {
    throw Error(ErrorCode::Parse, path + ": " + e.what());
  }
}

// Accepts either {"target_state": {...}} or a bare state object.
inline DensityMatrix load_target(const std::string& path) {
  const json j = read_json_file(path);
  try {
    if (j.is_object() && j.contains("target_state")) return parse_state(j["target_state"], "target_state");
    return parse_state(j, "(root)");
  } catch (const Error& e) {
    throw Error(ErrorCode::Parse, path + ": " + e.what());
  }
}

}  // namespace qsteer::io
