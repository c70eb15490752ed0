#pragma once

// Subcommands behind the qsteer executable. Exit codes: 0 success,
// 1 verification threshold missed, 2 parse error, 3 infeasible plan.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "qsteer/io/report_io.hpp"
#include "qsteer/io/scenario.hpp"
#include "qsteer/kraus.hpp"

namespace qsteer::io {

enum ExitCode : int { kExitOk = 0, kExitThreshold = 1, kExitParse = 2, kExitInfeasible = 3 };

struct CommonOptions {
  std::string out_dir = ".";
  std::optional<std::size_t> samples;
  std::optional<std::string> mode;
  std::optional<double> a;
  std::optional<double> n_max;
  std::optional<double> threshold;
};

struct VerifyOptions {
  std::optional<std::size_t> trials;  // default: scenario trials
  std::uint64_t seed = 0;
  bool seed_given = false;
  std::size_t sweep_cases = 20;
  double sweep_a = 20.0;
};

inline constexpr double kSpreadThreshold = 1e-6;
inline constexpr double kSweepThreshold = 1e-5;
inline constexpr double kKrausSpreadThreshold = 1e-12;

namespace detail {

inline void apply_overrides(Scenario& s, const CommonOptions& opt) {
  if (opt.samples) {
    if (*opt.samples < 2) throw Error(ErrorCode::Parse, "--samples: need at least 2");
    s.config.samples = *opt.samples;
  }
  if (opt.mode) {
    s.mode = parse_mode(*opt.mode, "--mode");
    s.config.mode = s.mode;
  }
  if (opt.a) {
    s.config.a = *opt.a;
    s.config.stage1_duration.reset();
  }
  if (opt.n_max) {
    if (!(*opt.n_max > 0.0)) throw Error(ErrorCode::Parse, "--nmax: expected a positive number");
    s.config.n_max = *opt.n_max;
  }
  if (s.mode == Stage2Mode::Pulse && !(s.config.field_amplitude > 0.0)) {
    throw Error(ErrorCode::Parse, "pulse mode needs stage2.field_amplitude_v_per_m");
  }
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  std::filesystem::create_directories(path.parent_path().empty() ? "." : path.parent_path());
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorCode::InvalidInput, "cannot write " + path.string());
  f << text;
}

// Plans and rejects pulse requests on systems without full controllability.
inline EngineeringPlan feasible_plan(const Scenario& s) {
  EngineeringPlan pl = plan(s.system, s.target_state, s.config);
  if (s.mode == Stage2Mode::Pulse && !pl.controllable) {
    throw Error(ErrorCode::Uncontrollable, "Lie algebra dimension " + std::to_string(pl.lie.effective) + "/" +
                                               std::to_string(pl.lie.full) +
                                               ": pulse-level stage 2 is infeasible");
  }
  return pl;
}

}  // namespace detail

inline int cmd_engineer(const std::string& scenario_path, const CommonOptions& opt, std::ostream& out,
                        std::ostream& err) {
  Scenario s = load_scenario(scenario_path);
  detail::apply_overrides(s, opt);
  const EngineeringPlan pl = detail::feasible_plan(s);

  const EngineeringReport report = execute(s.system, s.initial_state, pl, pl.mode);
  const double threshold = opt.threshold.value_or(s.threshold.value_or(pl.mode == Stage2Mode::Pulse ? 1e-3 : 1e-6));
  const bool passed = report.final_error <= threshold;

  std::ostringstream csv;
  write_trajectory_csv(csv, report);

  ordered_json j;
  j["scenario"] = s.name;
  j["final_error"] = report.final_error;
  j["threshold"] = threshold;
  j["passed"] = passed;
  j["samples"] = report.trajectory.size();
  j["final_state"] = matrix_to_json(report.final_state.matrix());
  j["target_state"] = matrix_to_json(s.target_state.matrix());
  j["plan"] = plan_to_json(pl);

  const std::filesystem::path dir(opt.out_dir);
  detail::write_text(dir / "trajectory.csv", csv.str());
  detail::write_text(dir / "report.json", j.dump(2) + "\n");

  for (const auto& w : pl.warnings) err << "warning: " << w << '\n';
  out << s.name << ": final_error " << format_double(report.final_error) << " (threshold "
      << format_short(threshold) << ", mode " << to_string(pl.mode) << ") " << (passed ? "PASS" : "FAIL")
      << '\n';
  return passed ? kExitOk : kExitThreshold;
}

inline int cmd_verify(const std::string& scenario_path, const CommonOptions& opt, const VerifyOptions& vopt,
                      std::ostream& out, std::ostream& err) {
  Scenario s = load_scenario(scenario_path);
  detail::apply_overrides(s, opt);
  const std::uint64_t seed = vopt.seed_given ? vopt.seed : s.seed;
  const double sweep_a = opt.a.value_or(vopt.sweep_a);
  const double spread_threshold = opt.threshold.value_or(kSpreadThreshold);

  const EngineeringPlan pl = detail::feasible_plan(s);
  const std::size_t trials = vopt.trials.value_or(s.trials);
  if (trials < 2) throw Error(ErrorCode::Parse, "--trials: need at least 2");

  const AllToOneReport all = verify_all_to_one(s.system, pl, trials, seed, pl.mode);
  const ControllabilitySweep sweep = controllability_sweep(s.system, vopt.sweep_cases, seed, sweep_a);
  const bool spread_ok = all.max_pairwise_distance <= spread_threshold;
  const bool sweep_ok = sweep.max_final_error <= kSweepThreshold;

  ordered_json j;
  j["scenario"] = s.name;
  j["seed"] = seed;
  j["trials"] = trials;
  j["mode"] = to_string(pl.mode);
  j["all_to_one"] = ordered_json{{"max_pairwise_distance", all.max_pairwise_distance},
                                 {"threshold", spread_threshold},
                                 {"passed", spread_ok}};
  j["controllability_sweep"] = ordered_json{{"cases", vopt.sweep_cases},
                                            {"a", sweep_a},
                                            {"max_final_error", sweep.max_final_error},
                                            {"threshold", kSweepThreshold},
                                            {"passed", sweep_ok},
                                            {"final_errors", sweep.final_errors}};
  detail::write_text(std::filesystem::path(opt.out_dir) / "verify.json", j.dump(2) + "\n");

  for (const auto& w : pl.warnings) err << "warning: " << w << '\n';
  out << "all-to-one spread " << format_double(all.max_pairwise_distance) << " over " << trials
      << " trials (threshold " << format_short(spread_threshold) << ") " << (spread_ok ? "PASS" : "FAIL") << '\n';
  out << "controllability sweep max error " << format_double(sweep.max_final_error) << " over "
      << vopt.sweep_cases << " cases (threshold " << format_short(kSweepThreshold) << ") "
      << (sweep_ok ? "PASS" : "FAIL") << '\n';
  return spread_ok && sweep_ok ? kExitOk : kExitThreshold;
}

inline int cmd_controllability(const std::string& system_path, std::ostream& out) {
  const QSystem sys = load_system(system_path);
  const LieAlgebraDimension lie = lie_algebra_dimension(sys.h0(), sys.coupling());
  out << lie.effective << "/" << lie.full << " " << (lie.controllable() ? "controllable" : "uncontrollable")
      << " (generated algebra dimension " << lie.raw << ")\n";
  return kExitOk;
}

inline int cmd_kraus(const std::string& target_path, const CommonOptions& opt, std::size_t trials,
                     std::uint64_t seed, std::ostream& out) {
  const DensityMatrix target = load_target(target_path);
  const KrausMap phi = all_to_one_map(target);
  const double residual = trace_preservation_residual(phi.operators());

  std::vector<DensityMatrix> outputs;
  for (const auto& rho : random_initial_states(target.dim(), trials, seed)) outputs.push_back(apply_map(phi, rho));
  const double spread = max_pairwise_distance(outputs);
  const PositivityReport cp = is_completely_positive(phi);
  const double spread_threshold = opt.threshold.value_or(kKrausSpreadThreshold);
  const bool passed = residual <= kTracePreservationTol && spread <= spread_threshold && cp.completely_positive;

  ordered_json ops = ordered_json::array();
  for (const auto& k : phi.operators()) ops.push_back(matrix_to_json(k));
  ordered_json j;
  j["dim"] = target.dim();
  j["operators"] = std::move(ops);
  j["trace_preservation_residual"] = residual;
  j["constant_output_spread"] = spread;
  j["trials"] = trials;
  j["seed"] = seed;
  j["choi_min_eigenvalue"] = cp.min_eigenvalue;
  j["passed"] = passed;
  const std::string text = j.dump(2) + "\n";
  if (opt.out_dir != ".") detail::write_text(std::filesystem::path(opt.out_dir) / "kraus.json", text);
  out << text;
  return passed ? kExitOk : kExitThreshold;
}

/// Maps library errors to the exit-code contract.
template <class F>
int guarded(F&& body, std::ostream& err) {
  try {
    return body();
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return e.code() == ErrorCode::Parse ? kExitParse : kExitInfeasible;
  } catch (const nlohmann::json::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitParse;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitInfeasible;
  }
}

}  // namespace qsteer::io
