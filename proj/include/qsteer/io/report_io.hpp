#pragma once

// trajectory.csv and report.json writers. Output is a pure function of the
// inputs so repeated runs are byte-identical.

#include <cstdio>
#include <ostream>
#include <string>
#include <vector>

#include "json.hpp"

#include "qsteer/density.hpp"
#include "qsteer/state_engineering.hpp"

namespace qsteer::io {

using ordered_json = nlohmann::ordered_json;

inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string format_short(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

inline std::string element_tag(Eigen::Index i, Eigen::Index j, Eigen::Index n) {
  if (n <= 10) return std::to_string(i) + std::to_string(j);
  return std::to_string(i) + "_" + std::to_string(j);
}

inline std::string trajectory_header(Eigen::Index n) {
  std::string h = "t_s,stage";
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i; j < n; ++j) {
      const std::string tag = element_tag(i, j, n);
      h += ",re_rho_" + tag + ",im_rho_" + tag;
    }
  }
  h += ",obj_final,obj_tilde";
  if (n == 2) h += ",bloch_x,bloch_y,bloch_z";
  return h;
}

inline void write_trajectory_csv(std::ostream& out, const EngineeringReport& report) {
  if (report.trajectory.empty()) return;
  const Eigen::Index n = report.trajectory.front().rho.dim();
  out << trajectory_header(n) << '\n';
  for (std::size_t k = 0; k < report.trajectory.size(); ++k) {
    const StagedPoint& pt = report.trajectory[k];
    const ObjectivePoint& obj = report.objective_series[k];
    std::string line = format_double(pt.t) + "," + std::to_string(pt.stage);
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = i; j < n; ++j) {
        line += "," + format_double(pt.rho(i, j).real()) + "," + format_double(pt.rho(i, j).imag());
      }
    }
    line += "," + format_double(obj.to_target) + "," + format_double(obj.to_intermediate);
    if (n == 2) {
      const auto b = bloch_vector(pt.rho);
      line += "," + format_double(b[0]) + "," + format_double(b[1]) + "," + format_double(b[2]);
    }
    out << line << '\n';
  }
}

inline ordered_json complex_to_json(Complex z) { return ordered_json::array({z.real(), z.imag()}); }

inline ordered_json matrix_to_json(const ComplexMatrix& m) {
  ordered_json rows = ordered_json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    ordered_json row = ordered_json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(complex_to_json(m(r, c)));
    rows.push_back(std::move(row));
  }
  return rows;
}

inline ordered_json occupations_to_json(const SpectralDensity& occ) {
  ordered_json out = ordered_json::array();
  for (Eigen::Index i = 0; i < occ.dim(); ++i) {
    for (Eigen::Index j = i + 1; j < occ.dim(); ++j) {
      out.push_back(ordered_json{{"i", i}, {"j", j}, {"n", occ(i, j)}});
    }
  }
  return out;
}

inline ordered_json plan_to_json(const EngineeringPlan& pl) {
  ordered_json j;
  j["mode"] = to_string(pl.mode);
  j["spectrum"] = pl.p;
  j["n_star"] = occupations_to_json(pl.n_star);
  j["stage1_duration_s"] = pl.stage1_duration;
  if (pl.decoherence) {
    j["decoherence"] = ordered_json{{"duration_s", pl.decoherence->duration},
                                    {"occupations", occupations_to_json(pl.decoherence->occupations)}};
  }
  j["stage2_unitary"] = matrix_to_json(pl.stage2_unitary.matrix());
  if (pl.stage2_pulse) {
    const Pulse& p = *pl.stage2_pulse;
    j["stage2_pulse"] = ordered_json{{"amplitude_v_per_m", p.amplitude},
                                     {"carrier_rad_per_s", p.carrier},
                                     {"duration_s", p.duration},
                                     {"phase_rad", p.phase}};
  }
  j["lie_algebra"] = ordered_json{{"raw", pl.lie.raw},
                                  {"effective", pl.lie.effective},
                                  {"full", pl.lie.full},
                                  {"controllable", pl.controllable}};
  j["warnings"] = pl.warnings;
  return j;
}

}  // namespace qsteer::io
