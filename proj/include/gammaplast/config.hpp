#pragma once

#include <array>
#include <cstdint>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "gammaplast/errors.hpp"
#include "gammaplast/fem.hpp"
#include "gammaplast/material.hpp"
#include "gammaplast/trajectory.hpp"

namespace gammaplast {

struct MeshConfig {
  double lx = 2.0;
  double ly = 1.0;
  int nx = 16;
  int ny = 8;
  bool operator==(const MeshConfig&) const = default;
};

struct TimeConfig {
  double t_end = 1.0;
  int steps = 20;
  bool operator==(const TimeConfig&) const = default;
};

struct LoadConfig {
  std::array<double, 2> force{0.5, 0.0};  // constant body force density
  std::vector<std::pair<double, double>> profile{{0.0, 0.0}, {0.5, 1.0}, {1.0, 0.3}};
  bool operator==(const LoadConfig&) const = default;
};

/// With calibrate_sigma_y set, material.sigma_y is replaced before any run by
/// the largest yield stress for which at least yield_fraction of the elements
/// have yielded at peak load in the linearized model.
struct CalibrationConfig {
  bool calibrate_sigma_y = true;
  double yield_fraction = 0.3;
  bool operator==(const CalibrationConfig&) const = default;
};

struct RunConfig {
  MaterialParams material;
  CalibrationConfig calibration;
  MeshConfig mesh;
  TimeConfig time;
  LoadConfig load;
  std::vector<double> eps_ladder{0.2, 0.1, 0.05, 0.025};
  double alpha0 = 1e-6;
  SolverTol tolerances;
  std::uint64_t seed = 7;
  std::string output_dir = "out";

  /// Collects every violated invariant into one ValidationError.
  void validate() const {
    std::ostringstream os;
    auto check = [&](bool ok, const char* what) {
      if (!ok) os << "\n  " << what;
    };
    const auto& m = material;
    check(m.mu > 0.0, "material.mu must be > 0");
    check(m.lambda >= 0.0, "material.lambda must be >= 0");
    check(m.h > 0.0, "material.h must be > 0");
    check(m.sigma_y > 0.0, "material.sigma_y must be > 0");
    check(m.rho_K > 0.0 && m.rho_K < 1.0, "material.rho_K must lie in (0, 1)");
    check(calibration.yield_fraction > 0.0 && calibration.yield_fraction <= 1.0,
          "calibration.yield_fraction must lie in (0, 1]");
    check(mesh.lx > 0.0 && mesh.ly > 0.0, "mesh.lx and mesh.ly must be > 0");
    check(mesh.nx >= 1 && mesh.ny >= 1, "mesh.nx and mesh.ny must be >= 1");
    check(time.t_end > 0.0, "time.t_end must be > 0");
    check(time.steps >= 1, "time.steps must be >= 1");
    check(!eps_ladder.empty(), "eps_ladder must not be empty");
    for (double e : eps_ladder) check(e > 0.0 && e < 1.0, "eps_ladder entries must lie in (0, 1)");
    for (std::size_t i = 1; i < eps_ladder.size(); ++i)
      check(eps_ladder[i] < eps_ladder[i - 1], "eps_ladder must be strictly decreasing");
    check(alpha0 >= 0.0, "alpha0 must be >= 0");
    const auto& pr = load.profile;
    check(!pr.empty() && pr.front().first == 0.0 && pr.front().second == 0.0,
          "load.profile must start at (0, 0) so that profile(0) = 0");
    for (std::size_t i = 1; i < pr.size(); ++i)
      check(pr[i].first > pr[i - 1].first, "load.profile times must be strictly increasing");
    if (!pr.empty()) check(pr.back().first >= time.t_end, "load.profile must cover [0, time.t_end]");
    try {
      tolerances.validate();
    } catch (const ValidationError& e) {
      os << "\n  " << e.what();
    }
    if (!os.str().empty()) throw ValidationError("invalid configuration:" + os.str());
  }

  Mesh build() const { return build_mesh(mesh.lx, mesh.ly, mesh.nx, mesh.ny); }

  Profile profile() const { return Profile{load.profile}; }

  LoadProgram load_program(const Mesh& m) const {
    return LoadProgram::body_force(m, Vec2(load.force[0], load.force[1]), profile());
  }

  TimeGrid grid(double eps) const { return TimeGrid::uniform(time.t_end, time.steps, eps * alpha0); }

  bool operator==(const RunConfig&) const = default;
};

}  // namespace gammaplast
