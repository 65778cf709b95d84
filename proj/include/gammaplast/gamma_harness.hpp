#pragma once

/// The epsilon sweep: one linearized reference run, one finite-strain run per
/// ladder value on the same mesh, grid and load, and the distance between them.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <ostream>
#include <string>
#include <vector>

#include "gammaplast/config.hpp"
#include "gammaplast/diagnostics.hpp"
#include "gammaplast/errors.hpp"
#include "gammaplast/fem.hpp"
#include "gammaplast/finite_solver.hpp"
#include "gammaplast/fit_order.hpp"
#include "gammaplast/format.hpp"
#include "gammaplast/linear_solver.hpp"
#include "gammaplast/material.hpp"

namespace gammaplast {

inline constexpr const char* kCsvHeader =
    "eps,t,err_u_H1,err_z_L2,A_field_err,energy_gap,diss_gap,stability_residual,balance_gap";

struct MetricRow {
  double eps = 0.0;
  double t = 0.0;
  double err_u_H1 = 0.0;
  double err_z_L2 = 0.0;
  double A_field_err = 0.0;
  double energy_gap = 0.0;
  double diss_gap = 0.0;
  double stability_residual = 0.0;
  double balance_gap = 0.0;
};

/// Per-instant distances between a finite-strain trajectory and the
/// linearized reference; stability_residual and balance_gap are left at 0.
inline std::vector<MetricRow> compute_errors(const Trajectory& traj_eps, const Trajectory& traj_0, double eps,
                                             const Mesh& mesh, const MaterialParams& p) {
  if (traj_eps.instants != traj_0.instants) throw GridMismatch("compute_errors: trajectories do not share instants");
  if (traj_eps.states.size() != traj_eps.size() || traj_0.states.size() != traj_0.size())
    throw GridMismatch("compute_errors: state count differs from instant count");
  const Mat2 id = Mat2::Identity();
  std::vector<MetricRow> rows;
  double diss_eps = 0.0, diss_0 = 0.0;
  for (std::size_t i = 0; i < traj_0.size(); ++i) {
    const StateField& se = traj_eps.states[i];
    const StateField& s0 = traj_0.states[i];
    if (i > 0) {
      diss_eps += traj_eps.diss_increments[i];
      diss_0 += traj_0.diss_increments[i];
    }
    MetricRow r;
    r.eps = eps;
    r.t = traj_0.instants[i];
    double eu = 0.0, ez = 0.0, ea = 0.0;
    for (int e = 0; e < mesh.num_elements(); ++e) {
      const double a = mesh.areas[e];
      const Mat2 ge = element_grad(mesh, se.u, e);
      const Mat2 g0 = element_grad(mesh, s0.u, e);
      eu += a * (ge - g0).squaredNorm();
      ez += a * (se.z[e] - s0.z[e]).squaredNorm();
      const Mat2 a_eps = ((id + eps * ge) * (id + eps * se.z[e]).inverse() - id) / eps;
      ea += a * (a_eps - (g0 - s0.z[e])).squaredNorm();
    }
    r.err_u_H1 = std::sqrt(eu);
    r.err_z_L2 = std::sqrt(ez);
    r.A_field_err = std::sqrt(ea);
    r.energy_gap = std::abs(stored_energy_finite(se, eps, mesh, p) - stored_energy_linear(s0, mesh, p));
    r.diss_gap = std::abs(diss_eps - diss_0);
    rows.push_back(r);
  }
  return rows;
}

/// Fraction of elements with z != 0 at the first instant of peak load in the
/// linearized model.
inline double yield_fraction_at_peak(const RunConfig& cfg, const Mesh& mesh, const LoadProgram& load,
                                     const MaterialParams& p) {
  TimeGrid grid = cfg.grid(0.0);
  std::size_t peak = 0;
  for (std::size_t i = 1; i < grid.instants.size(); ++i)
    if (load.profile(grid.instants[i]) > load.profile(grid.instants[peak])) peak = i;
  if (peak == 0) return 0.0;
  grid.instants.resize(peak + 1);
  LinearSolver solver(mesh, load, p, cfg.tolerances);
  const Trajectory traj = solver.solve_trajectory0(grid);
  int yielded = 0;
  for (const auto& z : traj.states.back().z)
    if (z.norm() > 0.0) ++yielded;
  return static_cast<double>(yielded) / mesh.num_elements();
}

struct Calibration {
  double sigma_y = 0.0;
  double yield_fraction = 0.0;
};

/// Largest sigma_y (to bisection resolution) with at least the target yield
/// fraction at peak load. The upper bracket is the largest elastic driving
/// force 2 mu |dev grad u| at peak, above which nothing yields.
inline Calibration calibrate_sigma_y(const RunConfig& cfg) {
  const Mesh mesh = cfg.build();
  const LoadProgram load = cfg.load_program(mesh);
  const double target = cfg.calibration.yield_fraction;
  MaterialParams p = cfg.material;

  double peak_load = 0.0;
  for (double t : cfg.grid(0.0).instants) peak_load = std::max(peak_load, load.profile(t));
  if (peak_load == 0.0) throw ValidationError("calibration: load profile never leaves 0");
  LoadProgram unit = load;
  unit.profile = Profile{{{0.0, 1.0}}};
  const LinearSolver unit_solver(mesh, unit, p, cfg.tolerances);
  const auto u_unit = unit_solver.solve_u(std::vector<Mat2>(mesh.num_elements(), Mat2::Zero()), 0.0);
  double hi = 0.0;
  for (int e = 0; e < mesh.num_elements(); ++e)
    hi = std::max(hi, 2.0 * p.mu * peak_load * dev_part<2>(element_grad(mesh, u_unit, e)).norm());
  if (!(hi > 0.0)) throw ValidationError("calibration: load produces no deviatoric strain");
  hi *= 1.0 + 1e-9;

  double lo = 0.0, frac_lo = 1.0;
  for (int it = 0; it < 40; ++it) {
    const double mid = 0.5 * (lo + hi);
    p.sigma_y = mid;
    const double frac = yield_fraction_at_peak(cfg, mesh, load, p);
    if (frac >= target) {
      lo = mid;
      frac_lo = frac;
    } else {
      hi = mid;
    }
  }
  if (lo == 0.0) throw ValidationError("calibration: no positive yield stress reaches the target fraction");
  return Calibration{lo, frac_lo};
}

/// Material parameters after optional sigma_y calibration.
inline MaterialParams resolve_material(const RunConfig& cfg, Calibration* out = nullptr) {
  MaterialParams p = cfg.material;
  if (cfg.calibration.calibrate_sigma_y) {
    const Calibration c = calibrate_sigma_y(cfg);
    p.sigma_y = c.sigma_y;
    if (out) *out = c;
  }
  return p;
}

struct EpsFailure {
  double eps = 0.0;
  std::string kind;
  std::string message;
};

struct SweepReport {
  std::vector<double> eps_ladder;
  MaterialParams material;
  Calibration calibration;
  std::vector<MetricRow> rows;
  std::vector<EpsFailure> failures;
  // per completed eps, in ladder order
  std::vector<double> completed_eps;
  std::map<std::string, std::vector<double>> sup_metrics;
  std::map<std::string, double> orders;  // NaN when the fit was degenerate
  std::vector<double> max_coercivity_ratio;
  std::vector<bool> stability_ok;
  std::vector<bool> balance_ok;

  std::vector<MetricRow> rows_for(double eps) const {
    std::vector<MetricRow> out;
    for (const auto& r : rows)
      if (r.eps == eps) out.push_back(r);
    return out;
  }
};

inline const std::vector<std::string>& metric_names() {
  static const std::vector<std::string> names{"err_u_H1", "err_z_L2", "A_field_err", "energy_gap", "diss_gap"};
  return names;
}

inline double metric_value(const MetricRow& r, const std::string& name) {
  if (name == "err_u_H1") return r.err_u_H1;
  if (name == "err_z_L2") return r.err_z_L2;
  if (name == "A_field_err") return r.A_field_err;
  if (name == "energy_gap") return r.energy_gap;
  if (name == "diss_gap") return r.diss_gap;
  throw ArgumentError("unknown metric " + name);
}

using SweepProgress = std::function<void(const std::string&)>;

inline SweepReport run_sweep(const RunConfig& cfg, const SweepProgress& progress = {}) {
  cfg.validate();
  auto say = [&](const std::string& s) {
    if (progress) progress(s);
  };
  SweepReport rep;
  rep.eps_ladder = cfg.eps_ladder;
  rep.material = cfg.material;
  if (cfg.calibration.calibrate_sigma_y) {
    rep.calibration = calibrate_sigma_y(cfg);
    rep.material.sigma_y = rep.calibration.sigma_y;
    say("calibrated sigma_y = " + fmt_double(rep.calibration.sigma_y) +
        " (yield fraction " + fmt_double(rep.calibration.yield_fraction) + ")");
  }
  const Mesh mesh = cfg.build();
  const LoadProgram load = cfg.load_program(mesh);
  const LinearSolver linear(mesh, load, rep.material, cfg.tolerances);
  const Trajectory ref = linear.solve_trajectory0(cfg.grid(0.0));
  say("linearized reference done");

  for (double eps : cfg.eps_ladder) {
    try {
      const TimeGrid grid = cfg.grid(eps);
      FiniteSolver solver(mesh, load, rep.material, eps, cfg.tolerances);
      const Trajectory traj = solver.solve_trajectory(grid);
      auto rows = compute_errors(traj, ref, eps, mesh, rep.material);
      const DiagnosticsReport diag = diagnostics(traj, mesh, load, rep.material, grid.alpha);
      for (std::size_t i = 0; i < rows.size(); ++i) {
        rows[i].stability_residual = diag.rows[i].stability_residual;
        rows[i].balance_gap = diag.rows[i].balance_gap;
      }
      rep.completed_eps.push_back(eps);
      for (const auto& name : metric_names()) {
        double sup = 0.0;
        for (const auto& r : rows) sup = std::max(sup, metric_value(r, name));
        rep.sup_metrics[name].push_back(sup);
      }
      rep.max_coercivity_ratio.push_back(diag.max_coercivity_ratio);
      rep.stability_ok.push_back(diag.stability_ok);
      rep.balance_ok.push_back(diag.balance_ok);
      rep.rows.insert(rep.rows.end(), rows.begin(), rows.end());
      say("eps = " + fmt_double(eps) + " done");
    } catch (const Error& e) {
      rep.failures.push_back(EpsFailure{eps, e.kind(), e.what()});
      say("eps = " + fmt_double(eps) + " failed: " + e.what());
    }
  }
  for (const auto& name : metric_names()) {
    if (rep.completed_eps.size() < 3) break;
    try {
      rep.orders[name] = fit_order(rep.completed_eps, rep.sup_metrics[name]);
    } catch (const DegenerateFit&) {
      rep.orders[name] = std::numeric_limits<double>::quiet_NaN();
    }
  }
  return rep;
}

inline void write_csv(const SweepReport& rep, std::ostream& os) {
  os << kCsvHeader << '\n';
  for (const auto& r : rep.rows) {
    os << fmt_double(r.eps) << ',' << fmt_double(r.t) << ',' << fmt_double(r.err_u_H1) << ','
       << fmt_double(r.err_z_L2) << ',' << fmt_double(r.A_field_err) << ',' << fmt_double(r.energy_gap) << ','
       << fmt_double(r.diss_gap) << ',' << fmt_double(r.stability_residual) << ',' << fmt_double(r.balance_gap)
       << '\n';
  }
}

}  // namespace gammaplast
