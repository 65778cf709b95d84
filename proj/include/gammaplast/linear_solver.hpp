#pragma once

/// Incremental solver for the linearized system (E_0, D_0). Each step is a
/// uniformly convex problem, solved by alternating a displacement solve with
/// the stiffness factored once, and a closed-form von Mises return map per
/// element.

#include <cmath>
#include <sstream>
#include <vector>

#include <Eigen/Dense>

#include "gammaplast/errors.hpp"
#include "gammaplast/fem.hpp"
#include "gammaplast/material.hpp"
#include "gammaplast/trajectory.hpp"

namespace gammaplast {

struct ReturnMapInputs {
  Mat2 e_dev;   // deviatoric part of sym grad u
  Mat2 z_prev;  // deviatoric
  double mu = 1.0;
  double h = 0.5;
  double sigma_y = 0.1;
};

/// argmin over deviatoric z of mu |e_dev - z|^2 + h |z|^2 + sigma_y |z - z_prev|.
///
/// With trial force T = 2 mu (e_dev - z_prev) - 2 h z_prev the minimizer is
/// z_prev if |T| <= sigma_y, and z_prev + (|T| - sigma_y) / (2 (mu + h)) T/|T|
/// otherwise.
inline Mat2 return_map(const ReturnMapInputs& in) {
  if (!is_dev_sym<2>(in.e_dev, kDevTol) || !is_dev_sym<2>(in.z_prev, kDevTol))
    throw InvariantError("return_map: e_dev and z_prev must be symmetric and trace-free");
  const Mat2 trial = 2.0 * in.mu * (in.e_dev - in.z_prev) - 2.0 * in.h * in.z_prev;
  const double force = trial.norm();
  if (force <= in.sigma_y) return in.z_prev;
  const double gamma = (force - in.sigma_y) / (2.0 * (in.mu + in.h));
  return in.z_prev + gamma / force * trial;
}

struct Step0Result {
  StateField state;
  double functional = 0.0;  // E_0(t^i) + D_0(z^{i-1}, z^i)
  int sweeps = 0;
};

class LinearSolver {
 public:
  LinearSolver(const Mesh& mesh, const LoadProgram& load, const MaterialParams& params, SolverTol tol = {})
      : mesh_(mesh), load_(load), params_(params), tol_(tol) {
    params_.validate();
    tol_.validate();
    assemble();
  }

  /// Displacement minimizing E_0(t, ., z).
  std::vector<Vec2> solve_u(const std::vector<Mat2>& z, double t) const {
    Eigen::VectorXd rhs = load_.profile(t) * gather(mesh_, load_.spatial);
    for (int e = 0; e < mesh_.num_elements(); ++e) {
      const Mat2 stress = 2.0 * params_.mu * sym_part<2>(z[e]) + params_.lambda * z[e].trace() * Mat2::Identity();
      const auto& tri = mesh_.triangles[e];
      for (int a = 0; a < 3; ++a) {
        const int d = mesh_.dof_of_node[tri[a]];
        if (d >= 0) rhs.segment<2>(d) += mesh_.areas[e] * stress * mesh_.shape_grads[e][a];
      }
    }
    return scatter(mesh_, factor_.solve(rhs));
  }

  double functional(const StateField& s, const std::vector<Mat2>& z_prev, double t) const {
    double diss = 0.0;
    for (int e = 0; e < mesh_.num_elements(); ++e)
      diss += mesh_.areas[e] * r_dev<2>(s.z[e] - z_prev[e], params_);
    return energy_linear(s, t, mesh_, load_, params_) + diss;
  }

  Mat2 local_update(const std::vector<Vec2>& u, const Mat2& z_prev, int e) const {
    return return_map(ReturnMapInputs{dev_part<2>(element_grad(mesh_, u, e)), z_prev, params_.mu, params_.h,
                                      params_.sigma_y});
  }

  /// Alternates displacement solves and return maps from `start` (defaults to
  /// `prev`) until the functional and the plastic field settle.
  Step0Result solve_step0(const StateField& prev, double t_i, const StateField* start = nullptr) const {
    for (int e = 0; e < mesh_.num_elements(); ++e)
      if (!is_dev_sym<2>(prev.z[e], kDevTol)) throw InvariantError("solve_step0: previous z is not deviatoric");
    Step0Result res;
    res.state = start ? *start : prev;
    double value = functional(res.state, prev.z, t_i);
    for (int sweep = 1;; ++sweep) {
      if (sweep > tol_.max_convex_sweeps) {
        std::ostringstream os;
        os << "solve_step0: no convergence within " << tol_.max_convex_sweeps << " sweeps";
        throw NonConvergence(os.str());
      }
      res.state.u = solve_u(res.state.z, t_i);
      double change = 0.0;
      for (int e = 0; e < mesh_.num_elements(); ++e) {
        const Mat2 z_new = local_update(res.state.u, prev.z[e], e);
        change = std::max(change, (z_new - res.state.z[e]).norm());
        res.state.z[e] = z_new;
      }
      const double next = functional(res.state, prev.z, t_i);
      const double decrease = value - next;
      value = next;
      res.sweeps = sweep;
      if (decrease <= tol_.convex_abs && change <= tol_.convex_state_tol) break;
    }
    res.state.u = solve_u(res.state.z, t_i);
    res.functional = functional(res.state, prev.z, t_i);
    return res;
  }

  /// First-order optimality defect of `s` as a minimizer of the step functional:
  /// the max of the displacement residual norm and, per element, either the
  /// excess of the trial force over sigma_y (elastic elements) or the norm of
  /// the smooth stationarity residual (plastic elements).
  double optimality_residual(const StateField& s, const StateField& prev, double t_i) const {
    Eigen::VectorXd r = stiffness_ * gather(mesh_, s.u) - load_.profile(t_i) * gather(mesh_, load_.spatial);
    for (int e = 0; e < mesh_.num_elements(); ++e) {
      const Mat2 stress =
          2.0 * params_.mu * sym_part<2>(s.z[e]) + params_.lambda * s.z[e].trace() * Mat2::Identity();
      const auto& tri = mesh_.triangles[e];
      for (int a = 0; a < 3; ++a) {
        const int d = mesh_.dof_of_node[tri[a]];
        if (d >= 0) r.segment<2>(d) -= mesh_.areas[e] * stress * mesh_.shape_grads[e][a];
      }
    }
    double worst = r.norm();
    for (int e = 0; e < mesh_.num_elements(); ++e) {
      const Mat2 e_dev = dev_part<2>(element_grad(mesh_, s.u, e));
      const Mat2 dz = s.z[e] - prev.z[e];
      // gradient of mu |e_dev - z|^2 + h |z|^2 at z
      const Mat2 smooth = -2.0 * params_.mu * (e_dev - s.z[e]) + 2.0 * params_.h * s.z[e];
      if (dz.norm() <= 1e-14) {
        worst = std::max(worst, smooth.norm() - params_.sigma_y);
      } else {
        worst = std::max(worst, (smooth + params_.sigma_y * dz / dz.norm()).norm());
      }
    }
    return worst;
  }

  /// Full trajectory from (0, 0); dissipation increments are
  /// sum_e area sigma_y |z^i_e - z^{i-1}_e|.
  template <typename OnStep>
  Trajectory solve_trajectory0(const TimeGrid& grid, OnStep&& on_step) const {
    grid.validate();
    if (load_.profile(grid.instants.front()) != 0.0)
      throw ValidationError("linear solver: initial data (0, 0) requires profile(0) = 0");
    Trajectory traj;
    traj.eps = 0.0;
    traj.instants = grid.instants;
    StateField state = StateField::zero(mesh_);
    traj.states.push_back(state);
    traj.diss_increments.push_back(0.0);
    traj.energies.push_back(energy_linear(state, grid.instants[0], mesh_, load_, params_));
    traj.work.push_back(0.0);
    traj.newton_iterations.push_back(0);
    traj.sweeps.push_back(0);
    for (int i = 1; i <= grid.steps(); ++i) {
      const double t0 = grid.instants[i - 1];
      const double t1 = grid.instants[i];
      Step0Result step = solve_step0(state, t1);
      double diss = 0.0;
      for (int e = 0; e < mesh_.num_elements(); ++e)
        diss += mesh_.areas[e] * r_dev<2>(step.state.z[e] - state.z[e], params_);
      traj.diss_increments.push_back(diss);
      state = std::move(step.state);
      traj.states.push_back(state);
      traj.energies.push_back(energy_linear(state, t1, mesh_, load_, params_));
      traj.work.push_back((load_.profile(t1) - load_.profile(t0)) * load_.pairing(state.u));
      traj.newton_iterations.push_back(0);
      traj.sweeps.push_back(step.sweeps);
      on_step(traj, i);
    }
    return traj;
  }

  Trajectory solve_trajectory0(const TimeGrid& grid) const {
    return solve_trajectory0(grid, [](const Trajectory&, int) {});
  }

 private:
  void assemble() {
    const int n = mesh_.num_free_dofs;
    stiffness_ = Eigen::MatrixXd::Zero(n, n);
    for (int e = 0; e < mesh_.num_elements(); ++e) {
      const auto& tri = mesh_.triangles[e];
      for (int b = 0; b < 3; ++b) {
        const int db = mesh_.dof_of_node[tri[b]];
        if (db < 0) continue;
        for (int j = 0; j < 2; ++j) {
          Mat2 grad = Mat2::Zero();
          grad.row(j) = mesh_.shape_grads[e][b].transpose();
          const Mat2 stress = 2.0 * params_.mu * sym_part<2>(grad) + params_.lambda * grad.trace() * Mat2::Identity();
          for (int a = 0; a < 3; ++a) {
            const int da = mesh_.dof_of_node[tri[a]];
            if (da < 0) continue;
            stiffness_.block<2, 1>(da, db + j) += mesh_.areas[e] * stress * mesh_.shape_grads[e][a];
          }
        }
      }
    }
    factor_.compute(stiffness_);
    if (factor_.info() != Eigen::Success) throw NonConvergence("linear solver: stiffness is not positive definite");
  }

  const Mesh& mesh_;
  const LoadProgram& load_;
  MaterialParams params_;
  SolverTol tol_;
  Eigen::MatrixXd stiffness_;
  Eigen::LLT<Eigen::MatrixXd> factor_;
};

}  // namespace gammaplast
