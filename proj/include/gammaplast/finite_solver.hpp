#pragma once

/// Time-incremental solver for the rescaled finite-strain system. Each step
/// approximately minimizes E_eps(t^i, u, z) + D_eps(z^{i-1}, z) by
/// alternating a Newton solve in u with element-local plastic updates
///   z^ = (exp(zeta)(I + eps z^{i-1}) - I) / eps,  zeta deviatoric,
/// for which the exponential-path dissipation is exactly sigma_y |zeta| / eps.

#include <cmath>
#include <numbers>
#include <sstream>
#include <vector>

#include <boost/math/tools/minima.hpp>
#include <Eigen/Dense>

#include "gammaplast/errors.hpp"
#include "gammaplast/fem.hpp"
#include "gammaplast/material.hpp"
#include "gammaplast/tensor.hpp"
#include "gammaplast/trajectory.hpp"

namespace gammaplast {

// Brent's method cannot resolve a minimizer beyond ~sqrt(machine eps).
inline constexpr int kBrentBits = 32;

/// Result of one local plastic search: the increment generator and the value
/// of the element's incremental functional at it.
struct LocalUpdate {
  Mat2 zeta = Mat2::Zero();
  double value = 0.0;
};

struct StepResult {
  StateField state;
  std::vector<Mat2> zeta;     // per element, relative to the previous step
  double functional = 0.0;    // E_eps(t^i) + D_eps(z^{i-1}, z^i)
  double dissipation = 0.0;   // D_eps(z^{i-1}, z^i)
  int sweeps = 0;
  int newton_iterations = 0;
  std::vector<double> sweep_values;  // functional after every sweep
};

class FiniteSolver {
 public:
  FiniteSolver(const Mesh& mesh, const LoadProgram& load, const MaterialParams& params, double eps,
               SolverTol tol = {})
      : mesh_(mesh), load_(load), params_(params), eps_(eps), tol_(tol) {
    if (!(eps > 0.0)) throw ValidationError("finite solver: eps must be positive");
    params_.validate();
    tol_.validate();
  }

  double eps() const { return eps_; }
  const SolverTol& tol() const { return tol_; }

  /// Newton with backtracking for the displacement block at fixed z.
  std::vector<Vec2> minimize_u(const std::vector<Mat2>& z, double t, std::vector<Vec2> u0,
                               int* iterations = nullptr) const {
    StateField s{std::move(u0), z};
    double energy = energy_finite(s, t, eps_, mesh_, load_, params_);
    if (!std::isfinite(energy)) throw BarrierError("minimize_u: initial displacement has infinite energy");
    const int n = mesh_.num_free_dofs;
    for (int it = 0; it <= tol_.newton_max_iter; ++it) {
      const Eigen::VectorXd r = gather(mesh_, residual_u_finite(s, t, eps_, mesh_, load_, params_));
      const double rnorm = r.norm();
      if (rnorm <= tol_.newton_abs || n == 0) {
        if (iterations) *iterations += it;
        return s.u;
      }
      if (it == tol_.newton_max_iter) break;

      Eigen::MatrixXd hess = hessian_u_finite(s, eps_, mesh_, params_);
      Eigen::VectorXd dx;
      double shift = 0.0;
      for (int attempt = 0; attempt < 30; ++attempt) {
        Eigen::LLT<Eigen::MatrixXd> llt(hess + shift * Eigen::MatrixXd::Identity(n, n));
        if (llt.info() == Eigen::Success) {
          dx = -llt.solve(r);
          break;
        }
        shift = shift == 0.0 ? 1e-8 * hess.diagonal().cwiseAbs().maxCoeff() : 10.0 * shift;
      }
      if (dx.size() != n) throw NonConvergence("minimize_u: Hessian regularization failed");

      const Eigen::VectorXd x = gather(mesh_, s.u);
      const double slope = r.dot(dx);
      bool accepted = false;
      bool any_finite = false;
      double step = 1.0;
      for (int ls = 0; ls < 40; ++ls, step *= 0.5) {
        StateField trial{scatter(mesh_, x + step * dx), z};
        const double e_trial = energy_finite(trial, t, eps_, mesh_, load_, params_);
        if (!std::isfinite(e_trial)) continue;
        any_finite = true;
        bool ok = e_trial <= energy + 1e-4 * step * slope;
        if (!ok && std::abs(e_trial - energy) <= 1e-13 * (1.0 + std::abs(energy))) {
          // decrease below round-off: accept when the residual still drops
          const double r_trial =
              gather(mesh_, residual_u_finite(trial, t, eps_, mesh_, load_, params_)).norm();
          ok = r_trial < rnorm;
        }
        if (ok) {
          s = std::move(trial);
          energy = e_trial;
          accepted = true;
          break;
        }
      }
      if (!accepted) {
        if (!any_finite) throw BarrierError("minimize_u: line search cannot keep det F_el > 0");
        throw NonConvergence("minimize_u: line search failed to decrease the energy");
      }
    }
    std::ostringstream os;
    os << "minimize_u: no convergence within " << tol_.newton_max_iter << " Newton iterations";
    throw NonConvergence(os.str());
  }

  /// Element incremental functional at generator zeta:
  ///   area eps^-2 [W_el((I+eps grad u) P^-1) + W_h(P^)] + area sigma_y |zeta| / eps,
  /// with P^ = exp(zeta)(I + eps z_prev).
  double local_functional(const Mat2& grad_u, const Mat2& z_prev, double area, const Mat2& zeta) const {
    const Mat2 id = Mat2::Identity();
    const Mat2 pl_hat = mat_exp<2>(zeta) * (id + eps_ * z_prev);
    const double wh = w_h<2>(pl_hat, params_);
    if (!std::isfinite(wh)) return kInf;
    const double we = w_el<2>((id + eps_ * grad_u) * pl_hat.inverse(), params_);
    if (!std::isfinite(we)) return kInf;
    return area * ((we + wh) / (eps_ * eps_) + params_.sigma_y * zeta.norm() / eps_);
  }

  /// Local plastic search over deviatoric zeta in polar form
  /// zeta = r (cos(theta) E1 + sin(theta) E2). The yield test at zeta = 0 uses
  /// the exact one-sided slope; otherwise theta is searched on a half circle
  /// around the steepest-descent direction, each theta carrying a 1-d search
  /// in r >= 0 that keeps exp(zeta) P in K. Candidates zeta = `current` and
  /// zeta = 0 are compared last.
  LocalUpdate update_z_local(const Mat2& grad_u, const Mat2& z_prev, double area,
                             const Mat2& current = Mat2::Zero()) const {
    const Mat2 id = Mat2::Identity();
    const auto basis = dev_sym_basis<2>();
    const Mat2 pl = id + eps_ * z_prev;
    const Mat2 f_trial = (id + eps_ * grad_u) * pl.inverse();

    // slope of the smooth part at zeta = 0 in the basis directions
    Vec2 slope;
    const Mat2 stress = w_el_grad<2>(f_trial, params_);
    for (int k = 0; k < 2; ++k) {
      const double d_el = -(stress.cwiseProduct(f_trial * basis[k])).sum();
      const double d_h = 2.0 * params_.h * ((pl - id).cwiseProduct(basis[k] * pl)).sum();
      slope(k) = area * (d_el + d_h) / (eps_ * eps_);
    }
    const double kink = area * params_.sigma_y / eps_;

    LocalUpdate zero{Mat2::Zero(), local_functional(grad_u, z_prev, area, Mat2::Zero())};
    LocalUpdate best{current, local_functional(grad_u, z_prev, area, current)};

    if (slope.norm() > kink) {
      const double theta0 = std::atan2(-slope(1), -slope(0));
      auto dir = [&](double theta) { return Mat2(std::cos(theta) * basis[0] + std::sin(theta) * basis[1]); };

      // 1-d search along one direction; returns (r, value)
      auto line = [&](double theta) -> std::pair<double, double> {
        const Mat2 n = dir(theta);
        auto g = [&](double r) { return local_functional(grad_u, z_prev, area, r * n); };
        // bracket the feasible segment of exp(r n) P in K
        double r_ok = 0.0;
        double r_hi = std::max(1e-6, 0.5 * eps_);
        bool hit_boundary = false;
        for (int k = 0; k < 60; ++k) {
          if (std::isfinite(g(r_hi))) {
            r_ok = r_hi;
            if (r_hi > 4.0) break;
            r_hi *= 2.0;
          } else {
            hit_boundary = true;
            break;
          }
        }
        if (hit_boundary) {
          for (int k = 0; k < 60 && r_hi - r_ok > tol_.zeta_tol; ++k) {
            const double mid = 0.5 * (r_ok + r_hi);
            (std::isfinite(g(mid)) ? r_ok : r_hi) = mid;
          }
        }
        if (r_ok <= 0.0) return {0.0, g(0.0)};
        boost::uintmax_t max_iter = 200;
        const auto [r, v] = boost::math::tools::brent_find_minima(g, 0.0, r_ok, kBrentBits, max_iter);
        return {r, v};
      };

      boost::uintmax_t max_iter = 200;
      const auto [theta, value] = boost::math::tools::brent_find_minima(
          [&](double th) { return line(th).second; }, theta0 - 0.5 * std::numbers::pi,
          theta0 + 0.5 * std::numbers::pi, kBrentBits, max_iter);
      const auto [r, v] = line(theta);
      (void)value;
      if (v < best.value) best = LocalUpdate{r * dir(theta), v};
    }

    // prefer no plastic flow on near-ties
    if (zero.value <= best.value + 1e-12) return zero;
    return best;
  }

  /// One step of the approximate incremental problem at t_i starting from
  /// `prev` (the state at t_{i-1}).
  StepResult solve_step(const StateField& prev, double t_prev, double t_i) const {
    const double tolerance = (t_i - t_prev) * alpha_;
    const int ne = mesh_.num_elements();
    StepResult res;
    res.state = prev;
    res.zeta.assign(ne, Mat2::Zero());

    auto functional = [&](const StateField& s, const std::vector<Mat2>& zeta) {
      double diss = 0.0;
      for (int e = 0; e < ne; ++e) diss += mesh_.areas[e] * params_.sigma_y * zeta[e].norm() / eps_;
      return energy_finite(s, t_i, eps_, mesh_, load_, params_) + diss;
    };

    double value = functional(res.state, res.zeta);
    if (!std::isfinite(value)) throw BarrierError("solve_step: previous state has infinite energy");
    const Mat2 id = Mat2::Identity();
    for (int sweep = 1;; ++sweep) {
      if (sweep > tol_.max_sweeps) {
        std::ostringstream os;
        os << "solve_step: alternating scheme did not settle within " << tol_.max_sweeps << " sweeps";
        throw NonConvergence(os.str());
      }
      res.state.u = minimize_u(res.state.z, t_i, res.state.u, &res.newton_iterations);
      for (int e = 0; e < ne; ++e) {
        const LocalUpdate up =
            update_z_local(element_grad(mesh_, res.state.u, e), prev.z[e], mesh_.areas[e], res.zeta[e]);
        res.zeta[e] = up.zeta;
        res.state.z[e] = (mat_exp<2>(up.zeta) * (id + eps_ * prev.z[e]) - id) / eps_;
      }
      const double next = functional(res.state, res.zeta);
      res.sweep_values.push_back(next);
      res.sweeps = sweep;
      const double decrease = value - next;
      if (decrease < -1e-12 * (1.0 + std::abs(value))) {
        std::ostringstream os;
        os << "solve_step: sweep " << sweep << " increased the incremental functional by " << -decrease;
        throw InvariantError(os.str());
      }
      value = next;
      if (decrease < tolerance || decrease <= 1e-15 * (1.0 + std::abs(value))) break;
    }
    // final displacement relaxation at the accepted plastic field
    res.state.u = minimize_u(res.state.z, t_i, res.state.u, &res.newton_iterations);
    res.dissipation = 0.0;
    for (int e = 0; e < ne; ++e) res.dissipation += mesh_.areas[e] * params_.sigma_y * res.zeta[e].norm() / eps_;
    res.functional = functional(res.state, res.zeta);
    return res;
  }

  void set_alpha(double alpha) { alpha_ = alpha; }

  /// D_eps(z1, z2) = sum_e area (1/eps) D~(I + eps z1_e, I + eps z2_e).
  double dissipation(const std::vector<Mat2>& z1, const std::vector<Mat2>& z2) const {
    const Mat2 id = Mat2::Identity();
    double acc = 0.0;
    for (int e = 0; e < mesh_.num_elements(); ++e) {
      const double d = diss_distance<2>(id + eps_ * z1[e], id + eps_ * z2[e], params_);
      if (!std::isfinite(d)) return kInf;
      acc += mesh_.areas[e] * d / eps_;
    }
    return acc;
  }

  /// Solves every step of `grid` from the initial state (0, 0).
  template <typename OnStep>
  Trajectory solve_trajectory(const TimeGrid& grid, OnStep&& on_step) {
    grid.validate();
    if (load_.profile(grid.instants.front()) != 0.0)
      throw ValidationError("finite solver: initial data (0, 0) requires profile(0) = 0");
    alpha_ = grid.alpha;
    Trajectory traj;
    traj.eps = eps_;
    traj.instants = grid.instants;
    StateField state = StateField::zero(mesh_);
    traj.states.push_back(state);
    traj.diss_increments.push_back(0.0);
    traj.energies.push_back(energy_finite(state, grid.instants[0], eps_, mesh_, load_, params_));
    traj.work.push_back(0.0);
    traj.newton_iterations.push_back(0);
    traj.sweeps.push_back(0);
    for (int i = 1; i <= grid.steps(); ++i) {
      const double t0 = grid.instants[i - 1];
      const double t1 = grid.instants[i];
      StepResult step = solve_step(state, t0, t1);
      traj.diss_increments.push_back(dissipation(state.z, step.state.z));
      state = std::move(step.state);
      traj.states.push_back(state);
      traj.energies.push_back(energy_finite(state, t1, eps_, mesh_, load_, params_));
      traj.work.push_back((load_.profile(t1) - load_.profile(t0)) * load_.pairing(state.u));
      traj.newton_iterations.push_back(step.newton_iterations);
      traj.sweeps.push_back(step.sweeps);
      on_step(traj, i);
    }
    return traj;
  }

  Trajectory solve_trajectory(const TimeGrid& grid) {
    return solve_trajectory(grid, [](const Trajectory&, int) {});
  }

 private:
  const Mesh& mesh_;
  const LoadProgram& load_;
  MaterialParams params_;
  double eps_;
  SolverTol tol_;
  double alpha_ = 0.0;
};

}  // namespace gammaplast
