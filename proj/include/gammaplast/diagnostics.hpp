#pragma once

/// A-posteriori checks of the energetic-solution conditions along a computed
/// trajectory: stability against a fixed dictionary of competitors, the
/// discrete energy balance with its two-sided bounds, and the coercivity ratio.

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "gammaplast/fem.hpp"
#include "gammaplast/material.hpp"
#include "gammaplast/tensor.hpp"
#include "gammaplast/trajectory.hpp"

namespace gammaplast {

/// One competitor: (u + du, z (+) dz), where (+) is additive for the
/// linearized model and z^ = (exp(eps dz)(I + eps z) - I)/eps otherwise.
struct Perturbation {
  std::vector<Vec2> du;
  std::vector<Mat2> dz;
};

/// Smooth bumps exp(-|x - c|^2 / r^2) at six interior centres plus a field
/// growing linearly away from Gamma; each shape drives displacement
/// perturbations along x and y, deviatoric plastic perturbations along both
/// basis directions, and coupled pairs, at amplitudes +-1e-2 and +-1e-3.
inline std::vector<Perturbation> stability_dictionary(const Mesh& mesh) {
  double lx = 0.0, ly = 0.0;
  for (const auto& x : mesh.nodes) {
    lx = std::max(lx, x.x());
    ly = std::max(ly, x.y());
  }
  const double radius = 0.3 * std::min(lx, ly);
  std::vector<std::function<double(const Vec2&)>> shapes;
  for (double cx : {0.25, 0.5, 0.75})
    for (double cy : {0.25, 0.75}) {
      const Vec2 c(cx * lx, cy * ly);
      shapes.emplace_back([c, radius](const Vec2& x) { return std::exp(-(x - c).squaredNorm() / (radius * radius)); });
    }
  shapes.emplace_back([lx](const Vec2& x) { return x.x() / lx; });

  const auto basis = dev_sym_basis<2>();
  const Vec2 dirs[2] = {Vec2(1.0, 0.0), Vec2(0.0, 1.0)};
  std::vector<Perturbation> out;
  auto make = [&](const std::function<double(const Vec2&)>& shape, double su, const Vec2& du_dir, double sz,
                  const Mat2& dz_dir) {
    Perturbation p;
    p.du.assign(mesh.nodes.size(), Vec2::Zero());
    p.dz.assign(mesh.triangles.size(), Mat2::Zero());
    if (su != 0.0)
      for (int i = 0; i < mesh.num_nodes(); ++i)
        if (!mesh.on_gamma(i)) p.du[i] = su * shape(mesh.nodes[i]) * du_dir;
    if (sz != 0.0)
      for (int e = 0; e < mesh.num_elements(); ++e) {
        const auto& tri = mesh.triangles[e];
        const Vec2 centroid = (mesh.nodes[tri[0]] + mesh.nodes[tri[1]] + mesh.nodes[tri[2]]) / 3.0;
        p.dz[e] = sz * shape(centroid) * dz_dir;
      }
    out.push_back(std::move(p));
  };
  for (const auto& shape : shapes) {
    for (double s : {1e-2, -1e-2, 1e-3, -1e-3}) {
      for (const auto& d : dirs) make(shape, s, d, 0.0, Mat2::Zero());
      for (const auto& b : basis) make(shape, 0.0, dirs[0], s, b);
    }
    for (double s : {1e-2, -1e-2})
      for (const auto& d : dirs)
        for (const auto& b : basis) make(shape, s, d, s, b);
  }
  return out;
}

struct InstantDiagnostics {
  double t = 0.0;
  double stability_residual = 0.0;  // min over the dictionary; >= 0 when stable
  double balance_gap = 0.0;
  double balance_upper = 0.0;       // a-posteriori upper estimate of the gap
  double coercivity_ratio = 0.0;
};

struct DiagnosticsReport {
  std::vector<InstantDiagnostics> rows;
  double worst_stability = 0.0;
  double min_balance_gap = 0.0;
  double max_coercivity_ratio = 0.0;
  bool stability_ok = true;
  bool balance_ok = true;
};

struct DiagnosticsTol {
  double stability = 1e-6;
  double balance_lower = 1e-8;
};

namespace detail {

inline double model_energy(const Trajectory& traj, const StateField& s, double t, const Mesh& mesh,
                           const LoadProgram& load, const MaterialParams& p) {
  return traj.eps > 0.0 ? energy_finite(s, t, traj.eps, mesh, load, p) : energy_linear(s, t, mesh, load, p);
}

inline double model_stored(const Trajectory& traj, const StateField& s, const Mesh& mesh, const MaterialParams& p) {
  return traj.eps > 0.0 ? stored_energy_finite(s, traj.eps, mesh, p) : stored_energy_linear(s, mesh, p);
}

}  // namespace detail

/// Dissipation functional of the trajectory's model between two plastic fields.
inline double model_dissipation(double eps, const std::vector<Mat2>& z1, const std::vector<Mat2>& z2,
                                const Mesh& mesh, const MaterialParams& p) {
  const Mat2 id = Mat2::Identity();
  double acc = 0.0;
  for (int e = 0; e < mesh.num_elements(); ++e) {
    const double d = eps > 0.0 ? diss_distance<2>(id + eps * z1[e], id + eps * z2[e], p) / eps
                               : r_dev<2>(z2[e] - z1[e], p);
    if (!std::isfinite(d)) return kInf;
    acc += mesh.areas[e] * d;
  }
  return acc;
}

/// min over the dictionary of E(t, u^, z^) + D(z, z^) - E(t, u, z).
inline double stability_residual(const Trajectory& traj, std::size_t i, const std::vector<Perturbation>& dict,
                                 const Mesh& mesh, const LoadProgram& load, const MaterialParams& p) {
  const StateField& s = traj.states[i];
  const double t = traj.instants[i];
  const double base = detail::model_energy(traj, s, t, mesh, load, p);
  const Mat2 id = Mat2::Identity();
  double worst = kInf;
  for (const auto& pert : dict) {
    StateField trial = s;
    for (int n = 0; n < mesh.num_nodes(); ++n) trial.u[n] += pert.du[n];
    for (int e = 0; e < mesh.num_elements(); ++e) {
      if (traj.eps > 0.0) {
        trial.z[e] = (mat_exp<2>(traj.eps * pert.dz[e]) * (id + traj.eps * s.z[e]) - id) / traj.eps;
      } else {
        trial.z[e] += pert.dz[e];
      }
    }
    const double e_trial = detail::model_energy(traj, trial, t, mesh, load, p);
    const double diss = model_dissipation(traj.eps, s.z, trial.z, mesh, p);
    const double res = e_trial + diss - base;
    if (std::isnan(res)) continue;
    worst = std::min(worst, res);
  }
  return worst;
}

/// Per-instant diagnostics. The balance gap uses the implicit work rule
///   gap(t^i) = E(t^i) + Diss[0, t^i] - E(0) + sum_k (p_k - p_{k-1}) <f, u^k>,
/// which incremental minimization bounds by
///   0 - (stability defects) <= gap <= sum_k [tau_k alpha + |p_k - p_{k-1}| |<f, u^k - u^{k-1}>|].
inline DiagnosticsReport diagnostics(const Trajectory& traj, const Mesh& mesh, const LoadProgram& load,
                                     const MaterialParams& p, double alpha, const DiagnosticsTol& tol = {}) {
  DiagnosticsReport rep;
  const auto dict = stability_dictionary(mesh);
  double diss = 0.0, work = 0.0, upper = 0.0;
  rep.worst_stability = kInf;
  rep.min_balance_gap = kInf;
  for (std::size_t i = 0; i < traj.size(); ++i) {
    InstantDiagnostics row;
    row.t = traj.instants[i];
    if (i > 0) {
      diss += traj.diss_increments[i];
      work += traj.work[i];
      const double dp = load.profile(traj.instants[i]) - load.profile(traj.instants[i - 1]);
      std::vector<Vec2> du(mesh.nodes.size());
      for (int n = 0; n < mesh.num_nodes(); ++n) du[n] = traj.states[i].u[n] - traj.states[i - 1].u[n];
      upper += (traj.instants[i] - traj.instants[i - 1]) * alpha + std::abs(dp) * std::abs(load.pairing(du));
    }
    row.balance_gap = traj.energies[i] + diss - traj.energies[0] + work;
    row.balance_upper = upper;
    row.stability_residual = stability_residual(traj, i, dict, mesh, load, p);

    const StateField& s = traj.states[i];
    double grad_sq = 0.0, z_sq = 0.0, ez_inf = 0.0;
    for (int e = 0; e < mesh.num_elements(); ++e) {
      grad_sq += mesh.areas[e] * element_grad(mesh, s.u, e).squaredNorm();
      z_sq += mesh.areas[e] * s.z[e].squaredNorm();
      ez_inf = std::max(ez_inf, traj.eps * s.z[e].norm());
    }
    row.coercivity_ratio = (grad_sq + z_sq + ez_inf * ez_inf) / (1.0 + detail::model_stored(traj, s, mesh, p));

    rep.worst_stability = std::min(rep.worst_stability, row.stability_residual);
    rep.min_balance_gap = std::min(rep.min_balance_gap, row.balance_gap);
    rep.max_coercivity_ratio = std::max(rep.max_coercivity_ratio, row.coercivity_ratio);
    if (row.stability_residual < -tol.stability) rep.stability_ok = false;
    if (row.balance_gap < -tol.balance_lower || row.balance_gap > row.balance_upper + tol.balance_lower)
      rep.balance_ok = false;
    rep.rows.push_back(row);
  }
  return rep;
}

/// sup over partitions drawn from the stored instants of
/// sum D(z(t_{k_j}), z(t_{k_{j-1}})) on [0, t^i]; exhaustive, so only for
/// short trajectories (i <= 16).
inline double dissipation_sup_over_partitions(const Trajectory& traj, std::size_t i, const Mesh& mesh,
                                              const MaterialParams& p) {
  if (i > 16) throw ArgumentError("dissipation_sup_over_partitions: at most 16 steps");
  double best = 0.0;
  const unsigned inner = i > 0 ? static_cast<unsigned>(i - 1) : 0u;
  for (unsigned mask = 0; mask < (1u << inner); ++mask) {
    std::size_t last = 0;
    double acc = 0.0;
    for (std::size_t k = 1; k <= i; ++k) {
      const bool keep = k == i || (mask >> (k - 1)) & 1u;
      if (!keep) continue;
      acc += model_dissipation(traj.eps, traj.states[last].z, traj.states[k].z, mesh, p);
      last = k;
    }
    best = std::max(best, acc);
  }
  return best;
}

}  // namespace gammaplast
