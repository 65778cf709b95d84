#pragma once

/// P1 displacements / P0 plastic strains on a structured triangulation of a
/// rectangle, clamped on the edge x = 0. Assembly of the rescaled
/// finite-strain energy, its linearized limit, and the displacement residual
/// and Hessian used by the Newton block.

#include <array>
#include <cmath>
#include <sstream>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "gammaplast/errors.hpp"
#include "gammaplast/material.hpp"
#include "gammaplast/tensor.hpp"

namespace gammaplast {

struct Mesh {
  double Lx = 0.0;
  double Ly = 0.0;
  int nx = 0;
  int ny = 0;
  std::vector<Vec2> nodes;
  std::vector<std::array<int, 3>> triangles;
  std::vector<int> gamma_nodes;

  // derived
  std::vector<double> areas;
  std::vector<std::array<Vec2, 3>> shape_grads;
  std::vector<int> dof_of_node;  // first free dof of a node, -1 on Gamma
  int num_free_dofs = 0;

  int num_nodes() const { return static_cast<int>(nodes.size()); }
  int num_elements() const { return static_cast<int>(triangles.size()); }
  bool on_gamma(int node) const { return dof_of_node[node] < 0; }

  /// Builds a mesh from explicit tables. Gamma is the set of nodes with x = 0.
  static Mesh from_tables(std::vector<Vec2> nodes, std::vector<std::array<int, 3>> triangles) {
    Mesh m;
    m.nodes = std::move(nodes);
    m.triangles = std::move(triangles);
    for (int i = 0; i < m.num_nodes(); ++i)
      if (m.nodes[i].x() == 0.0) m.gamma_nodes.push_back(i);
    m.finalize();
    return m;
  }

  void finalize() {
    if (gamma_nodes.empty()) throw ArgumentError("mesh: no nodes on the Dirichlet edge x = 0");
    areas.clear();
    shape_grads.clear();
    for (int e = 0; e < num_elements(); ++e) {
      const auto& tri = triangles[e];
      const Vec2 a = nodes[tri[0]], b = nodes[tri[1]], c = nodes[tri[2]];
      Mat2 jac;
      jac.col(0) = b - a;
      jac.col(1) = c - a;
      const double det = jac.determinant();
      if (!(det > 0.0)) {
        std::ostringstream os;
        os << "mesh: triangle " << e << " is not positively oriented";
        throw ArgumentError(os.str());
      }
      areas.push_back(0.5 * det);
      // gradients of the barycentric coordinates
      const Mat2 jinv_t = jac.inverse().transpose();
      const Vec2 g1 = jinv_t * Vec2(1.0, 0.0);
      const Vec2 g2 = jinv_t * Vec2(0.0, 1.0);
      shape_grads.push_back({-g1 - g2, g1, g2});
    }
    dof_of_node.assign(nodes.size(), 0);
    for (int g : gamma_nodes) dof_of_node[g] = -1;
    num_free_dofs = 0;
    for (auto& d : dof_of_node) {
      if (d < 0) continue;
      d = num_free_dofs;
      num_free_dofs += 2;
    }
  }

  double total_area() const {
    double a = 0.0;
    for (double x : areas) a += x;
    return a;
  }
};

/// Structured mesh of [0, Lx] x [0, Ly]: every grid cell split along its
/// (0,0)-(1,1) diagonal into two triangles.
inline Mesh build_mesh(double lx, double ly, int nx, int ny) {
  if (!(lx > 0.0) || !(ly > 0.0) || nx < 1 || ny < 1) {
    std::ostringstream os;
    os << "build_mesh: sizes must be positive (Lx=" << lx << ", Ly=" << ly << ", nx=" << nx
       << ", ny=" << ny << ")";
    throw ArgumentError(os.str());
  }
  std::vector<Vec2> nodes;
  nodes.reserve((nx + 1) * (ny + 1));
  for (int j = 0; j <= ny; ++j)
    for (int i = 0; i <= nx; ++i) nodes.emplace_back(lx * i / nx, ly * j / ny);
  auto id = [nx](int i, int j) { return j * (nx + 1) + i; };
  std::vector<std::array<int, 3>> tris;
  tris.reserve(2 * nx * ny);
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) {
      tris.push_back({id(i, j), id(i + 1, j), id(i + 1, j + 1)});
      tris.push_back({id(i, j), id(i + 1, j + 1), id(i, j + 1)});
    }
  }
  Mesh m = Mesh::from_tables(std::move(nodes), std::move(tris));
  m.Lx = lx;
  m.Ly = ly;
  m.nx = nx;
  m.ny = ny;
  return m;
}

struct StateField {
  std::vector<Vec2> u;  // per node, zero on Gamma
  std::vector<Mat2> z;  // per element

  static StateField zero(const Mesh& mesh) {
    return StateField{std::vector<Vec2>(mesh.nodes.size(), Vec2::Zero()),
                      std::vector<Mat2>(mesh.triangles.size(), Mat2::Zero())};
  }
};

/// Continuous piecewise-linear scalar function through sorted breakpoints,
/// constant beyond the last one.
struct Profile {
  std::vector<std::pair<double, double>> points;

  double operator()(double t) const {
    if (points.empty()) return 0.0;
    if (t <= points.front().first) return points.front().second;
    for (std::size_t k = 1; k < points.size(); ++k) {
      const auto [t0, v0] = points[k - 1];
      const auto [t1, v1] = points[k];
      if (t <= t1) return v0 + (v1 - v0) * (t - t0) / (t1 - t0);
    }
    return points.back().second;
  }

  void validate() const {
    if (points.empty()) throw ValidationError("load: profile needs at least one breakpoint");
    if (points.front().first != 0.0 || points.front().second != 0.0)
      throw ValidationError("load: profile must start at (0, 0)");
    for (std::size_t k = 1; k < points.size(); ++k)
      if (!(points[k].first > points[k - 1].first))
        throw ValidationError("load: profile breakpoints must be strictly increasing in t");
  }
};

/// <l(t), u> = profile(t) * (spatial . u)
struct LoadProgram {
  std::vector<Vec2> spatial;
  Profile profile;

  /// Lumped P1 load vector of a constant body force density f.
  static LoadProgram body_force(const Mesh& mesh, const Vec2& f, Profile profile) {
    LoadProgram l;
    l.spatial.assign(mesh.nodes.size(), Vec2::Zero());
    for (int e = 0; e < mesh.num_elements(); ++e)
      for (int a : mesh.triangles[e]) l.spatial[a] += mesh.areas[e] / 3.0 * f;
    for (int g : mesh.gamma_nodes) l.spatial[g].setZero();
    l.profile = std::move(profile);
    return l;
  }

  double pairing(const std::vector<Vec2>& u) const {
    double acc = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) acc += spatial[i].dot(u[i]);
    return acc;
  }
};

inline Mat2 element_grad(const Mesh& mesh, const std::vector<Vec2>& u, int e) {
  Mat2 g = Mat2::Zero();
  const auto& tri = mesh.triangles[e];
  for (int a = 0; a < 3; ++a) g += u[tri[a]] * mesh.shape_grads[e][a].transpose();
  return g;
}

/// Elastic strain (I + eps grad u)(I + eps z)^{-1}.
inline Mat2 elastic_strain(const Mat2& grad_u, const Mat2& z, double eps) {
  const Mat2 id = Mat2::Identity();
  return (id + eps * grad_u) * (id + eps * z).inverse();
}

/// area * eps^-2 [W_el(F_el) + W_h(I + eps z)] for one element.
inline double element_energy_finite(const Mat2& grad_u, const Mat2& z, double eps, double area,
                                    const MaterialParams& p) {
  const Mat2 pl = Mat2::Identity() + eps * z;
  const double wh = w_h<2>(pl, p);
  if (!std::isfinite(wh)) return kInf;
  const double we = w_el<2>((Mat2::Identity() + eps * grad_u) * pl.inverse(), p);
  if (!std::isfinite(we)) return kInf;
  return area * (we + wh) / (eps * eps);
}

/// area [|grad u^sym - z^sym|_C^2 + |z|_H^2] for one element.
inline double element_energy_linear(const Mat2& grad_u, const Mat2& z, double area,
                                    const MaterialParams& p) {
  return area * (quad_el<2>(grad_u - z, p) + quad_h<2>(z, p));
}

/// Stored energy W_eps(u, z); +inf when any element leaves GL+ or K.
inline double stored_energy_finite(const StateField& s, double eps, const Mesh& mesh,
                                   const MaterialParams& p) {
  double acc = 0.0;
  for (int e = 0; e < mesh.num_elements(); ++e) {
    const double we = element_energy_finite(element_grad(mesh, s.u, e), s.z[e], eps, mesh.areas[e], p);
    if (!std::isfinite(we)) return kInf;
    acc += we;
  }
  return acc;
}

inline double stored_energy_linear(const StateField& s, const Mesh& mesh, const MaterialParams& p) {
  double acc = 0.0;
  for (int e = 0; e < mesh.num_elements(); ++e)
    acc += element_energy_linear(element_grad(mesh, s.u, e), s.z[e], mesh.areas[e], p);
  return acc;
}

inline double energy_finite(const StateField& s, double t, double eps, const Mesh& mesh,
                            const LoadProgram& load, const MaterialParams& p) {
  if (!(eps > 0.0)) throw ArgumentError("energy_finite: eps must be positive");
  const double w = stored_energy_finite(s, eps, mesh, p);
  if (!std::isfinite(w)) return kInf;
  return w - load.profile(t) * load.pairing(s.u);
}

inline double energy_linear(const StateField& s, double t, const Mesh& mesh, const LoadProgram& load,
                            const MaterialParams& p) {
  return stored_energy_linear(s, mesh, p) - load.profile(t) * load.pairing(s.u);
}

/// Nodal field <-> vector of free dofs.
inline Eigen::VectorXd gather(const Mesh& mesh, const std::vector<Vec2>& u) {
  Eigen::VectorXd x(mesh.num_free_dofs);
  for (int i = 0; i < mesh.num_nodes(); ++i) {
    const int d = mesh.dof_of_node[i];
    if (d >= 0) x.segment<2>(d) = u[i];
  }
  return x;
}

inline std::vector<Vec2> scatter(const Mesh& mesh, const Eigen::VectorXd& x) {
  std::vector<Vec2> u(mesh.nodes.size(), Vec2::Zero());
  for (int i = 0; i < mesh.num_nodes(); ++i) {
    const int d = mesh.dof_of_node[i];
    if (d >= 0) u[i] = x.segment<2>(d);
  }
  return u;
}

/// Gradient of energy_finite with respect to the nodal displacements; rows of
/// Gamma nodes are zero.
inline std::vector<Vec2> residual_u_finite(const StateField& s, double t, double eps, const Mesh& mesh,
                                           const LoadProgram& load, const MaterialParams& p) {
  std::vector<Vec2> r(mesh.nodes.size(), Vec2::Zero());
  const Mat2 id = Mat2::Identity();
  for (int e = 0; e < mesh.num_elements(); ++e) {
    const Mat2 pl = id + eps * s.z[e];
    if (!std::isfinite(w_h<2>(pl, p))) throw DomainError("residual_u_finite: plastic strain outside K");
    const Mat2 g = pl.inverse();
    const Mat2 f = (id + eps * element_grad(mesh, s.u, e)) * g;
    if (!(f.determinant() > 0.0)) throw DomainError("residual_u_finite: det F_el <= 0");
    const Mat2 stress = w_el_grad<2>(f, p) * g.transpose();
    const auto& tri = mesh.triangles[e];
    for (int a = 0; a < 3; ++a) r[tri[a]] += mesh.areas[e] / eps * stress * mesh.shape_grads[e][a];
  }
  const double scale = load.profile(t);
  for (int i = 0; i < mesh.num_nodes(); ++i) {
    if (mesh.on_gamma(i)) {
      r[i].setZero();
    } else {
      r[i] -= scale * load.spatial[i];
    }
  }
  return r;
}

/// Hessian of energy_finite over the free dofs.
inline Eigen::MatrixXd hessian_u_finite(const StateField& s, double eps, const Mesh& mesh,
                                        const MaterialParams& p) {
  const int n = mesh.num_free_dofs;
  Eigen::MatrixXd k = Eigen::MatrixXd::Zero(n, n);
  const Mat2 id = Mat2::Identity();
  for (int e = 0; e < mesh.num_elements(); ++e) {
    const Mat2 g = (id + eps * s.z[e]).inverse();
    const Mat2 f = (id + eps * element_grad(mesh, s.u, e)) * g;
    const auto& tri = mesh.triangles[e];
    std::array<Vec2, 3> ga;
    for (int a = 0; a < 3; ++a) ga[a] = g.transpose() * mesh.shape_grads[e][a];
    for (int b = 0; b < 3; ++b) {
      const int db = mesh.dof_of_node[tri[b]];
      if (db < 0) continue;
      for (int j = 0; j < 2; ++j) {
        // dF_el for dof (b, j), scaled by 1/eps: e_j (x) g_b
        Mat2 h = Mat2::Zero();
        h.row(j) = ga[b].transpose();
        const Mat2 dstress = w_el_grad_dir<2>(f, h, p);
        for (int a = 0; a < 3; ++a) {
          const int da = mesh.dof_of_node[tri[a]];
          if (da < 0) continue;
          k.block<2, 1>(da, db + j) += mesh.areas[e] * dstress * ga[a];
        }
      }
    }
  }
  return k;
}

}  // namespace gammaplast
