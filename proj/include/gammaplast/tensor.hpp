#pragma once

/// Small dense matrix kernels for d = 2 and d = 3: additive decompositions,
/// the matrix exponential and principal logarithm, and the Frobenius
/// distance to the rotation group.

#include <array>
#include <cmath>
#include <sstream>

#include <Eigen/Dense>

#include "gammaplast/errors.hpp"

namespace gammaplast {

template <int D>
using Mat = Eigen::Matrix<double, D, D>;
template <int D>
using Vec = Eigen::Matrix<double, D, 1>;

using Mat2 = Mat<2>;
using Vec2 = Vec<2>;
using Mat3 = Mat<3>;

template <int D>
struct Decomp {
  Mat<D> sym;
  Mat<D> anti;
  Mat<D> dev;
  double trace = 0.0;
};

template <int D>
inline Mat<D> sym_part(const Mat<D>& a) {
  return 0.5 * (a + a.transpose());
}

template <int D>
inline Mat<D> dev_part(const Mat<D>& a) {
  Mat<D> s = sym_part<D>(a);
  return s - (s.trace() / D) * Mat<D>::Identity();
}

template <int D>
inline Decomp<D> decompose(const Mat<D>& a) {
  Decomp<D> out;
  out.sym = sym_part<D>(a);
  out.anti = a - out.sym;
  out.trace = a.trace();
  out.dev = out.sym - (out.trace / D) * Mat<D>::Identity();
  return out;
}

/// True when `a` is symmetric and trace-free up to `rel_tol * (1 + |a|)`.
template <int D>
inline bool is_dev_sym(const Mat<D>& a, double rel_tol = 1e-10) {
  const double tol = rel_tol * (1.0 + a.norm());
  return (a - a.transpose()).norm() <= tol && std::abs(a.trace()) <= tol;
}

/// Orthonormal basis (Frobenius inner product) of the symmetric trace-free
/// matrices.
template <int D>
inline std::array<Mat<D>, D*(D + 1) / 2 - 1> dev_sym_basis() {
  std::array<Mat<D>, D*(D + 1) / 2 - 1> basis;
  int k = 0;
  // diagonal part: Gram-Schmidt on e_i e_i^T - e_{i+1} e_{i+1}^T
  for (int i = 0; i + 1 < D; ++i) {
    Mat<D> m = Mat<D>::Zero();
    for (int j = 0; j <= i; ++j) m(j, j) = 1.0;
    m(i + 1, i + 1) = -(i + 1.0);
    basis[k++] = m / m.norm();
  }
  for (int i = 0; i < D; ++i) {
    for (int j = i + 1; j < D; ++j) {
      Mat<D> m = Mat<D>::Zero();
      m(i, j) = m(j, i) = 1.0 / std::sqrt(2.0);
      basis[k++] = m;
    }
  }
  return basis;
}

/// exp(A) by scaling and squaring over a truncated Taylor series. The scaled
/// argument has Frobenius norm <= 0.5; the series stops once a term falls
/// below 1e-16 of the running sum.
template <int D>
inline Mat<D> mat_exp(const Mat<D>& a) {
  const double norm = a.norm();
  int squarings = 0;
  double scaled = norm;
  while (scaled > 0.5) {
    scaled *= 0.5;
    ++squarings;
  }
  const Mat<D> b = std::ldexp(1.0, -squarings) * a;
  Mat<D> sum = Mat<D>::Identity();
  Mat<D> term = Mat<D>::Identity();
  for (int k = 1; k < 64; ++k) {
    term = (term * b) / static_cast<double>(k);
    sum += term;
    if (term.norm() < 1e-16 * sum.norm()) break;
  }
  for (int i = 0; i < squarings; ++i) sum = sum * sum;
  return sum;
}

namespace detail {

// Denman-Beavers iteration for the principal square root.
template <int D>
inline Mat<D> sqrt_db(const Mat<D>& x) {
  Mat<D> y = x;
  Mat<D> z = Mat<D>::Identity();
  for (int it = 0; it < 100; ++it) {
    const Mat<D> y_inv = y.inverse();
    const Mat<D> z_inv = z.inverse();
    const Mat<D> y_next = 0.5 * (y + z_inv);
    z = 0.5 * (z + y_inv);
    const double change = (y_next - y).norm();
    y = y_next;
    if (change <= 1e-15 * y.norm()) break;
  }
  return y;
}

}  // namespace detail

/// Principal logarithm for arguments near the identity (|P - I|_F < 1).
/// Inverse scaling and squaring: square roots until |X - I| < 0.25, then the
/// Mercator series.
template <int D>
inline Mat<D> mat_log(const Mat<D>& p) {
  const Mat<D> id = Mat<D>::Identity();
  const double dist = (p - id).norm();
  if (!(dist < 1.0)) {
    std::ostringstream os;
    os << "mat_log: |P - I|_F = " << dist << " outside the principal domain (< 1)";
    throw DomainError(os.str());
  }
  Eigen::EigenSolver<Mat<D>> es(p, false);
  for (int i = 0; i < D; ++i) {
    const auto lam = es.eigenvalues()(i);
    if (std::abs(lam.imag()) <= 1e-14 * (1.0 + std::abs(lam.real())) && lam.real() <= 0.0) {
      throw DomainError("mat_log: argument has a non-positive real eigenvalue");
    }
  }

  Mat<D> x = p;
  int roots = 0;
  while ((x - id).norm() >= 0.25) {
    x = detail::sqrt_db<D>(x);
    ++roots;
  }
  const Mat<D> e = x - id;
  Mat<D> power = e;
  Mat<D> sum = e;
  for (int n = 2; n < 200; ++n) {
    power = power * e;
    const Mat<D> term = ((n % 2 == 0) ? -1.0 : 1.0) / n * power;
    sum += term;
    if (term.norm() <= 1e-17 * sum.norm() || term.norm() < 1e-300) break;
  }
  return std::ldexp(1.0, roots) * sum;
}

/// min over R in SO(d) of |F - R|_F. Singular values with the smallest one
/// sign-flipped when det F < 0.
template <int D>
inline double dist_so(const Mat<D>& f) {
  Eigen::JacobiSVD<Mat<D>> svd(f);
  Vec<D> sigma = svd.singularValues();  // descending
  if (f.determinant() < 0.0) sigma(D - 1) = -sigma(D - 1);
  double acc = 0.0;
  for (int i = 0; i < D; ++i) acc += (sigma(i) - 1.0) * (sigma(i) - 1.0);
  return std::sqrt(acc);
}

}  // namespace gammaplast
