#pragma once

/// Constitutive functions of the finite-strain model and their small-strain
/// counterparts: elastic density, hardening with compact domain K,
/// von Mises dissipation potential and the exponential-path dissipation
/// distance.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <random>
#include <sstream>
#include <vector>

#include "gammaplast/errors.hpp"
#include "gammaplast/tensor.hpp"

namespace gammaplast {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// SL(d) membership tolerance on |det P - 1|.
inline constexpr double kDetTol = 1e-9;
/// Relative symmetry / trace-free tolerance for deviatoric arguments.
inline constexpr double kDevTol = 1e-10;

struct MaterialParams {
  double mu = 1.0;
  double lambda = 1.0;
  double h = 0.5;
  double sigma_y = 0.1;
  double rho_K = 0.5;

  /// Throws ValidationError naming every violated constraint.
  void validate() const {
    std::ostringstream os;
    if (!(mu > 0.0)) os << " mu must be > 0;";
    if (!(lambda >= 0.0)) os << " lambda must be >= 0;";
    if (!(h > 0.0)) os << " h must be > 0;";
    if (!(sigma_y > 0.0)) os << " sigma_y must be > 0;";
    if (!(rho_K > 0.0 && rho_K < 1.0)) os << " rho_K must lie in (0, 1);";
    if (!os.str().empty()) throw ValidationError("material:" + os.str());
  }

  bool operator==(const MaterialParams&) const = default;
};

/// Isotropic fourth-order tensor. Elastic: A -> 2 mu A^sym + lambda tr(A) I.
/// Hardening: A -> 2 h A.
template <int D>
struct IsoTensor4 {
  enum class Kind { elastic, hardening };
  Kind kind = Kind::elastic;
  double mu = 0.0;
  double lambda = 0.0;
  double h = 0.0;

  static IsoTensor4 elastic(double mu, double lambda) {
    return IsoTensor4{Kind::elastic, mu, lambda, 0.0};
  }
  static IsoTensor4 hardening(double h) { return IsoTensor4{Kind::hardening, 0.0, 0.0, h}; }

  Mat<D> apply(const Mat<D>& a) const {
    if (kind == Kind::hardening) return 2.0 * h * a;
    return 2.0 * mu * sym_part<D>(a) + lambda * a.trace() * Mat<D>::Identity();
  }

  /// |A|_T^2 = 1/2 A : T A
  double seminorm_sq(const Mat<D>& a) const { return 0.5 * (a.cwiseProduct(apply(a))).sum(); }
};

namespace detail {

// det(I + B) - 1 without forming I + B.
template <int D>
inline double det_minus_one(const Mat<D>& b) {
  if constexpr (D == 2) {
    return b.trace() + b.determinant();
  } else {
    const double tr = b.trace();
    const double tr2 = (b * b).trace();
    return tr + 0.5 * (tr * tr - tr2) + b.determinant();
  }
}

}  // namespace detail

/// Compressible Neo-Hookean-type density
///   (mu/2)(|F|^2 - d) - mu log det F + (lambda/2)(log det F)^2,
/// +inf off GL+(d).
template <int D>
inline double w_el(const Mat<D>& f, const MaterialParams& p) {
  const Mat<D> b = f - Mat<D>::Identity();
  const double jm1 = detail::det_minus_one<D>(b);
  if (!(jm1 > -1.0)) return kInf;
  const double log_j = std::log1p(jm1);
  const double norm_term = b.squaredNorm() + 2.0 * b.trace();  // |F|^2 - d
  return 0.5 * p.mu * norm_term - p.mu * log_j + 0.5 * p.lambda * log_j * log_j;
}

template <int D>
inline Mat<D> w_el_grad(const Mat<D>& f, const MaterialParams& p) {
  const double j = f.determinant();
  if (!(j > 0.0)) throw DomainError("w_el_grad: det F <= 0");
  const double log_j = std::log1p(detail::det_minus_one<D>(f - Mat<D>::Identity()));
  const Mat<D> f_inv_t = f.inverse().transpose();
  return p.mu * (f - f_inv_t) + p.lambda * log_j * f_inv_t;
}

/// Directional derivative of w_el_grad at F in direction H.
template <int D>
inline Mat<D> w_el_grad_dir(const Mat<D>& f, const Mat<D>& h, const MaterialParams& p) {
  const double log_j = std::log1p(detail::det_minus_one<D>(f - Mat<D>::Identity()));
  const Mat<D> f_inv = f.inverse();
  const Mat<D> f_inv_t = f_inv.transpose();
  return p.mu * h + (p.mu - p.lambda * log_j) * f_inv_t * h.transpose() * f_inv_t +
         p.lambda * (f_inv * h).trace() * f_inv_t;
}

/// Hardening h |P - I|^2 on K = {P in SL(d) : |P - I| <= rho_K}, +inf outside.
template <int D>
inline double w_h(const Mat<D>& pl, const MaterialParams& p) {
  const Mat<D> b = pl - Mat<D>::Identity();
  if (std::abs(detail::det_minus_one<D>(b)) > kDetTol) return kInf;
  const double dist = b.norm();
  if (dist > p.rho_K) return kInf;
  return p.h * dist * dist;
}

/// sigma_y |z| on symmetric trace-free z, +inf otherwise.
template <int D>
inline double r_dev(const Mat<D>& z, const MaterialParams& p) {
  if (!is_dev_sym<D>(z, kDevTol)) return kInf;
  return p.sigma_y * z.norm();
}

/// Exponential-path dissipation distance D~(P, P^) = R(log(P^ P^{-1})).
/// Upper bound for the geodesic distance; exact along exponential updates.
template <int D>
inline double diss_distance(const Mat<D>& pl, const Mat<D>& pl_hat, const MaterialParams& p) {
  const double det = pl.determinant();
  if (!std::isfinite(det) || std::abs(det) < 1e-300) return kInf;
  const Mat<D> q = pl_hat * pl.inverse();
  if (!((q - Mat<D>::Identity()).norm() < 1.0)) return kInf;
  try {
    return r_dev<D>(mat_log<D>(q), p);
  } catch (const DomainError&) {
    return kInf;
  }
}

enum class Density { el, h };

/// eps^-2 W(I + eps A) for W = w_el or w_h.
template <int D>
inline double rescaled(double eps, const Mat<D>& a, Density which, const MaterialParams& p) {
  if (!(eps > 0.0)) throw ArgumentError("rescaled: eps must be positive");
  const Mat<D> arg = Mat<D>::Identity() + eps * a;
  const double w = which == Density::el ? w_el<D>(arg, p) : w_h<D>(arg, p);
  return w / (eps * eps);
}

/// |A|_C^2 for the linearization of w_el at I: mu |A^sym|^2 + (lambda/2)(tr A)^2.
template <int D>
inline double quad_el(const Mat<D>& a, const MaterialParams& p) {
  return p.mu * sym_part<D>(a).squaredNorm() + 0.5 * p.lambda * a.trace() * a.trace();
}

/// |A|_H^2 = h |A|^2.
template <int D>
inline double quad_h(const Mat<D>& a, const MaterialParams& p) {
  return p.h * a.squaredNorm();
}

/// Largest sampled radius r such that |W(I+A) - |A|^2| <= delta |A|^2 for every
/// sampled A with |A| <= r. Directions are fixed by `seed`; each direction is
/// probed at 8 equispaced fractions of r. For the hardening density samples lie
/// on SL(d) (A = exp(S) - I with S deviatoric), where W_h is finite.
template <int D>
inline double check_expansion(Density which, double delta, const MaterialParams& p,
                              int samples = 200, unsigned long seed = 7) {
  if (!(delta > 0.0 && delta < 1.0)) throw ArgumentError("check_expansion: delta must lie in (0, 1)");
  if (samples < 1) throw ArgumentError("check_expansion: samples must be >= 1");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);

  std::vector<Mat<D>> dirs;
  dirs.reserve(samples);
  const auto basis = dev_sym_basis<D>();
  for (int s = 0; s < samples; ++s) {
    Mat<D> m = Mat<D>::Zero();
    if (which == Density::el) {
      for (int i = 0; i < D; ++i)
        for (int j = 0; j < D; ++j) m(i, j) = normal(rng);
    } else {
      for (const auto& e : basis) m += normal(rng) * e;
    }
    dirs.push_back(m / m.norm());
  }

  // A at Frobenius radius rho along direction `dir`.
  auto sample_at = [&](const Mat<D>& dir, double rho) -> Mat<D> {
    if (which == Density::el) return rho * dir;
    Eigen::SelfAdjointEigenSolver<Mat<D>> es(dir);
    const Vec<D> lam = es.eigenvalues();
    auto radius = [&](double t) {
      double acc = 0.0;
      for (int i = 0; i < D; ++i) acc += std::pow(std::expm1(t * lam(i)), 2);
      return std::sqrt(acc);
    };
    double lo = 0.0, hi = rho;
    while (radius(hi) < rho) hi *= 2.0;
    for (int it = 0; it < 200 && hi - lo > 1e-16 * hi; ++it) {
      const double mid = 0.5 * (lo + hi);
      (radius(mid) < rho ? lo : hi) = mid;
    }
    const double t = 0.5 * (lo + hi);
    Vec<D> ex;
    for (int i = 0; i < D; ++i) ex(i) = std::expm1(t * lam(i));
    return es.eigenvectors() * ex.asDiagonal() * es.eigenvectors().transpose();
  };

  auto holds = [&](double r) {
    for (const auto& dir : dirs) {
      for (int k = 1; k <= 8; ++k) {
        const Mat<D> a = sample_at(dir, r * k / 8.0);
        const Mat<D> arg = Mat<D>::Identity() + a;
        const double w = which == Density::el ? w_el<D>(arg, p) : w_h<D>(arg, p);
        const double q = which == Density::el ? quad_el<D>(a, p) : quad_h<D>(a, p);
        if (!(std::abs(w - q) <= delta * q)) return false;
      }
    }
    return true;
  };

  double lo = 1e-8;
  double hi = 1.0;
  if (!holds(lo)) throw SamplingError("check_expansion: bound fails at every radius down to 1e-8");
  if (holds(hi)) return hi;
  for (int it = 0; it < 200 && hi - lo > 1e-12 * hi; ++it) {
    const double mid = hi / lo > 4.0 ? std::sqrt(lo * hi) : 0.5 * (lo + hi);
    (holds(mid) ? lo : hi) = mid;
  }
  return lo;
}

}  // namespace gammaplast
