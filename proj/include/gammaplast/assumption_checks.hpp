#pragma once

/// Sampling tests of the structural hypotheses on W_el, W_h and D. A pass
/// means no sampled counterexample was found inside the stated region.

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "gammaplast/errors.hpp"
#include "gammaplast/format.hpp"
#include "gammaplast/fit_order.hpp"
#include "gammaplast/material.hpp"
#include "gammaplast/tensor.hpp"

namespace gammaplast {

/// An elastic density with its gradient; the checks take this instead of the
/// built-in model so broken densities can serve as negative controls.
struct ElasticModel {
  std::function<double(const Mat2&)> w;
  std::function<Mat2(const Mat2&)> dw;
};

inline ElasticModel standard_elastic(const MaterialParams& p) {
  return ElasticModel{[p](const Mat2& f) { return w_el<2>(f, p); },
                      [p](const Mat2& f) { return w_el_grad<2>(f, p); }};
}

/// D(P, P^) callable, same role for the dissipation checks.
using DistanceFn = std::function<double(const Mat2&, const Mat2&)>;

inline DistanceFn standard_distance(const MaterialParams& p) {
  return [p](const Mat2& a, const Mat2& b) { return diss_distance<2>(a, b, p); };
}

struct SamplingRegion {
  double sv_min = 0.2;  // singular values of F, log-uniform
  double sv_max = 5.0;
  double gamma = 0.1;   // radius of the G-balls in the multiplicative estimate

  std::string describe() const {
    return "F = R1 diag(s1, s2) R2, s_i log-uniform in [" + fmt_double(sv_min) + ", " + fmt_double(sv_max) +
           "], R_i uniform in SO(2); |G - I| <= " + fmt_double(gamma);
  }
};

struct AssumptionReport {
  double c1_est = 0.0;  // min W / dist_SO^2
  double c2_est = 0.0;  // Mandel: |F^T dW| <= c2 (W + c3)
  double c3_est = 1.0;
  double c6_est = 0.0;  // D(I, P) <= c6 |P - I|
  double c7_est = 0.0;  // multiplicative estimate with c8
  double c8_est = 1.0;
  double gamma_est = 0.1;
  double frame_err = 0.0;        // max |W(RF) - W(F)| / (1 + W(F))
  double stress_free_err = 0.0;  // |W(I)| + |dW(I)|
  double worst_violation = 0.0;  // <= 0 when every sampled inequality held
  int samples = 0;
  std::map<double, double> expansion_radius;  // delta -> sampled c_el(delta)
  double expansion_radius_h = 0.0;            // delta = 0.1
  std::vector<double> d_gamma_ladder;
  std::vector<double> d_gamma_error;  // sup over pairs, per ladder value
  double d_gamma_order = 0.0;
  std::string region;

  std::string to_text() const {
    std::ostringstream os;
    os << "[assumptions]\n";
    os << "samples = " << samples << "\n";
    os << "region = " << region << "\n";
    os << "frame_err = " << fmt_double(frame_err) << "\n";
    os << "stress_free_err = " << fmt_double(stress_free_err) << "\n";
    os << "c1_est = " << fmt_double(c1_est) << "\n";
    os << "c2_est = " << fmt_double(c2_est) << "\n";
    os << "c3_est = " << fmt_double(c3_est) << "\n";
    os << "c6_est = " << fmt_double(c6_est) << "\n";
    os << "c7_est = " << fmt_double(c7_est) << "\n";
    os << "c8_est = " << fmt_double(c8_est) << "\n";
    os << "gamma_est = " << fmt_double(gamma_est) << "\n";
    for (const auto& [d, r] : expansion_radius)
      os << "expansion_radius_el[" << fmt_double(d) << "] = " << fmt_double(r) << "\n";
    os << "expansion_radius_h[0.1] = " << fmt_double(expansion_radius_h) << "\n";
    for (std::size_t i = 0; i < d_gamma_ladder.size(); ++i)
      os << "d_gamma_error[" << fmt_double(d_gamma_ladder[i]) << "] = " << fmt_double(d_gamma_error[i]) << "\n";
    os << "d_gamma_order = " << fmt_double(d_gamma_order) << "\n";
    os << "worst_violation = " << fmt_double(worst_violation) << "\n";
    return os.str();
  }
};

namespace detail {

inline Mat2 rotation(double th) {
  Mat2 r;
  r << std::cos(th), -std::sin(th), std::sin(th), std::cos(th);
  return r;
}

inline Mat2 sample_f(std::mt19937_64& rng, const SamplingRegion& reg) {
  std::uniform_real_distribution<double> angle(0.0, 2.0 * std::numbers::pi);
  std::uniform_real_distribution<double> logs(std::log(reg.sv_min), std::log(reg.sv_max));
  const double s1 = std::exp(logs(rng)), s2 = std::exp(logs(rng));
  return rotation(angle(rng)) * Vec2(s1, s2).asDiagonal() * rotation(angle(rng));
}

/// G with 0 < |G - I| <= gamma.
inline Mat2 sample_g(std::mt19937_64& rng, double gamma) {
  std::normal_distribution<double> n;
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Mat2 x;
  x << n(rng), n(rng), n(rng), n(rng);
  return Mat2::Identity() + gamma * (1.0 - u(rng)) * x / x.norm();
}

inline Mat2 sample_dev(std::mt19937_64& rng, double scale) {
  std::normal_distribution<double> n;
  const auto b = dev_sym_basis<2>();
  return scale * (n(rng) * b[0] + n(rng) * b[1]);
}

}  // namespace detail

inline constexpr double kFrameTol = 1e-10;
inline constexpr double kStressFreeTol = 1e-12;

/// Frame indifference, coercivity against dist(F, SO(2)), the Mandel bound
/// and the stress-free reference, over `samples` draws of F.
inline AssumptionReport check_energy_assumptions(const MaterialParams& p, int samples, std::uint64_t seed = 7,
                                                 const ElasticModel& model = {}, const SamplingRegion& reg = {}) {
  if (samples < 100) throw ArgumentError("check_energy_assumptions: need at least 100 samples");
  const ElasticModel m = model.w ? model : standard_elastic(p);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> angle(0.0, 2.0 * std::numbers::pi);
  AssumptionReport rep;
  rep.samples = samples;
  rep.region = reg.describe();
  rep.worst_violation = -kInf;

  const Mat2 id = Mat2::Identity();
  rep.stress_free_err = std::abs(m.w(id)) + m.dw(id).norm();
  rep.worst_violation = std::max(rep.worst_violation, rep.stress_free_err - kStressFreeTol);
  if (rep.stress_free_err > kStressFreeTol) {
    std::ostringstream os;
    os << "stress-free reference violated: |W(I)| + |dW(I)| = " << fmt_double(rep.stress_free_err);
    throw ViolationError(os.str());
  }

  double c1 = kInf, c2 = 0.0;
  for (int k = 0; k < samples; ++k) {
    const Mat2 f = detail::sample_f(rng, reg);
    const Mat2 r = detail::rotation(angle(rng));
    const double w = m.w(f);
    const double diff = std::abs(m.w(r * f) - w);
    rep.frame_err = std::max(rep.frame_err, diff / (1.0 + std::abs(w)));
    rep.worst_violation = std::max(rep.worst_violation, diff - kFrameTol * (1.0 + std::abs(w)));
    if (!(diff <= kFrameTol * (1.0 + std::abs(w)))) {
      std::ostringstream os;
      os << "frame indifference violated at sample " << k << ": |W(RF) - W(F)| = " << fmt_double(diff);
      throw ViolationError(os.str());
    }
    const double dist = dist_so<2>(f);
    if (dist > 1e-6) c1 = std::min(c1, w / (dist * dist));
    const double mandel = (f.transpose() * m.dw(f)).norm();
    const double denom = w + rep.c3_est;
    const double ratio = denom > 0.0 ? mandel / denom : kInf;
    c2 = std::max(c2, ratio);
    if (!(c1 > 0.0)) {
      std::ostringstream os;
      os << "coercivity W >= c1 dist^2 violated at sample " << k << ": W = " << fmt_double(w)
         << ", dist = " << fmt_double(dist);
      throw ViolationError(os.str());
    }
    if (!std::isfinite(ratio)) {
      std::ostringstream os;
      os << "Mandel bound unbounded at sample " << k << ": |F^T dW| = " << fmt_double(mandel)
         << ", W + c3 = " << fmt_double(denom);
      throw ViolationError(os.str());
    }
  }
  rep.c1_est = c1;
  rep.c2_est = c2;
  for (double delta : {0.5, 0.1, 0.01}) rep.expansion_radius[delta] = check_expansion<2>(Density::el, delta, p);
  rep.expansion_radius_h = check_expansion<2>(Density::h, 0.1, p);
  return rep;
}

struct MultEstimate {
  double c7_est = 0.0;
  double c8_est = 1.0;
  double gamma_est = 0.1;
};

/// Smallest c7 with |W(G1 F G2) - W(F)| <= c7 (W(F) + c8)(|G1 - I| + |G2 - I|)
/// over the samples; c8 = 1.
inline MultEstimate check_mult_estimate(const MaterialParams& p, int samples, std::uint64_t seed = 7,
                                        const ElasticModel& model = {}, const SamplingRegion& reg = {}) {
  if (samples < 100) throw ArgumentError("check_mult_estimate: need at least 100 samples");
  const ElasticModel m = model.w ? model : standard_elastic(p);
  std::mt19937_64 rng(seed);
  MultEstimate est;
  est.gamma_est = reg.gamma;
  for (int k = 0; k < samples; ++k) {
    const Mat2 f = detail::sample_f(rng, reg);
    const Mat2 g1 = detail::sample_g(rng, reg.gamma);
    const Mat2 g2 = detail::sample_g(rng, reg.gamma);
    const double w = m.w(f);
    const double lhs = std::abs(m.w(g1 * f * g2) - w);
    const double ratio = lhs / ((w + est.c8_est) * ((g1 - Mat2::Identity()).norm() + (g2 - Mat2::Identity()).norm()));
    if (!std::isfinite(ratio) || ratio < 0.0) {
      std::ostringstream os;
      os << "multiplicative estimate unbounded at sample " << k << ": W(F) = " << fmt_double(w)
         << ", W(G1 F G2) = " << fmt_double(m.w(g1 * f * g2));
      throw ViolationError(os.str());
    }
    est.c7_est = std::max(est.c7_est, ratio);
  }
  return est;
}

struct DGammaTable {
  std::vector<double> ladder;
  std::vector<double> value_err;  // sup over pairs of |D(I+ez, I+ez_e)/e - R(z^ - z)|
  std::vector<double> state_err;  // sup over pairs of |z_e - z^|
  std::vector<double> error;      // sup over pairs of the sum of both
  double c_fit = 0.0;             // max error / eps
  double order = 0.0;
  double c6_est = 0.0;
  int pairs = 0;
};

/// Recovery sequence z_e = (exp(e (z^ - z))(I + e z) - I)/e for sampled
/// deviatoric pairs, and the local bound D(I, P) <= c6 |P - I| for P = exp(zeta).
inline DGammaTable check_D_gamma(const MaterialParams& p, const std::vector<double>& ladder, int samples,
                                 std::uint64_t seed = 7, const DistanceFn& distance = {}, double min_order = 1.0) {
  if (ladder.size() < 3) throw ArgumentError("check_D_gamma: need at least 3 ladder values");
  for (std::size_t i = 1; i < ladder.size(); ++i)
    if (!(ladder[i] < ladder[i - 1])) throw ArgumentError("check_D_gamma: ladder must be decreasing");
  if (samples < 1) throw ArgumentError("check_D_gamma: need at least one sample");
  const DistanceFn dist = distance ? distance : standard_distance(p);
  std::mt19937_64 rng(seed);
  const Mat2 id = Mat2::Identity();
  DGammaTable tab;
  tab.ladder = ladder;
  tab.pairs = samples;
  tab.value_err.assign(ladder.size(), 0.0);
  tab.state_err.assign(ladder.size(), 0.0);
  tab.error.assign(ladder.size(), 0.0);
  for (int k = 0; k < samples; ++k) {
    const Mat2 z = detail::sample_dev(rng, 0.5);
    const Mat2 zh = detail::sample_dev(rng, 0.5);
    const double target = r_dev<2>(zh - z, p);
    for (std::size_t i = 0; i < ladder.size(); ++i) {
      const double e = ladder[i];
      const Mat2 ze = (mat_exp<2>(e * (zh - z)) * (id + e * z) - id) / e;
      const double v = std::abs(dist(id + e * z, id + e * ze) / e - target);
      const double s = (ze - zh).norm();
      if (!std::isfinite(v)) {
        std::ostringstream os;
        os << "recovery sequence has infinite dissipation at pair " << k << ", eps = " << fmt_double(e);
        throw ViolationError(os.str());
      }
      tab.value_err[i] = std::max(tab.value_err[i], v);
      tab.state_err[i] = std::max(tab.state_err[i], s);
      tab.error[i] = std::max(tab.error[i], v + s);
    }
  }
  for (std::size_t i = 0; i < ladder.size(); ++i) tab.c_fit = std::max(tab.c_fit, tab.error[i] / ladder[i]);
  tab.order = fit_order(ladder, tab.error);
  if (tab.order < min_order) {
    std::ostringstream os;
    os << "recovery error order " << fmt_double(tab.order) << " below " << fmt_double(min_order);
    throw ViolationError(os.str());
  }

  std::uniform_real_distribution<double> radius(0.0, 0.4);
  for (int k = 0; k < samples; ++k) {
    Mat2 zeta = detail::sample_dev(rng, 1.0);
    zeta *= radius(rng) / zeta.norm();
    const Mat2 pl = mat_exp<2>(zeta);
    const double gap = (pl - id).norm();
    if (gap == 0.0) continue;
    const double ratio = dist(id, pl) / gap;
    if (!std::isfinite(ratio)) {
      std::ostringstream os;
      os << "D(I, P) infinite for P = exp(zeta) at sample " << k;
      throw ViolationError(os.str());
    }
    tab.c6_est = std::max(tab.c6_est, ratio);
  }
  return tab;
}

/// Everything the `check` subcommand reports.
inline AssumptionReport run_assumption_suite(const MaterialParams& p, int samples, std::uint64_t seed) {
  AssumptionReport rep = check_energy_assumptions(p, samples, seed);
  const MultEstimate mult = check_mult_estimate(p, samples, seed + 1);
  rep.c7_est = mult.c7_est;
  rep.c8_est = mult.c8_est;
  rep.gamma_est = mult.gamma_est;
  const DGammaTable dg = check_D_gamma(p, {1e-1, 1e-2, 1e-3, 1e-4}, std::max(100, samples / 10), seed + 2);
  rep.c6_est = dg.c6_est;
  rep.d_gamma_ladder = dg.ladder;
  rep.d_gamma_error = dg.error;
  rep.d_gamma_order = dg.order;
  return rep;
}

}  // namespace gammaplast
