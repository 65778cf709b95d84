#include <cmath>
#include <random>

#include <gtest/gtest.h>
#include <unsupported/Eigen/MatrixFunctions>

#include "gammaplast/errors.hpp"
#include "gammaplast/tensor.hpp"

using namespace gammaplast;

namespace {

template <int D>
Mat<D> random_mat(std::mt19937_64& rng, double scale) {
  std::normal_distribution<double> n;
  Mat<D> a;
  for (int i = 0; i < D; ++i)
    for (int j = 0; j < D; ++j) a(i, j) = scale * n(rng);
  return a;
}

template <int D>
Mat<D> random_rotation(std::mt19937_64& rng) {
  Mat<D> a = random_mat<D>(rng, 1.0);
  Eigen::HouseholderQR<Mat<D>> qr(a);
  Mat<D> q = qr.householderQ();
  if (q.determinant() < 0) q.col(0) *= -1.0;
  return q;
}

}  // namespace

TEST(Decompose, Identity) {
  const auto d = decompose<2>(Mat2::Identity());
  EXPECT_EQ(d.sym, Mat2::Identity());
  EXPECT_EQ(d.anti, Mat2::Zero());
  EXPECT_EQ(d.dev, Mat2::Zero());
  EXPECT_EQ(d.trace, 2.0);
}

TEST(Decompose, Antisymmetric) {
  Mat2 a;
  a << 0, 3, -3, 0;
  const auto d = decompose<2>(a);
  EXPECT_EQ(d.sym, Mat2::Zero());
  EXPECT_EQ(d.dev, Mat2::Zero());
  EXPECT_EQ(d.trace, 0.0);
  EXPECT_EQ(d.anti, a);
}

TEST(Decompose, WorkedExample) {
  Mat2 a;
  a << 1, 2, 0, 3;
  const auto d = decompose<2>(a);
  // by hand: sym = (A + A^T)/2, anti = (A - A^T)/2, dev = sym - (4/2) I
  Mat2 sym, anti, dev;
  sym << 1, 1, 1, 3;
  anti << 0, 1, -1, 0;
  dev << -1, 1, 1, 1;
  EXPECT_EQ(d.sym, sym);
  EXPECT_EQ(d.anti, anti);
  EXPECT_EQ(d.dev, dev);
  EXPECT_EQ(d.trace, 4.0);
}

TEST(Decompose, ReconstructsAndTraceFreeRandom) {
  std::mt19937_64 rng(1);
  for (int k = 0; k < 500; ++k) {
    const Mat2 a2 = random_mat<2>(rng, 3.0);
    const auto d2 = decompose<2>(a2);
    EXPECT_LE((d2.sym + d2.anti - a2).norm(), 1e-15 * a2.norm());
    EXPECT_LE(std::abs(d2.dev.trace()), 1e-14 * a2.norm());
    const Mat3 a3 = random_mat<3>(rng, 3.0);
    const auto d3 = decompose<3>(a3);
    EXPECT_LE((d3.sym + d3.anti - a3).norm(), 1e-15 * a3.norm());
    EXPECT_LE(std::abs(d3.dev.trace()), 1e-14 * a3.norm());
  }
}

TEST(DevSymBasis, Orthonormal) {
  const auto b2 = dev_sym_basis<2>();
  const auto b3 = dev_sym_basis<3>();
  for (std::size_t i = 0; i < b2.size(); ++i)
    for (std::size_t j = 0; j < b2.size(); ++j)
      EXPECT_NEAR(b2[i].cwiseProduct(b2[j]).sum(), i == j ? 1.0 : 0.0, 1e-15);
  ASSERT_EQ(b3.size(), 5u);
  for (std::size_t i = 0; i < b3.size(); ++i) {
    EXPECT_TRUE(is_dev_sym<3>(b3[i]));
    for (std::size_t j = 0; j < b3.size(); ++j)
      EXPECT_NEAR(b3[i].cwiseProduct(b3[j]).sum(), i == j ? 1.0 : 0.0, 1e-15);
  }
}

TEST(MatExp, ZeroIsIdentity) {
  EXPECT_EQ(mat_exp<2>(Mat2::Zero()), Mat2::Identity());
  EXPECT_EQ(mat_exp<3>(Mat3::Zero()), Mat3::Identity());
}

TEST(MatExp, AntisymmetricGivesRotation) {
  const double th = 0.3;
  Mat2 a;
  a << 0, th, -th, 0;
  Mat2 r;
  r << std::cos(th), std::sin(th), -std::sin(th), std::cos(th);
  EXPECT_LE((mat_exp<2>(a) - r).norm(), 1e-13);
}

TEST(MatExp, DiagonalMatchesScalarExp) {
  Mat3 a = Mat3::Zero();
  a.diagonal() << 0.7, -1.3, 2.1;
  const Mat3 e = mat_exp<3>(a);
  for (int i = 0; i < 3; ++i) EXPECT_NEAR(e(i, i), std::exp(a(i, i)), 1e-13 * std::exp(a(i, i)));
}

// Reference: Eigen's Pade exponential evaluated in long double.
TEST(MatExp, MatchesExtendedPrecisionReference) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(0.0, 10.0);
  for (int k = 0; k < 300; ++k) {
    Mat2 a = random_mat<2>(rng, 1.0);
    a *= u(rng) / a.norm();
    const Mat2 r2 = Eigen::Matrix<long double, 2, 2>(a.cast<long double>()).exp().cast<double>();
    EXPECT_LE((mat_exp<2>(a) - r2).norm(), 1e-13 * r2.norm());
    Mat3 b = random_mat<3>(rng, 1.0);
    b *= u(rng) / b.norm();
    const Mat3 r3 = Eigen::Matrix<long double, 3, 3>(b.cast<long double>()).exp().cast<double>();
    EXPECT_LE((mat_exp<3>(b) - r3).norm(), 1e-13 * r3.norm());
  }
}

// exp(A) exp(-A) = I and det exp(A) = e^{tr A}. Both products lose digits in
// proportion to |exp(A)| |exp(-A)|, so the bound carries that factor.
TEST(MatExp, InverseAndDeterminantProperties) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(0.0, 10.0);
  for (int k = 0; k < 300; ++k) {
    Mat2 a = random_mat<2>(rng, 1.0);
    a *= u(rng) / a.norm();
    const Mat2 ea = mat_exp<2>(a), eb = mat_exp<2>(Mat2(-a));
    const double cond = std::max(1.0, ea.norm() * eb.norm());
    EXPECT_LE((ea * eb - Mat2::Identity()).norm(), 1e-11 * cond);
    EXPECT_LE(std::abs(ea.determinant() - std::exp(a.trace())), 1e-12 * std::max(std::exp(a.trace()), ea.squaredNorm()));
    if (a.norm() <= 2.0) {
      EXPECT_LE((ea * eb - Mat2::Identity()).norm(), 1e-11);
      EXPECT_LE(std::abs(ea.determinant() / std::exp(a.trace()) - 1.0), 1e-12);
    }
    Mat3 b = random_mat<3>(rng, 1.0);
    b *= u(rng) / b.norm();
    const Mat3 fa = mat_exp<3>(b), fb = mat_exp<3>(Mat3(-b));
    EXPECT_LE((fa * fb - Mat3::Identity()).norm(), 1e-11 * std::max(1.0, fa.norm() * fb.norm()));
  }
}

TEST(MatExp, TraceFreeHasUnitDeterminant) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 5.0);
  for (int k = 0; k < 300; ++k) {
    Mat2 a = random_mat<2>(rng, 1.0);
    a -= 0.5 * a.trace() * Mat2::Identity();
    a *= u(rng) / a.norm();
    EXPECT_LE(std::abs(mat_exp<2>(a).determinant() - 1.0), 1e-11);
    Mat3 b = random_mat<3>(rng, 1.0);
    b -= b.trace() / 3.0 * Mat3::Identity();
    b *= u(rng) / b.norm();
    EXPECT_LE(std::abs(mat_exp<3>(b).determinant() - 1.0), 1e-11);
  }
}

TEST(MatLog, IdentityIsZero) { EXPECT_LE(mat_log<2>(Mat2::Identity()).norm(), 1e-16); }

TEST(MatLog, RecoversDevSymGenerator) {
  const auto b = dev_sym_basis<2>();
  const Mat2 zeta = 0.2 * (0.6 * b[0] + 0.8 * b[1]);
  EXPECT_LE((mat_log<2>(mat_exp<2>(zeta)) - zeta).norm(), 1e-11);
}

TEST(MatLog, OutsideDomainThrows) {
  Mat2 p = Mat2::Identity();
  p(0, 0) += 1.5;
  EXPECT_THROW(mat_log<2>(p), DomainError);
  Mat2 q = Mat2::Identity();
  q(0, 1) = 1.0;
  EXPECT_THROW(mat_log<2>(q), DomainError);  // |P - I| = 1 exactly
}

TEST(MatLog, SingularThrows) {
  Mat3 p = Mat3::Identity();
  p(0, 0) = 0.0;
  EXPECT_THROW(mat_log<3>(p), DomainError);
}

TEST(MatLog, RoundTripOnDomain) {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(0.0, 0.95);
  for (int k = 0; k < 500; ++k) {
    Mat2 d = random_mat<2>(rng, 1.0);
    d *= u(rng) / d.norm();
    const Mat2 p = Mat2::Identity() + d;
    if (p.determinant() <= 0.0) continue;
    EXPECT_LE((mat_exp<2>(mat_log<2>(p)) - p).norm(), 1e-11 * p.norm());
    Mat3 d3 = random_mat<3>(rng, 1.0);
    d3 *= u(rng) / d3.norm();
    const Mat3 p3 = Mat3::Identity() + d3;
    if (p3.determinant() <= 0.0) continue;
    EXPECT_LE((mat_exp<3>(mat_log<3>(p3)) - p3).norm(), 1e-11 * p3.norm());
  }
}

TEST(MatLog, UnitDeterminantGivesTraceFreeLog) {
  std::mt19937_64 rng(5);
  for (int k = 0; k < 200; ++k) {
    Mat2 a = random_mat<2>(rng, 0.2);
    a -= 0.5 * a.trace() * Mat2::Identity();
    const Mat2 p = mat_exp<2>(a);
    if ((p - Mat2::Identity()).norm() >= 1.0) continue;
    EXPECT_LE(std::abs(mat_log<2>(p).trace()), 1e-10);
  }
}

TEST(DistSO, RotationIsZero) {
  std::mt19937_64 rng(6);
  for (int k = 0; k < 50; ++k) {
    EXPECT_LE(dist_so<2>(random_rotation<2>(rng)), 1e-14);
    EXPECT_LE(dist_so<3>(random_rotation<3>(rng)), 1e-14);
  }
}

TEST(DistSO, TwiceIdentity) {
  const double d = dist_so<2>(Mat2(2.0 * Mat2::Identity()));
  EXPECT_NEAR(d, std::sqrt(2.0), 1e-15);
  // dense minimization over rotation angles
  double best = 1e300;
  for (int k = 0; k <= 200000; ++k) {
    const double th = 2.0 * M_PI * k / 200000.0;
    Mat2 r;
    r << std::cos(th), -std::sin(th), std::sin(th), std::cos(th);
    best = std::min(best, (2.0 * Mat2::Identity() - r).norm());
  }
  EXPECT_NEAR(d, best, 1e-9);
}

TEST(DistSO, NegativeDeterminantUsesSignFlip) {
  Mat2 f = Mat2::Identity();
  f(1, 1) = -1.0;  // reflection: singular values 1, 1, det -1
  double best = 1e300;
  for (int k = 0; k <= 100000; ++k) {
    const double th = 2.0 * M_PI * k / 100000.0;
    Mat2 r;
    r << std::cos(th), -std::sin(th), std::sin(th), std::cos(th);
    best = std::min(best, (f - r).norm());
  }
  EXPECT_NEAR(dist_so<2>(f), best, 1e-9);
  EXPECT_NEAR(dist_so<2>(f), 2.0, 1e-14);
}

TEST(DistSO, SmallAntisymmetricPerturbation) {
  Mat2 a;
  a << 0, 1e-3 / std::sqrt(2.0), -1e-3 / std::sqrt(2.0), 0;
  const Mat2 b = Mat2::Identity() + a;
  // |B^sym - I| = 0, so the distance is second order in |B - I|
  EXPECT_LE(dist_so<2>(b), (b - Mat2::Identity()).squaredNorm());
}

TEST(DistSO, LeftRotationInvariance) {
  std::mt19937_64 rng(7);
  for (int k = 0; k < 500; ++k) {
    const Mat2 f = random_mat<2>(rng, 1.5);
    const Mat2 r = random_rotation<2>(rng);
    EXPECT_LE(std::abs(dist_so<2>(r * f) - dist_so<2>(f)), 1e-12);
    const Mat3 f3 = random_mat<3>(rng, 1.5);
    const Mat3 r3 = random_rotation<3>(rng);
    EXPECT_LE(std::abs(dist_so<3>(r3 * f3) - dist_so<3>(f3)), 1e-12);
  }
}
