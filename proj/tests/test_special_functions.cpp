#include <gtest/gtest.h>

#include <cmath>
#include <complex>
#include <numbers>
#include <random>

#include "fermipole/special_functions.hpp"

using namespace fermipole;

namespace {

// Composite Simpson on int_0^{pi/2} (1 - k^2 sin^2)^{-1/2}.
double K_simpson(double k, int n = 1000000) {
  const double h = std::numbers::pi / 2 / n;
  auto f = [k](double t) { return 1.0 / std::sqrt(1.0 - k * k * std::sin(t) * std::sin(t)); };
  double s = f(0.0) + f(std::numbers::pi / 2);
  for (int i = 1; i < n; ++i) s += (i % 2 ? 4.0 : 2.0) * f(i * h);
  return s * h / 3.0;
}

// Incomplete F(phi|k) by Simpson, for sn(F) = sin(phi).
double F_simpson(double phi, double k, int n = 20000) {
  const double h = phi / n;
  auto f = [k](double t) { return 1.0 / std::sqrt(1.0 - k * k * std::sin(t) * std::sin(t)); };
  double s = f(0.0) + f(phi);
  for (int i = 1; i < n; ++i) s += (i % 2 ? 4.0 : 2.0) * f(i * h);
  return s * h / 3.0;
}

// Euler's constant from H_n - ln n with the Euler-Maclaurin correction.
double euler_gamma_oracle() {
  const int n = 10000;
  long double h = 0.0L;
  for (int i = n; i >= 1; --i) h += 1.0L / i;
  const long double nn = n;
  return static_cast<double>(h - std::log(nn) - 1.0L / (2 * nn) + 1.0L / (12 * nn * nn) -
                             1.0L / (120 * nn * nn * nn * nn));
}

}  // namespace

TEST(EllipticK, ZeroModulus) { EXPECT_DOUBLE_EQ(complete_elliptic_K(0.0), std::numbers::pi / 2); }

TEST(EllipticK, HalfModulusAgainstSimpson) {
  const double k = complete_elliptic_K(0.5);
  EXPECT_NEAR(k, 1.685750354812596, 1e-14 * k);
  EXPECT_NEAR(k, K_simpson(0.5), 1e-13 * k);
}

TEST(EllipticK, SmallModulusSeries) {
  const double k = 1e-4;
  const double series = std::numbers::pi / 2 * (k * k / 4 + 9.0 * k * k * k * k / 64);
  EXPECT_NEAR(complete_elliptic_K(k) - std::numbers::pi / 2, series, 1e-15);
  EXPECT_NEAR(complete_elliptic_K(k) - std::numbers::pi / 2, 3.927e-9, 1e-12);
}

TEST(EllipticK, DomainErrors) {
  EXPECT_THROW(complete_elliptic_K(1.0), std::domain_error);
  EXPECT_THROW(complete_elliptic_K(-0.1), std::domain_error);
  EXPECT_THROW(complete_elliptic_K_from_complement(0.0), std::domain_error);
}

TEST(EllipticK, AgmDuality) {
  for (double k : {0.1, 0.5, 0.9, 0.999, 1.0 - 1e-6}) {
    const double kc = std::sqrt((1.0 - k) * (1.0 + k));
    EXPECT_NEAR(complete_elliptic_K(k) * agm(1.0, kc), std::numbers::pi / 2, 1e-13);
  }
  for (double k : {0.1, 0.5, 0.9}) EXPECT_NEAR(complete_elliptic_K(k), K_simpson(k), 1e-12);
}

TEST(EllipticModulus, Invariants) {
  for (double k : {0.1, 0.5, 0.9, 1.0 - 1e-6}) {
    const auto m = EllipticModulus::from_k(k);
    EXPECT_NEAR(m.k * m.k + m.k_complement * m.k_complement, 1.0, 1e-14);
    EXPECT_NEAR(m.K * agm(1.0, m.k_complement), std::numbers::pi / 2, 1e-14 * m.K);
    EXPECT_NEAR(m.K_prime * agm(1.0, m.k), std::numbers::pi / 2, 1e-14 * m.K_prime);
  }
  EXPECT_THROW(EllipticModulus::from_k(0.0), std::domain_error);
  EXPECT_THROW(EllipticModulus::from_k(1.0), std::domain_error);
}

TEST(Jacobi, ValuesAtOrigin) {
  const auto m = EllipticModulus::from_k(0.7);
  const auto f = jacobi_sn_cn_dn(cplx(0.0, 0.0), m);
  EXPECT_NEAR(std::abs(f.sn), 0.0, 1e-15);
  EXPECT_NEAR(std::abs(f.cn - 1.0), 0.0, 1e-15);
  EXPECT_NEAR(std::abs(f.dn - 1.0), 0.0, 1e-15);
}

TEST(Jacobi, QuarterPeriod) {
  for (double k : {0.1, 0.5, 0.9}) {
    const auto m = EllipticModulus::from_k(k);
    const auto f = jacobi_sn_cn_dn(cplx(m.K, 0.0), m);
    EXPECT_NEAR(std::abs(f.sn - 1.0), 0.0, 1e-12);
    EXPECT_NEAR(std::abs(f.cn), 0.0, 1e-12);
    EXPECT_NEAR(std::abs(f.dn - m.k_complement), 0.0, 1e-12);
  }
}

TEST(Jacobi, RealAxisInvertsIncompleteIntegral) {
  for (double k : {0.3, 0.8}) {
    const auto m = EllipticModulus::from_k(k);
    for (double phi : {0.2, 0.7, 1.3}) {
      const double u = F_simpson(phi, k);
      const auto f = jacobi_sn_cn_dn(cplx(u, 0.0), m);
      EXPECT_NEAR(f.sn.real(), std::sin(phi), 1e-12);
      EXPECT_NEAR(f.cn.real(), std::cos(phi), 1e-12);
      EXPECT_NEAR(f.dn.real(), std::sqrt(1 - k * k * std::sin(phi) * std::sin(phi)), 1e-12);
      EXPECT_NEAR(f.sn.imag(), 0.0, 1e-15);
    }
  }
}

TEST(Jacobi, IdentitiesOnStripeGrid) {
  for (double k : {0.1, 0.5, 0.9, 1.0 - 1e-6}) {
    const auto m = EllipticModulus::from_k(k);
    for (int i = 0; i < 50; ++i) {
      for (int j = 0; j < 20; ++j) {
        const cplx t(-4.0 * m.K + 8.0 * m.K * (i + 0.5) / 50, m.K_prime * (j + 0.5) / 20);
        const auto f = jacobi_sn_cn_dn(t, m);
        const double scale = std::max(1.0, std::norm(f.sn));
        EXPECT_LE(std::abs(f.sn * f.sn + f.cn * f.cn - 1.0), 1e-12 * scale) << "k=" << k << " t=" << t;
        EXPECT_LE(std::abs(f.dn * f.dn + k * k * f.sn * f.sn - 1.0), 1e-12 * scale) << "k=" << k << " t=" << t;
      }
    }
  }
}

TEST(Jacobi, DerivativeMatchesCnDn) {
  // d sn / dt = cn dn, checked by a centred difference in the complex plane
  const auto m = EllipticModulus::from_k(0.6);
  const double h = 1e-5;
  for (cplx t : {cplx(0.3, 0.4), cplx(-1.1, 0.9), cplx(2.0, 0.2)}) {
    const cplx d = (jacobi_sn_cn_dn(t + h, m).sn - jacobi_sn_cn_dn(t - h, m).sn) / (2 * h);
    const auto f = jacobi_sn_cn_dn(t, m);
    EXPECT_NEAR(std::abs(d - f.cn * f.dn), 0.0, 1e-8);
  }
}

TEST(Jacobi, FlagsPoleNeighbourhood) {
  const auto m = EllipticModulus::from_k(0.5);
  EXPECT_TRUE(jacobi_sn_cn_dn(cplx(0.0, m.K_prime), m).near_pole);
  EXPECT_TRUE(jacobi_sn_cn_dn(cplx(2.0 * m.K, m.K_prime), m).near_pole);
  EXPECT_FALSE(jacobi_sn_cn_dn(cplx(0.0, 0.5 * m.K_prime), m).near_pole);
}

TEST(Digamma, EulerGamma) {
  const double g = euler_gamma_oracle();
  EXPECT_NEAR(g, 0.5772156649015329, 1e-15);
  EXPECT_NEAR(digamma(cplx(1.0, 0.0)).real(), -g, 1e-13 * g);
  EXPECT_NEAR(digamma(cplx(2.0, 0.0)).real(), 1.0 - g, 1e-13);
}

TEST(Digamma, Recurrence) {
  std::mt19937_64 gen(7);
  std::uniform_real_distribution<double> re(0.5, 200.0), im(-1e4, 1e4);
  for (int i = 0; i < 100; ++i) {
    const cplx z(re(gen), im(gen));
    const cplx d = digamma(z + 1.0) - digamma(z) - 1.0 / z;
    EXPECT_LE(std::abs(d), 1e-13 * std::max(1.0, std::abs(1.0 / z)));
  }
}

TEST(Digamma, AsymptoticVersusShifted) {
  const cplx z(100.5, 1000.0);
  // asymptotic series truncated after the B_16 term
  const double c[] = {1.0 / 12, -1.0 / 120, 1.0 / 252, -1.0 / 240, 1.0 / 132, -691.0 / 32760, 1.0 / 12, -3617.0 / 8160};
  cplx s(0.0, 0.0), zp = z * z;
  for (double ci : c) {
    s += ci / zp;
    zp *= z * z;
  }
  const cplx asym = std::log(z) - 0.5 / z - s;
  EXPECT_LE(std::abs(digamma(z) - asym), 1e-13 * std::abs(asym));
  // 20 recurrence steps down then evaluated again
  cplx shifted = digamma(z - 20.0);
  for (int k = 0; k < 20; ++k) shifted += 1.0 / (z - 20.0 + static_cast<double>(k));
  EXPECT_LE(std::abs(digamma(z) - shifted), 1e-13 * std::abs(asym));
}

TEST(Digamma, HalfIntegerLineImaginaryPart) {
  // Im psi(1/2 + iy) = (pi/2) tanh(pi y)
  for (double y : {0.01, 0.3, 1.0, 5.0, 40.0}) {
    const double expect = std::numbers::pi / 2 * std::tanh(std::numbers::pi * y);
    EXPECT_NEAR(digamma(cplx(0.5, y)).imag(), expect, 1e-13 * expect);
  }
}

TEST(Digamma, PolesRejected) {
  EXPECT_THROW(digamma(cplx(0.0, 0.0)), std::domain_error);
  EXPECT_THROW(digamma(cplx(-3.0, 0.0)), std::domain_error);
}

TEST(FermiScalar, Values) {
  EXPECT_EQ(fermi_scalar(0.0), 1.0);
  EXPECT_EQ(fermi_scalar(-1e5), 2.0);
  EXPECT_LE(fermi_scalar(1e5), 1e-300);
  EXPECT_EQ(fermi_scalar(1e6), 0.0);
  const long double ref = 2.0L / (1.0L + std::exp(2.0L));
  EXPECT_NEAR(fermi_scalar(2.0), static_cast<double>(ref), 1e-16);
  EXPECT_NEAR(fermi_scalar(2.0), 0.238405844044235, 1e-15);
}

TEST(FermiScalar, Symmetry) {
  for (double x : {1e-8, 0.3, 2.0, 17.0, 700.0, 1e5})
    EXPECT_NEAR(fermi_scalar(x) + fermi_scalar(-x), 2.0, 1e-15);
}

TEST(TanhStable, LargeArguments) {
  EXPECT_NEAR(std::abs(tanh_stable(cplx(800.0, 0.3)) - 1.0), 0.0, 1e-15);
  EXPECT_NEAR(std::abs(tanh_stable(cplx(-800.0, 0.3)) + 1.0), 0.0, 1e-15);
  const cplx w(0.4, 0.7);
  EXPECT_NEAR(std::abs(tanh_stable(w) - std::tanh(w)), 0.0, 1e-15);
}
