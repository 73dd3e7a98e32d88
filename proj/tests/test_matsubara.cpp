#include <gtest/gtest.h>

#include <cmath>
#include <complex>
#include <numbers>
#include <vector>

#include "fermipole/matsubara.hpp"

using namespace fermipole;

namespace {

// Sum of the Matsubara terms l > M: explicit up to M + K, then the
// Euler-Maclaurin integral of 4x/(x^2 + w^2) for the rest.
double tail_oracle(double x, long M, long K = 2000000) {
  long double acc = 0.0L;
  for (long l = M + K; l > M; --l) {
    const long double w = (2.0L * l - 1.0L) * std::numbers::pi_v<long double>;
    acc += 4.0L * x / (x * x + w * w);
  }
  // int_{M+K+1/2}^inf 4x/(x^2 + ((2l-1) pi)^2) dl = (2/pi) (pi/2 - atan(2 (M+K) pi / x))
  const long double a = 2.0L * (M + K) * std::numbers::pi_v<long double> / x;
  acc += 2.0L / std::numbers::pi_v<long double> * std::atan(1.0L / a);
  return static_cast<double>(acc);
}

// Charges that reproduce the first P moments of the group exactly, used as
// the reference aliasing floor for a least-squares fit.
std::vector<cplx> moment_matching_charges(GroupRange g, cplx c, double r, int P) {
  std::vector<cplx> a(P, cplx(0.0, 0.0));
  for (long l = g.last; l >= g.first; --l) {
    const cplx d = (matsubara_pole(l) - c) / r;
    cplx p(1.0, 0.0);
    for (int nu = 0; nu < P; ++nu) {
      a[nu] += p;
      p *= d;
    }
  }
  std::vector<cplx> rho(P, cplx(0.0, 0.0));
  for (int k = 0; k < P; ++k)
    for (int nu = 0; nu < P; ++nu) rho[k] += a[nu] * std::polar(1.0, -2.0 * std::numbers::pi * k * nu / P) / double(P);
  return rho;
}

double mismatch_on_circle(const std::vector<cplx>& pos, const std::vector<cplx>& rho, GroupRange g, cplx c,
                          double R, int count) {
  double num = 0.0, den = 0.0;
  for (int m = 0; m < count; ++m) {
    const cplx y = c + R * std::polar(1.0, 2.0 * std::numbers::pi * (m + 0.5) / count + 0.1);
    cplx truth(0.0, 0.0), approx(0.0, 0.0);
    for (long l = g.last; l >= g.first; --l) truth += 1.0 / (y - matsubara_pole(l));
    for (std::size_t k = 0; k < pos.size(); ++k) approx += rho[k] / (y - pos[k]);
    num = std::max(num, std::abs(approx - truth));
    den = std::max(den, std::abs(truth));
  }
  return num / den;
}

}  // namespace

TEST(Resummation, IdentityOnGrid) {
  for (double x : {-100.0, -10.0, -1.0, 0.0, 0.5, 3.0, 40.0, 100.0, 1e3, -1e4})
    for (long M : {0L, 1L, 7L, 31L, 511L, 4095L})
      EXPECT_NEAR(1.0 - matsubara_partial_scalar(x, M) - digamma_tail_scalar(x, M), fermi_scalar(x), 1e-12)
          << "x=" << x << " M=" << M;
}

TEST(Resummation, PartialSumLimits) {
  EXPECT_EQ(matsubara_partial_scalar(3.0, 0), 0.0);
  EXPECT_EQ(matsubara_partial_scalar(0.0, 100), 0.0);
  EXPECT_NEAR(1.0 - matsubara_partial_scalar(2.0, 1000000), fermi_scalar(2.0), 1e-5);
  EXPECT_THROW(matsubara_partial_scalar(1.0, -1), std::domain_error);
}

TEST(Resummation, TailAgainstDirectSummation) {
  const double t = digamma_tail_scalar(1.0, 10000);
  EXPECT_NEAR(t, 1.01e-5, 0.01e-5);
  EXPECT_NEAR(t, tail_oracle(1.0, 10000), 1e-12);
  EXPECT_NEAR(digamma_tail_scalar(-50.0, 300), tail_oracle(-50.0, 300), 1e-11);
  EXPECT_EQ(digamma_tail_scalar(0.0, 5), 0.0);
}

TEST(Multipole, GroupBound) {
  for (int P : {2, 4, 8, 16})
    for (int n = 2; n <= 10; ++n)
      for (int i = 0; i < 200; ++i) {
        const double x = -1e4 + 2e4 * (i + 0.5) / 200.0;
        EXPECT_LE(group_truncation_error(n, P, x), 1.0 / (2.0 * std::numbers::pi * std::pow(3.0, P)))
            << "P=" << P << " n=" << n << " x=" << x;
      }
}

TEST(Multipole, GroupGeometry) {
  for (int n = 1; n <= 12; ++n) {
    const auto g = dyadic_group(n);
    EXPECT_EQ(g.size(), 1L << (n - 1));
    // centre halfway between the first and last pole of the group
    EXPECT_NEAR(group_center(n).imag(), 0.5 * (matsubara_pole(g.first) + matsubara_pole(g.last)).imag(), 1e-9);
    EXPECT_NEAR(group_midpoint(n), 0.5 * (g.first + g.last), 1e-12);
  }
}

TEST(Multipole, SinglePoleGroupCollapses) {
  // with P = 1 each group is one pole at its centre carrying the group size
  for (int n = 2; n <= 6; ++n) {
    const auto g = dyadic_group(n);
    const auto a = multipole_coefficients(g, n, 1);
    ASSERT_EQ(a.size(), 1u);
    EXPECT_NEAR(std::abs(a[0] - cplx(double(g.size()), 0.0)), 0.0, 1e-12);
  }
}

TEST(Multipole, DefaultExpansionAccuracy) {
  const MultipoleConfig cfg;
  const auto e = build_multipole_expansion(cfg);
  EXPECT_EQ(e.leading_exact.size(), 16u);
  EXPECT_EQ(e.groups.front().range.first, 17);
  EXPECT_EQ(e.groups.back().range.last, cfg.M_pole());
  for (int i = 0; i <= 2000; ++i) {
    const double x = -1e4 + 10.0 * i;
    EXPECT_NEAR(e.partial_scalar(x), matsubara_partial_scalar(x, cfg.M_pole()), 2e-7) << x;
    EXPECT_NEAR(e.density(x), fermi_scalar(x), 2e-7) << x;
  }
}

TEST(Multipole, ConfigValidation) {
  EXPECT_THROW((MultipoleConfig{12, 9}.validate()), std::domain_error);
  EXPECT_THROW((MultipoleConfig{16, 4}.validate()), std::domain_error);
  EXPECT_NO_THROW((MultipoleConfig{16, 5}.validate()));
  EXPECT_EQ((MultipoleConfig{16, 9}.start_level()), 5);
  EXPECT_EQ(MultipoleConfig::levels_for(511), 9);
  EXPECT_EQ(MultipoleConfig::levels_for(512), 10);
}

TEST(EquivalentCharges, ResidualSitsAtAliasingFloor) {
  const MultipoleConfig cfg{16, 14};
  const auto set = build_equivalent_charges(cfg);
  for (const auto& lv : set.levels) {
    const auto ref = moment_matching_charges(lv.range, lv.center, lv.radius, cfg.P);
    const double floor = mismatch_on_circle(lv.positions, ref, lv.range, lv.center, lv.check_radius, 64);
    EXPECT_LE(lv.residual, 2.0 * floor) << "level " << lv.level;
    EXPECT_GE(lv.residual, 0.05 * floor) << "level " << lv.level;
    EXPECT_NEAR(lv.residual, mismatch_on_circle(lv.positions, lv.charges, lv.range, lv.center, lv.check_radius, 64),
                1e-12);
  }
}

TEST(EquivalentCharges, FarFieldAndTotalCharge) {
  const MultipoleConfig cfg{16, 14};
  const auto set = build_equivalent_charges(cfg);
  for (const auto& lv : set.levels) {
    EXPECT_LE(charge_mismatch(lv, 4.0 * lv.radius), 1e-9) << "level " << lv.level;
    cplx q(0.0, 0.0);
    for (const auto& c : lv.charges) q += c;
    EXPECT_NEAR(q.real(), double(lv.range.size()), 1e-8 * lv.range.size()) << "level " << lv.level;
    EXPECT_NEAR(q.imag(), 0.0, 1e-8 * lv.range.size());
  }
}

TEST(EquivalentCharges, SymmetrizationCostsLittle) {
  const auto set = build_equivalent_charges(MultipoleConfig{16, 12});
  for (const auto& lv : set.levels) EXPECT_LE(lv.residual, 10.0 * lv.residual_raw + 1e-15);
}

TEST(EquivalentCharges, MirrorSymmetry) {
  // the fitted set is invariant under x -> -conj(x) with rho -> conj(rho)
  const auto set = build_equivalent_charges(MultipoleConfig{16, 9});
  for (const auto& lv : set.levels) {
    const int P = static_cast<int>(lv.positions.size());
    for (int k = 0; k < P; ++k) {
      const int kk = ((P / 2 - k) % P + P) % P;
      EXPECT_NEAR(std::abs(lv.positions[kk] + std::conj(lv.positions[k])), 0.0, 1e-9 * lv.radius);
      EXPECT_NEAR(std::abs(lv.charges[kk] - std::conj(lv.charges[k])), 0.0, 1e-12 * lv.range.size());
    }
  }
}

TEST(EquivalentCharges, SingleChargeLeastSquares) {
  // P = 1: one charge a at the top of the circle; unregularized LS gives
  // rho = sum conj(a_m) b_m / sum |a_m|^2 over the collocation circle.
  TikhonovParams reg;
  reg.relative_lambda = 0.0;
  reg.symmetrize = false;
  const int n = 3;
  const auto g = dyadic_group(n);
  const auto lv = fit_equivalent_charges(n, g, 1, reg);
  const double s = std::ldexp(std::numbers::pi, n - 1);
  const cplx c = group_center(n) / s;
  const cplx x0 = c + 1.0;
  cplx num(0.0, 0.0);
  double den = 0.0;
  const int ncol = reg.oversample;
  for (int m = 0; m < ncol; ++m) {
    const cplx y = c + 2.0 * std::polar(1.0, 2.0 * std::numbers::pi * m / ncol);
    const cplx a = 1.0 / (y - x0);
    cplx b(0.0, 0.0);
    for (long l = g.last; l >= g.first; --l) b += 1.0 / (y - matsubara_pole(l) / s);
    num += std::conj(a) * b;
    den += std::norm(a);
  }
  ASSERT_EQ(lv.charges.size(), 1u);
  EXPECT_NEAR(std::abs(lv.charges[0] - num / den), 0.0, 1e-12);
}

TEST(EquivalentCharges, NegativeLambdaRejected) {
  TikhonovParams reg;
  reg.relative_lambda = -1.0;
  EXPECT_THROW(fit_equivalent_charges(5, dyadic_group(5), 16, reg), std::domain_error);
}

TEST(SimplePoles, CountAndPlacement) {
  const MultipoleConfig cfg;
  const auto ps = build_simple_pole_expansion(cfg);
  EXPECT_EQ(ps.size(), 96u);
  EXPECT_EQ(ps.Q, 511);
  for (std::size_t j = 0; j < 16; ++j) EXPECT_EQ(ps.poles[j], matsubara_pole(long(j) + 1));
  for (const auto& p : ps.poles) EXPECT_GT(p.imag(), 0.0);
}

TEST(SimplePoles, AgreeWithMultipoleExpansion) {
  const MultipoleConfig cfg;
  const auto ps = build_simple_pole_expansion(cfg);
  const auto e = build_multipole_expansion(cfg);
  for (int i = 0; i <= 400; ++i) {
    const double x = -1e4 + 50.0 * i;
    EXPECT_NEAR(simple_pole_density(ps, x), e.density(x), 1e-6) << x;
    EXPECT_NEAR(simple_pole_density(ps, x), fermi_scalar(x), 1e-6) << x;
  }
}

TEST(ChebyshevTail, MeetsTargetOnGrid) {
  const double target = 1e-7;
  for (long M : {511L, 1023L}) {
    const double X = 1.01 * 2000.0;
    const auto t = chebyshev_tail_fit(M, -X, X, target);
    double worst = 0.0;
    for (int i = 0; i <= 20000; ++i) {
      const double x = -X + 2.0 * X * i / 20000;
      worst = std::max(worst, std::abs(t.eval(x) - digamma_tail_scalar(x, M)));
    }
    EXPECT_LE(worst, target) << "M=" << M;
  }
}

TEST(ChebyshevTail, DegreeStableUnderDoubling) {
  // beta Delta E and M_pole doubled together keep the degree
  const double target = 1e-7;
  const int d0 = chebyshev_tail_fit(511, -1.01 * 4000, 1.01 * 4000, target).n_cheb();
  const int d1 = chebyshev_tail_fit(1023, -1.01 * 8000, 1.01 * 8000, target).n_cheb();
  const int d2 = chebyshev_tail_fit(2047, -1.01 * 16000, 1.01 * 16000, target).n_cheb();
  EXPECT_LE(std::abs(d1 - d0), 1);
  EXPECT_LE(std::abs(d2 - d1), 1);
}

TEST(ChebyshevTail, Validation) {
  EXPECT_THROW(chebyshev_tail_fit(511, 1.0, 1.0, 1e-7), std::domain_error);
  EXPECT_THROW(chebyshev_tail_fit(511, -1.0, 1.0, 0.0), std::domain_error);
  EXPECT_THROW(chebyshev_tail_fit(1, -1e6, 1e6, 1e-12, 1.0, 64), NumericalError);
}

TEST(ChebyshevTail, CoefficientsReproducePolynomial) {
  const auto c = chebyshev_coefficients([](double x) { return 4 * x * x * x - 3 * x; }, -1.0, 1.0, 6);
  for (int j = 0; j <= 6; ++j) EXPECT_NEAR(c[j], j == 3 ? 1.0 : 0.0, 1e-14);
}
