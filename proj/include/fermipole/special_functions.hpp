#pragma once

// Scalar special functions used by the pole expansions: complete elliptic
// integrals, Jacobi elliptic functions of complex argument, the complex
// digamma function and an overflow-free Fermi-Dirac occupation.

#include <array>
#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace fermipole {

using cplx = std::complex<double>;

/// Arithmetic-geometric mean of two non-negative reals.
inline double agm(double a, double b) {
  if (a < 0.0 || b < 0.0) throw std::domain_error("agm: negative argument");
  for (int it = 0; it < 64; ++it) {
    const double an = 0.5 * (a + b);
    const double bn = std::sqrt(a * b);
    a = an;
    b = bn;
    if (std::abs(a - b) <= 4.0 * std::numeric_limits<double>::epsilon() * a) break;
  }
  return 0.5 * (a + b);
}

/// Complete elliptic integral of the first kind given the complementary
/// modulus k' = sqrt(1 - k^2). Use this form when k is close to 1.
inline double complete_elliptic_K_from_complement(double k_complement) {
  if (!(k_complement > 0.0) || k_complement > 1.0)
    throw std::domain_error("complete_elliptic_K: complementary modulus outside (0,1]");
  return std::numbers::pi / (2.0 * agm(1.0, k_complement));
}

/// K(k) = int_0^{pi/2} (1 - k^2 sin^2)^{-1/2}, for 0 <= k < 1.
inline double complete_elliptic_K(double k) {
  if (!(k >= 0.0) || k >= 1.0) throw std::domain_error("complete_elliptic_K: k outside [0,1)");
  return complete_elliptic_K_from_complement(std::sqrt((1.0 - k) * (1.0 + k)));
}

/// Modulus together with its complement and both quarter periods.
struct EllipticModulus {
  double k = 0.0;
  double k_complement = 1.0;
  double K = std::numbers::pi / 2;
  double K_prime = 0.0;

  /// Build from k and an explicitly supplied k' (no 1 - k^2 cancellation).
  static EllipticModulus from_pair(double k, double k_complement) {
    if (!(k > 0.0 && k < 1.0)) throw std::domain_error("EllipticModulus: k outside (0,1)");
    if (!(k_complement > 0.0 && k_complement < 1.0))
      throw std::domain_error("EllipticModulus: k' outside (0,1)");
    EllipticModulus m;
    m.k = k;
    m.k_complement = k_complement;
    m.K = complete_elliptic_K_from_complement(k_complement);
    m.K_prime = complete_elliptic_K_from_complement(k);
    return m;
  }

  static EllipticModulus from_k(double k) {
    return from_pair(k, std::sqrt((1.0 - k) * (1.0 + k)));
  }
};

struct JacobiReal {
  double sn, cn, dn;
};

/// Jacobi sn, cn, dn of real argument u. The parameter is passed as the
/// complementary parameter mc = k'^2 (Bulirsch's descending Landen scheme),
/// which stays accurate as k -> 1.
inline JacobiReal jacobi_real(double u, double mc) {
  if (mc == 0.0) {
    const double ch = std::cosh(u);
    return {std::tanh(u), 1.0 / ch, 1.0 / ch};
  }
  if (mc < 0.0) throw std::domain_error("jacobi_real: negative complementary parameter");
  constexpr int max_levels = 13;
  const double tol = std::sqrt(std::numeric_limits<double>::epsilon() * 0.01);
  std::array<double, max_levels> em{}, en{};
  double a = 1.0, c = 1.0, emc = mc;
  double dn = 1.0;
  int levels = 0;
  for (int i = 0; i < max_levels; ++i) {
    levels = i + 1;
    em[i] = a;
    emc = std::sqrt(emc);
    en[i] = emc;
    c = 0.5 * (a + emc);
    if (std::abs(a - emc) <= tol * a) break;
    emc *= a;
    a = c;
  }
  u *= c;
  double sn = std::sin(u);
  double cn = std::cos(u);
  if (sn != 0.0) {
    a = cn / sn;
    c *= a;
    for (int i = levels - 1; i >= 0; --i) {
      const double b = em[i];
      a *= c;
      c *= dn;
      dn = (en[i] + a) / (b + a);
      a = c / b;
    }
    a = 1.0 / std::sqrt(c * c + 1.0);
    sn = sn >= 0.0 ? a : -a;
    cn = c * sn;
  }
  return {sn, cn, dn};
}

struct JacobiComplex {
  cplx sn, cn, dn;
  bool near_pole = false;  // argument within 1e-8 of a pole of sn
};

/// Jacobi elliptic functions of complex argument t = a + ib.
///
/// The real and imaginary parts are handled separately: sn(a|k) by the
/// real routine and sn(ib|k) through Jacobi's imaginary transformation,
/// recombined with the addition theorem. Intended for |Re t| <= 4K,
/// 0 <= Im t <= K'.
inline JacobiComplex jacobi_sn_cn_dn(cplx t, const EllipticModulus& mod) {
  const double k = mod.k;
  const double k2 = k * k;
  const auto [s, c, d] = jacobi_real(t.real(), mod.k_complement * mod.k_complement);
  const auto [s1, c1, d1] = jacobi_real(t.imag(), k2);
  const double denom = c1 * c1 + k2 * s * s * s1 * s1;

  JacobiComplex out;
  out.sn = cplx(s * d1, c * d * s1 * c1) / denom;
  out.cn = cplx(c * c1, -s * d * s1 * d1) / denom;
  out.dn = cplx(d * c1 * d1, -k2 * s * c * s1) / denom;

  // sn has poles at 2jK + iK' (mod 4K, 2iK')
  for (int j = -2; j <= 2; ++j) {
    if (std::abs(t - cplx(2.0 * j * mod.K, mod.K_prime)) < 1e-8) out.near_pole = true;
  }
  return out;
}

/// Complex digamma psi(z) = Gamma'(z)/Gamma(z).
///
/// Upward recurrence until Re z >= 16, then the Bernoulli asymptotic series
/// truncated after the B_16 term.
inline cplx digamma(cplx z) {
  if (z.imag() == 0.0 && z.real() <= 0.0 && z.real() == std::floor(z.real()))
    throw std::domain_error("digamma: pole at non-positive integer");
  cplx shift(0.0, 0.0);
  while (z.real() < 16.0) {
    shift -= 1.0 / z;
    z += 1.0;
  }
  // B_{2n} / (2n) for n = 1..8
  static constexpr std::array<double, 8> coef = {
      1.0 / 12.0,        -1.0 / 120.0,    1.0 / 252.0,       -1.0 / 240.0,
      1.0 / 132.0,       -691.0 / 32760.0, 1.0 / 12.0,       -3617.0 / 8160.0};
  const cplx inv2 = 1.0 / (z * z);
  cplx series(0.0, 0.0);
  for (int n = static_cast<int>(coef.size()) - 1; n >= 0; --n) series = (series + coef[n]) * inv2;
  return shift + std::log(z) - 0.5 / z - series;
}

/// Fermi-Dirac occupation 2/(1+e^x) in the dimensionless variable x = beta(E-mu).
inline double fermi_scalar(double x) {
  if (std::isinf(x)) return x > 0 ? 0.0 : 2.0;
  if (x >= 0.0) {
    const double e = std::exp(-x);
    return 2.0 * e / (1.0 + e);
  }
  return 2.0 / (1.0 + std::exp(x));
}

/// tanh(w) for complex w without overflow at large |Re w|.
inline cplx tanh_stable(cplx w) {
  if (w.real() < 0.0) return -tanh_stable(-w);
  const cplx e = std::exp(-2.0 * w);
  return (1.0 - e) / (1.0 + e);
}

}  // namespace fermipole
