#pragma once

// Matsubara pole expansion of the Fermi-Dirac function with dyadic grouping
// of the poles (2l-1) pi i. Each group is replaced either by a truncated
// multipole (Taylor) expansion about its midpoint or by P equivalent simple
// poles on an enclosing circle; the remainder of the series past M_pole is
// a digamma function, fitted by Chebyshev polynomials for matrix use.
//
// All quantities here use the dimensionless variable x = beta (E - mu).

#include <bit>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "errors.hpp"
#include "pole_set.hpp"
#include "special_functions.hpp"

namespace fermipole {

inline cplx matsubara_pole(long l) { return {0.0, (2.0 * l - 1.0) * std::numbers::pi}; }

/// 4 Re sum_{l=1}^{M} 1/(x - (2l-1) pi i), summed smallest terms first.
inline double matsubara_partial_scalar(double x, long M) {
  if (M < 0) throw std::domain_error("matsubara_partial_scalar: M must be >= 0");
  double acc = 0.0;
  for (long l = M; l >= 1; --l) {
    const double w = (2.0 * l - 1.0) * std::numbers::pi;
    acc += x / (x * x + w * w);
  }
  return 4.0 * acc;
}

/// Contribution of the poles l > M: (2/pi) Im psi(M + 1/2 + i x / (2 pi)).
/// 1 - matsubara_partial_scalar(x, M) - digamma_tail_scalar(x, M) = fermi_scalar(x).
inline double digamma_tail_scalar(double x, long M) {
  if (M < 0) throw std::domain_error("digamma_tail_scalar: M must be >= 0");
  if (x == 0.0) return 0.0;
  const cplx z(static_cast<double>(M) + 0.5, x / (2.0 * std::numbers::pi));
  return 2.0 / std::numbers::pi * digamma(z).imag();
}

// ---------------------------------------------------------------------------
// Dyadic grouping
// ---------------------------------------------------------------------------

struct MultipoleConfig {
  int P = 16;    // terms (or equivalent charges) per group, a power of two
  int N_G = 9;   // number of dyadic levels

  long M_pole() const { return (1L << N_G) - 1; }
  int start_level() const { return std::countr_zero(static_cast<unsigned>(P)) + 1; }

  void validate() const {
    if (P < 1 || !std::has_single_bit(static_cast<unsigned>(P)))
      throw std::domain_error("MultipoleConfig: P must be a power of two");
    if (N_G < start_level()) throw std::domain_error("MultipoleConfig: need N_G >= log2(P) + 1");
    if (N_G > 40) throw std::domain_error("MultipoleConfig: N_G too large");
  }

  /// Smallest N_G with M_pole >= m (M_pole = 2^N_G - 1).
  static int levels_for(long m) {
    int n = 1;
    while ((1L << n) - 1 < m) ++n;
    return n;
  }
};

/// Range of Matsubara indices l represented by level n. Level n holds
/// l = 2^{n-1} .. 2^n - 1, except that the first P poles form the exact
/// leading block, so the start level begins at P + 1.
struct GroupRange {
  long first = 0;
  long last = -1;
  long size() const { return last - first + 1; }
};

inline GroupRange dyadic_group(int n) { return {1L << (n - 1), (1L << n) - 1}; }

inline GroupRange grouped_range(const MultipoleConfig& cfg, int n) {
  auto g = dyadic_group(n);
  if (g.first <= cfg.P) g.first = cfg.P + 1;
  return g;
}

/// Midpoint l_n = (3 * 2^{n-1} - 1) / 2 of the dyadic group; the group's
/// expansion centre (2 l_n - 1) pi i = (3 * 2^{n-1} - 2) pi i.
inline double group_midpoint(int n) { return (3.0 * std::ldexp(1.0, n - 1) - 1.0) / 2.0; }
inline cplx group_center(int n) { return {0.0, (3.0 * std::ldexp(1.0, n - 1) - 2.0) * std::numbers::pi}; }

/// Exact sum_{l=first}^{last} 1/(x - (2l-1) pi i).
inline cplx group_sum_exact(GroupRange g, double x) {
  cplx acc(0.0, 0.0);
  for (long l = g.last; l >= g.first; --l) acc += 1.0 / (x - matsubara_pole(l));
  return acc;
}

/// Moments a_nu = sum_l (2 (l - l_n) pi i)^nu, nu = 0..P-1.
inline std::vector<cplx> multipole_coefficients(GroupRange g, int n, int P) {
  const double ln = group_midpoint(n);
  std::vector<cplx> a(P, cplx(0.0, 0.0));
  for (long l = g.first; l <= g.last; ++l) {
    const cplx d(0.0, 2.0 * (static_cast<double>(l) - ln) * std::numbers::pi);
    cplx p(1.0, 0.0);
    for (int nu = 0; nu < P; ++nu) {
      a[nu] += p;
      p *= d;
    }
  }
  return a;
}

/// Truncated multipole sum sum_nu a_nu / (x - c)^{nu+1}.
inline cplx multipole_sum(const std::vector<cplx>& coeffs, cplx center, double x) {
  const cplx inv = 1.0 / (x - center);
  cplx acc(0.0, 0.0);
  for (auto it = coeffs.rbegin(); it != coeffs.rend(); ++it) acc = (acc + *it) * inv;
  return acc;
}

/// |S_n(x) - P-term multipole approximation| for the full dyadic group n.
inline double group_truncation_error(int n, int P, double x) {
  const auto g = dyadic_group(n);
  return std::abs(group_sum_exact(g, x) - multipole_sum(multipole_coefficients(g, n, P), group_center(n), x));
}

struct MultipoleGroup {
  int level = 0;
  GroupRange range;
  double midpoint = 0.0;
  cplx center;
  std::vector<cplx> coeffs;
};

struct MultipoleExpansion {
  MultipoleConfig config;
  std::vector<long> leading_exact;  // l = 1..P
  std::vector<MultipoleGroup> groups;

  /// 4 Re of the represented partial Matsubara sum (l = 1..M_pole).
  double partial_scalar(double x) const {
    cplx acc(0.0, 0.0);
    for (long l : leading_exact) acc += 1.0 / (x - matsubara_pole(l));
    for (const auto& g : groups) acc += multipole_sum(g.coeffs, g.center, x);
    return 4.0 * acc.real();
  }

  /// Density with the exact digamma tail.
  double density(double x) const {
    return 1.0 - partial_scalar(x) - digamma_tail_scalar(x, config.M_pole());
  }
};

inline MultipoleExpansion build_multipole_expansion(const MultipoleConfig& cfg) {
  cfg.validate();
  MultipoleExpansion e;
  e.config = cfg;
  for (long l = 1; l <= cfg.P; ++l) e.leading_exact.push_back(l);
  for (int n = cfg.start_level(); n <= cfg.N_G; ++n) {
    const auto g = grouped_range(cfg, n);
    if (g.size() <= 0) continue;
    e.groups.push_back({n, g, group_midpoint(n), group_center(n), multipole_coefficients(g, n, cfg.P)});
  }
  return e;
}

// ---------------------------------------------------------------------------
// Equivalent charges
// ---------------------------------------------------------------------------

struct TikhonovParams {
  double relative_lambda = 1e-12;  // lambda = relative_lambda * sigma_max^2
  int oversample = 2;              // collocation points = oversample * P
  bool symmetrize = true;          // enforce mirror symmetry across Re = 0
  int held_out = 64;
};

struct ChargeLevel {
  int level = 0;
  GroupRange range;
  cplx center;
  double radius = 0.0;        // r_n = 2^{n-1} pi
  double check_radius = 0.0;  // R_n = 2^n pi
  std::vector<cplx> positions;
  std::vector<cplx> charges;
  double residual = 0.0;      // held-out relative mismatch on the check circle
  double residual_raw = 0.0;  // same, before symmetrization
};

struct EquivalentChargeSet {
  MultipoleConfig config;
  std::vector<ChargeLevel> levels;
};

/// Potential sum_k rho_k / (y - x_k).
inline cplx charge_potential(const std::vector<cplx>& pos, const std::vector<cplx>& rho, cplx y) {
  cplx acc(0.0, 0.0);
  for (std::size_t k = 0; k < pos.size(); ++k) acc += rho[k] / (y - pos[k]);
  return acc;
}

/// Potential sum_{l in g} 1/(y - (2l-1) pi i) at complex y.
inline cplx group_potential(GroupRange g, cplx y) {
  cplx acc(0.0, 0.0);
  for (long l = g.last; l >= g.first; --l) acc += 1.0 / (y - matsubara_pole(l));
  return acc;
}

namespace detail {

// Max relative mismatch between charges and group on a circle.
inline double circle_mismatch(const ChargeLevel& lv, const std::vector<cplx>& rho, double radius, int count,
                              double phase) {
  double num = 0.0, den = 0.0;
  for (int m = 0; m < count; ++m) {
    const double ang = 2.0 * std::numbers::pi * (m + 0.5) / count + phase;
    const cplx y = lv.center + radius * std::polar(1.0, ang);
    const cplx truth = group_potential(lv.range, y);
    num = std::max(num, std::abs(charge_potential(lv.positions, rho, y) - truth));
    den = std::max(den, std::abs(truth));
  }
  return num / den;
}

}  // namespace detail

/// Relative mismatch of a fitted level on a circle of the given radius about c_n.
inline double charge_mismatch(const ChargeLevel& lv, double radius, int count = 64) {
  return detail::circle_mismatch(lv, lv.charges, radius, count, 0.1);
}

/// Fit P charges on the circle of radius r_n to the potential of the poles in
/// `range` on the check circle of radius R_n (Tikhonov-regularized least
/// squares in coordinates scaled by 2^{n-1} pi).
inline ChargeLevel fit_equivalent_charges(int n, GroupRange range, int P, const TikhonovParams& reg) {
  if (reg.relative_lambda < 0.0) throw std::domain_error("Tikhonov lambda must be >= 0");
  const double s = std::ldexp(std::numbers::pi, n - 1);
  ChargeLevel lv;
  lv.level = n;
  lv.range = range;
  lv.center = group_center(n);
  lv.radius = s;
  lv.check_radius = 2.0 * s;

  const cplx c = lv.center / s;
  std::vector<cplx> xs(P);
  for (int k = 0; k < P; ++k) xs[k] = c + std::polar(1.0, 2.0 * std::numbers::pi * k / P);

  const int ncol = reg.oversample * P;
  Eigen::MatrixXcd A(ncol, P);
  Eigen::VectorXcd b(ncol);
  for (int m = 0; m < ncol; ++m) {
    const cplx y = c + 2.0 * std::polar(1.0, 2.0 * std::numbers::pi * m / ncol);
    for (int k = 0; k < P; ++k) A(m, k) = 1.0 / (y - xs[k]);
    cplx acc(0.0, 0.0);
    for (long l = range.last; l >= range.first; --l) acc += 1.0 / (y - matsubara_pole(l) / s);
    b(m) = acc;
  }

  Eigen::JacobiSVD<Eigen::MatrixXcd> svd(A, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& sv = svd.singularValues();
  const double lambda = reg.relative_lambda * sv(0) * sv(0);
  Eigen::VectorXcd ub = svd.matrixU().adjoint() * b;
  for (Eigen::Index i = 0; i < sv.size(); ++i) ub(i) *= sv(i) / (sv(i) * sv(i) + lambda);
  const Eigen::VectorXcd rho = svd.matrixV() * ub;

  lv.positions.resize(P);
  std::vector<cplx> raw(P);
  for (int k = 0; k < P; ++k) {
    lv.positions[k] = xs[k] * s;
    raw[k] = rho(k);
  }
  // Mirror x -> -conj(x) about the imaginary axis maps charge k to index
  // (P/2 - k) mod P; the group potential is odd-conjugate under it.
  lv.charges = raw;
  if (reg.symmetrize && P % 2 == 0) {
    for (int k = 0; k < P; ++k) {
      const int kk = ((P / 2 - k) % P + P) % P;
      lv.charges[k] = 0.5 * (raw[k] + std::conj(raw[kk]));
    }
  }
  lv.residual_raw = detail::circle_mismatch(lv, raw, lv.check_radius, reg.held_out, 0.1);
  lv.residual = detail::circle_mismatch(lv, lv.charges, lv.check_radius, reg.held_out, 0.1);

  // Aliasing floor of P charges on radius r seen from radius 2r is ~2^-P.
  const double expected = std::ldexp(1.0, -P);
  if (!(lv.residual <= 1e2 * std::max(expected, 1e-12)))
    throw NumericalError("equivalent charge fit failed at level " + std::to_string(n) +
                         ": residual " + std::to_string(lv.residual));
  return lv;
}

inline EquivalentChargeSet build_equivalent_charges(const MultipoleConfig& cfg, const TikhonovParams& reg = {}) {
  cfg.validate();
  EquivalentChargeSet set;
  set.config = cfg;
  for (int n = cfg.start_level(); n <= cfg.N_G; ++n) {
    const auto g = grouped_range(cfg, n);
    if (g.size() <= 0) continue;
    set.levels.push_back(fit_equivalent_charges(n, g, cfg.P, reg));
  }
  return set;
}

// ---------------------------------------------------------------------------
// Chebyshev tail
// ---------------------------------------------------------------------------

/// Chebyshev interpolation coefficients of f on [lo, hi] at degree N
/// (first-kind points).
template <class F>
std::vector<double> chebyshev_coefficients(F&& f, double lo, double hi, int N) {
  const int npts = N + 1;
  std::vector<double> fv(npts);
  for (int k = 0; k < npts; ++k) {
    const double th = std::numbers::pi * (k + 0.5) / npts;
    fv[k] = f(0.5 * (lo + hi) + 0.5 * (hi - lo) * std::cos(th));
  }
  std::vector<double> c(npts);
  for (int j = 0; j < npts; ++j) {
    double acc = 0.0;
    for (int k = 0; k < npts; ++k) acc += fv[k] * std::cos(j * std::numbers::pi * (k + 0.5) / npts);
    c[j] = 2.0 * acc / npts;
  }
  c[0] *= 0.5;
  return c;
}

/// Chebyshev fit of x -> digamma_tail_scalar(x, M_pole) on [x_lo, x_hi],
/// truncated at the smallest degree whose dropped coefficients sum to at
/// most `target`.
inline TailSpec chebyshev_tail_fit(long M_pole, double x_lo, double x_hi, double target, double beta = 1.0,
                                   int max_degree = 2000) {
  if (!(x_hi > x_lo)) throw std::domain_error("chebyshev_tail_fit: empty interval");
  if (!(target > 0.0)) throw std::domain_error("chebyshev_tail_fit: target must be positive");
  auto f = [M_pole](double x) { return digamma_tail_scalar(x, M_pole); };
  std::vector<double> c;
  for (int N = 32;; N *= 2) {
    const int deg = std::min(N, max_degree);
    c = chebyshev_coefficients(f, x_lo, x_hi, deg);
    const double trailing = std::abs(c[deg]) + std::abs(c[deg - 1]) + std::abs(c[deg - 2]);
    if (trailing < 1e-3 * target) break;
    if (deg == max_degree)
      throw NumericalError("chebyshev_tail_fit: degree cap exceeded; M_pole too small for the interval");
  }
  int d = static_cast<int>(c.size()) - 1;
  double dropped = 0.0;
  while (d > 0 && dropped + std::abs(c[d]) <= target) dropped += std::abs(c[d--]);
  TailSpec t;
  t.M_pole = static_cast<int>(M_pole);
  t.beta = beta;
  t.x_lo = x_lo;
  t.x_hi = x_hi;
  t.target_accuracy = target;
  t.cheb_coeffs.assign(c.begin(), c.begin() + d + 1);
  return t;
}

// ---------------------------------------------------------------------------
// Simple-pole expansion
// ---------------------------------------------------------------------------

/// Matsubara simple-pole PoleSet: the first P poles exactly plus the
/// equivalent charges of every grouped level, in the density convention
/// rho(x) = 1 - Im sum w/(xi - x) - tail(x) with w = -4 i rho.
inline PoleSet simple_pole_set(const EquivalentChargeSet& charges, double beta = 1.0) {
  const auto& cfg = charges.config;
  PoleSet ps;
  ps.scheme = SchemeKind::Matsubara;
  ps.Q = static_cast<int>(cfg.M_pole());
  ps.beta = beta;
  ps.constant = 1.0;
  const cplx w_unit(0.0, -4.0);
  for (long l = 1; l <= cfg.P; ++l) push_upper(ps, matsubara_pole(l), w_unit);
  for (const auto& lv : charges.levels)
    for (std::size_t k = 0; k < lv.positions.size(); ++k) push_upper(ps, lv.positions[k], w_unit * lv.charges[k]);
  ps.validate();
  return ps;
}

inline PoleSet build_simple_pole_expansion(const MultipoleConfig& cfg, const TikhonovParams& reg = {},
                                           double beta = 1.0) {
  return simple_pole_set(build_equivalent_charges(cfg, reg), beta);
}

/// Simple-pole density with the exact digamma tail, dimensionless x.
inline double simple_pole_density(const PoleSet& ps, double x) {
  double acc = 0.0;
  for (std::size_t j = 0; j < ps.poles.size(); ++j) acc += (ps.weights[j] / (ps.poles[j] - x)).imag();
  return ps.constant - acc - digamma_tail_scalar(x, ps.Q);
}

}  // namespace fermipole
