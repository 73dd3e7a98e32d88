#pragma once

// Rational approximations of the Fermi-Dirac function from trapezoidal
// quadrature of a contour integral. The contour comes from a conformal map
// of the rectangle [-K, K] x [0, K'] onto the upper half of
// C \ ((-inf, 0] U [m, M]) built from sn(t|k) and a Moebius transform;
// a square root then unfolds it around the spectrum of H - mu.

#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "pole_set.hpp"
#include "special_functions.hpp"

namespace fermipole {

struct MapParams {
  double m = 0.0;
  double M = 0.0;
  EllipticModulus modulus;
};

/// Conformal map data for the interval [m, M], 0 < m < M.
inline MapParams build_map(double m, double M) {
  if (!(m > 0.0)) throw std::domain_error("build_map: m must be positive");
  if (!(M > m)) throw std::domain_error("build_map: need M > m");
  const double s = std::sqrt(M / m);
  // k = (s-1)/(s+1) and k' = 2 sqrt(s)/(s+1), both free of cancellation
  const double k = (s - 1.0) / (s + 1.0);
  const double kc = 2.0 * std::sqrt(s) / (s + 1.0);
  return {m, M, EllipticModulus::from_pair(k, kc)};
}

struct QuadratureNode {
  cplx t;
  cplx z;
  cplx jacobian;  // cn(t) dn(t) / (1/k - sn(t))^2
  bool near_pole = false;
};

/// Q equispaced nodes on the mid-line Im t = K'/2 and their images.
inline std::vector<QuadratureNode> quadrature_nodes(int Q, const MapParams& map) {
  if (Q < 1) throw std::domain_error("quadrature_nodes: Q must be >= 1");
  const auto& mod = map.modulus;
  const double inv_k = 1.0 / mod.k;
  const double scale = std::sqrt(map.m * map.M);
  std::vector<QuadratureNode> nodes;
  nodes.reserve(Q);
  for (int j = 1; j <= Q; ++j) {
    const cplx t(-mod.K + 2.0 * (j - 0.5) * mod.K / Q, 0.5 * mod.K_prime);
    const auto f = jacobi_sn_cn_dn(t, mod);
    const cplx den = inv_k - f.sn;
    nodes.push_back({t, scale * (inv_k + f.sn) / den, f.cn * f.dn / (den * den), f.near_pole});
  }
  return nodes;
}

enum class ContourVariant { GappedFiniteT, GappedZeroT, Gapless };

struct ContourScheme {
  ContourVariant variant = ContourVariant::GappedFiniteT;
  double beta = std::numeric_limits<double>::infinity();
  double E_g = 0.0;
  double E_M = 0.0;

  void validate() const {
    if (variant != ContourVariant::Gapless && !(E_g > 0.0))
      throw std::domain_error("gapped contour requires E_g > 0; use the gapless scheme");
    if (variant == ContourVariant::Gapless && !std::isfinite(beta))
      throw std::domain_error("gapless contour requires finite beta");
    if (!(beta > 0.0)) throw std::domain_error("beta must be positive");
    if (!(E_M >= E_g) || !(E_M > 0.0)) throw std::domain_error("need E_M >= E_g and E_M > 0");
  }
};

namespace detail {

// Square root with the cut on [0, inf): upper half plane -> first quadrant,
// lower half plane -> second quadrant.
inline cplx sqrt_upper(cplx w) {
  cplx r = std::sqrt(w);
  if (r.imag() < 0.0 || (r.imag() == 0.0 && w.imag() < 0.0)) r = -r;
  return r;
}

// Throws if a pole sits on a singularity (2l-1) pi i / beta of tanh(beta x / 2).
inline void check_matsubara_collision(const PoleSet& ps) {
  if (!std::isfinite(ps.beta)) return;
  const double step = std::numbers::pi / ps.beta;
  for (const auto& p : ps.poles) {
    const double l = std::round((p.imag() / step + 1.0) / 2.0);
    if (l < 1.0) continue;
    const cplx sing(0.0, (2.0 * l - 1.0) * step);
    if (std::abs(p - sing) <= 1e-12 * std::abs(sing))
      throw std::runtime_error("pole coincides with a Matsubara singularity");
  }
}

inline void check_nodes(const std::vector<QuadratureNode>& nodes) {
  for (const auto& n : nodes)
    if (n.near_pole) throw std::runtime_error("quadrature node too close to a pole of sn");
}

// Two-branch rule for tanh(beta xi / 2) with xi^2 = z - shift, returned in
// density form rho = 1 - tanh.
inline PoleSet two_branch_set(SchemeKind kind, const MapParams& map, double shift, double beta, int Q) {
  const auto nodes = quadrature_nodes(Q, map);
  check_nodes(nodes);
  const auto& mod = map.modulus;
  const double pref = -2.0 * mod.K * std::sqrt(map.m * map.M) / (std::numbers::pi * Q * mod.k);
  PoleSet ps;
  ps.scheme = kind;
  ps.Q = Q;
  ps.beta = beta;
  ps.constant = 1.0;
  ps.poles.reserve(2 * Q);
  ps.weights.reserve(2 * Q);
  for (int sign : {+1, -1}) {
    for (const auto& n : nodes) {
      const cplx xi = static_cast<double>(sign) * sqrt_upper(n.z - shift);
      const cplx g = tanh_stable(0.5 * beta * xi);
      push_upper(ps, xi, pref * g * n.jacobian / xi);
    }
  }
  ps.validate();
  check_matsubara_collision(ps);
  return ps;
}

}  // namespace detail

/// Zero-temperature rule: only the loop around the occupied spectrum
/// [-E_M, -E_g] is kept. Approximates 2 for x < 0 and 0 for x > 0; N_pole = Q.
inline PoleSet sign_pole_set(double E_g, double E_M, int Q) {
  if (!(E_g > 0.0)) throw std::domain_error("sign_pole_set: E_g must be positive");
  if (!(E_M > E_g)) throw std::domain_error("sign_pole_set: need E_M > E_g");
  const MapParams map = build_map(E_g * E_g, E_M * E_M);
  const auto nodes = quadrature_nodes(Q, map);
  detail::check_nodes(nodes);
  const auto& mod = map.modulus;
  const double pref = 4.0 * mod.K * std::sqrt(map.m * map.M) / (std::numbers::pi * Q * mod.k);
  PoleSet ps;
  ps.scheme = SchemeKind::GappedZeroT;
  ps.Q = Q;
  ps.E_g = E_g;
  ps.E_M = E_M;
  ps.constant = 0.0;
  for (const auto& n : nodes) {
    const cplx xi = -detail::sqrt_upper(n.z);
    push_upper(ps, xi, pref * n.jacobian / xi);
  }
  ps.validate();
  return ps;
}

/// Gapped finite-temperature rule on a two-loop contour, m = E_g^2,
/// M = E_M^2; N_pole = 2Q. Infinite beta falls back to sign_pole_set.
inline PoleSet gapped_pole_set(double E_g, double E_M, double beta, int Q) {
  if (!(E_g > 0.0)) throw std::domain_error("gapped_pole_set: E_g must be positive (use the gapless scheme)");
  if (!(E_M > E_g)) throw std::domain_error("gapped_pole_set: need E_M > E_g");
  if (!(beta > 0.0)) throw std::domain_error("gapped_pole_set: beta must be positive");
  if (!std::isfinite(beta)) return sign_pole_set(E_g, E_M, Q);
  auto ps = detail::two_branch_set(SchemeKind::GappedFiniteT, build_map(E_g * E_g, E_M * E_M), 0.0, beta, Q);
  ps.E_g = E_g;
  ps.E_M = E_M;
  return ps;
}

/// Gapless rule on the dumbbell contour: m = pi^2/beta^2, M = E_M^2 + m and
/// xi = +-(z - m)^{1/2}. The contour crosses the imaginary axis between 0
/// and i pi/beta. N_pole = 2Q.
inline PoleSet gapless_pole_set(double E_M, double beta, int Q) {
  if (!(E_M > 0.0)) throw std::domain_error("gapless_pole_set: E_M must be positive");
  if (!(beta > 0.0) || !std::isfinite(beta))
    throw std::domain_error("gapless_pole_set: beta must be finite and positive");
  const double m = std::numbers::pi * std::numbers::pi / (beta * beta);
  auto ps = detail::two_branch_set(SchemeKind::Gapless, build_map(m, E_M * E_M + m), m, beta, Q);
  ps.E_g = 0.0;
  ps.E_M = E_M;
  return ps;
}

inline PoleSet build_contour_pole_set(const ContourScheme& scheme, int Q) {
  scheme.validate();
  switch (scheme.variant) {
    case ContourVariant::GappedFiniteT: return gapped_pole_set(scheme.E_g, scheme.E_M, scheme.beta, Q);
    case ContourVariant::GappedZeroT: return sign_pole_set(scheme.E_g, scheme.E_M, Q);
    case ContourVariant::Gapless: return gapless_pole_set(scheme.E_M, scheme.beta, Q);
  }
  throw std::logic_error("unreachable");
}

}  // namespace fermipole
