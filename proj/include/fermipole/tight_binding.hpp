#pragma once

// Two-dimensional nearest-neighbour tight-binding benchmark on an L x L
// periodic lattice with a weak random on-site potential.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <limits>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "dense_linalg.hpp"
#include "special_functions.hpp"

namespace fermipole {

struct LatticeSpec {
  int L = 32;
  bool periodic = true;
  double potential_scale = 1e-3;
  std::uint64_t seed = 20090801;

  void validate() const {
    if (L < 2) throw std::invalid_argument("LatticeSpec: L must be >= 2");
    if (!(potential_scale >= 0.0)) throw std::invalid_argument("LatticeSpec: potential_scale must be >= 0");
    if (!periodic) throw std::invalid_argument("LatticeSpec: only periodic lattices are supported");
  }
};

/// On-site potentials V_s ~ U[0, potential_scale], s = i*L + j, drawn from
/// std::mt19937_64 seeded with `seed`. Each double uses the top 53 bits of
/// one 64-bit draw, so the stream is identical on every platform.
inline std::vector<double> lattice_potential(const LatticeSpec& spec) {
  std::mt19937_64 gen(spec.seed);
  std::vector<double> v(static_cast<std::size_t>(spec.L) * spec.L);
  for (auto& x : v) x = spec.potential_scale * static_cast<double>(gen() >> 11) * 0x1.0p-53;
  return v;
}

/// H = 2 + V_s on the diagonal and -1/2 + (V_s + V_s')/2 on each bond.
/// At L = 2 the two periodic images of a bond add up.
inline SymMatrix build_hamiltonian(const LatticeSpec& spec) {
  spec.validate();
  const int L = spec.L;
  const auto v = lattice_potential(spec);
  const Eigen::Index n = static_cast<Eigen::Index>(L) * L;
  Matrix h = Matrix::Zero(n, n);
  auto site = [L](int i, int j) { return static_cast<Eigen::Index>(((i % L + L) % L) * L + ((j % L + L) % L)); };
  for (int i = 0; i < L; ++i) {
    for (int j = 0; j < L; ++j) {
      const auto s = site(i, j);
      h(s, s) += 2.0 + v[s];
      for (auto [di, dj] : {std::pair{1, 0}, std::pair{-1, 0}, std::pair{0, 1}, std::pair{0, -1}}) {
        const auto t = site(i + di, j + dj);
        h(s, t) += -0.5 + 0.5 * (v[s] + v[t]);
      }
    }
  }
  return SymMatrix(std::move(h));
}

/// Analytic spectrum of the V = 0 lattice, 2 - cos(2 pi p/L) - cos(2 pi q/L).
inline std::vector<double> free_lattice_spectrum(int L) {
  std::vector<double> e;
  e.reserve(static_cast<std::size_t>(L) * L);
  for (int p = 0; p < L; ++p)
    for (int q = 0; q < L; ++q)
      e.push_back(2.0 - std::cos(2.0 * std::numbers::pi * p / L) - std::cos(2.0 * std::numbers::pi * q / L));
  std::sort(e.begin(), e.end());
  return e;
}

/// Occupation sum_i 2/(1 + exp(beta (lambda_i - mu))); infinite beta gives
/// step filling with weight 1 for lambda_i == mu.
inline double occupation(const Vector& eigs, double beta, double mu) {
  double acc = 0.0;
  for (Eigen::Index i = 0; i < eigs.size(); ++i) {
    const double d = eigs(i) - mu;
    acc += std::isfinite(beta) ? fermi_scalar(beta * d) : (d < 0 ? 2.0 : d > 0 ? 0.0 : 1.0);
  }
  return acc;
}

/// Chemical potential with occupation(mu) = N_electron, by bisection.
inline double chemical_potential_for_count(const Vector& eigs, double beta, double n_electron) {
  const double n = static_cast<double>(eigs.size());
  if (!(n_electron > 0.0 && n_electron < 2.0 * n))
    throw std::domain_error("chemical_potential_for_count: need 0 < N_electron < 2n");
  if (!std::isfinite(beta)) {
    const auto filled = static_cast<Eigen::Index>(std::ceil(n_electron / 2.0));
    return 0.5 * (eigs(filled - 1) + eigs(filled));
  }
  double lo = eigs.minCoeff() - 1.0, hi = eigs.maxCoeff() + 1.0;
  if (occupation(eigs, beta, lo) > n_electron || occupation(eigs, beta, hi) < n_electron)
    throw NumericalError("chemical_potential_for_count: bracket does not contain the root");
  double mid = 0.5 * (lo + hi);
  for (int it = 0; it < 200; ++it) {
    mid = 0.5 * (lo + hi);
    const double f = occupation(eigs, beta, mid) - n_electron;
    if (std::abs(f) <= 1e-10) break;
    (f < 0 ? lo : hi) = mid;
    if (hi - lo <= 4.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(mid))) break;
  }
  return mid;
}

/// Number of electrons for the closed shell at or below half filling: the
/// largest count 2c <= n with lambda_c - lambda_{c-1} >= min_gap.
inline double closed_shell_electrons(const Vector& eigs, double min_gap) {
  for (Eigen::Index c = eigs.size() / 2; c >= 1; --c)
    if (eigs(c) - eigs(c - 1) >= min_gap) return 2.0 * static_cast<double>(c);
  throw NumericalError("closed_shell_electrons: no gap of the requested size below half filling");
}

struct SpectralWindow {
  double mu = 0.0;
  double E_g = 0.0;
  double E_M = 0.0;
  double E_min = 0.0;
  double E_max = 0.0;
  double beta = 0.0;
  double beta_deltaE = 0.0;

  double delta_E() const { return E_max - E_min; }
};

inline SpectralWindow spectral_window(const Vector& eigs, double mu, double beta) {
  if (eigs.size() == 0) throw std::invalid_argument("spectral_window: empty spectrum");
  SpectralWindow w;
  w.mu = mu;
  w.beta = beta;
  w.E_min = eigs.minCoeff();
  w.E_max = eigs.maxCoeff();
  w.E_g = (eigs.array() - mu).abs().minCoeff();
  w.E_M = (eigs.array() - mu).abs().maxCoeff();
  w.beta_deltaE = beta * (w.E_max - w.E_min);
  return w;
}

/// Plain-text matrix file: "n" on the first line, then n rows of n entries.
inline void write_matrix_file(const std::string& path, const SymMatrix& h) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path);
  out << h.n() << '\n' << std::setprecision(17);
  for (Eigen::Index i = 0; i < h.n(); ++i) {
    for (Eigen::Index j = 0; j < h.n(); ++j) out << (j ? " " : "") << h(i, j);
    out << '\n';
  }
}

inline SymMatrix read_matrix_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  Eigen::Index n = 0;
  in >> n;
  if (n < 1) throw std::runtime_error("bad matrix header in " + path);
  Matrix a(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j)
      if (!(in >> a(i, j))) throw std::runtime_error("truncated matrix file " + path);
  return SymMatrix(std::move(a));
}

}  // namespace fermipole
