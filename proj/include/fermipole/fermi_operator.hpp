#pragma once

// Apply a pole expansion (plus optional Chebyshev tail) to a Hamiltonian and
// compare with the eigendecomposition oracle.

#include <algorithm>
#include <cmath>
#include <exception>
#include <fstream>
#include <functional>
#include <iomanip>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "contour_quadrature.hpp"
#include "dense_linalg.hpp"
#include "errors.hpp"
#include "pole_set.hpp"
#include "special_functions.hpp"

namespace fermipole {

struct DensityResult {
  Vector diagonal;
  std::optional<Matrix> full_matrix;
  double electron_count = 0.0;
  std::string method_tag;
  int n_pole_used = 0;
  int n_cheb_used = 0;
};

enum class Backend {
  Resolvent,  // one LU per pole, solves against the identity
  Eigen,      // same rational function applied in the eigenbasis of H
};

inline Backend backend_from_string(const std::string& s) {
  if (s == "resolvent") return Backend::Resolvent;
  if (s == "eigen") return Backend::Eigen;
  throw std::invalid_argument("unknown backend: " + s);
}

inline std::string to_string(Backend b) { return b == Backend::Resolvent ? "resolvent" : "eigen"; }

struct ApplyOptions {
  Backend backend = Backend::Resolvent;
  int parallel = 1;             // worker threads for the per-pole solves
  bool full_matrix = false;     // keep the full density matrix
  int block = 64;               // identity columns per solve
  double drop_tolerance = 0.0;  // zero entries below this in the matrix Clenshaw recurrence
  const EigDecomposition* eig = nullptr;  // reused by the eigen backend when given
};

namespace detail {

inline DensityResult finish(Vector diag, std::optional<Matrix> full, std::string tag, int n_pole, int n_cheb) {
  DensityResult r;
  r.electron_count = diag.sum();
  r.diagonal = std::move(diag);
  r.full_matrix = std::move(full);
  r.method_tag = std::move(tag);
  r.n_pole_used = n_pole;
  r.n_cheb_used = n_cheb;
  return r;
}

inline const TailSpec* resolve_tail(const PoleSet& ps, const std::optional<TailSpec>& tail) {
  const TailSpec* t = tail ? &*tail : (ps.tail ? &*ps.tail : nullptr);
  if (ps.dimensionless() && !t)
    throw std::invalid_argument("apply_pole_expansion: Matsubara pole set requires a tail");
  if (!ps.dimensionless() && t)
    throw std::invalid_argument("apply_pole_expansion: tail given for a contour pole set");
  return t;
}

// -Im(w (xi - A)^{-1}) for one pole, as diagonal or full matrix.
inline void pole_contribution(const SymMatrix& a, cplx xi, cplx w, int block, bool full, Vector& diag,
                              Matrix& mat) {
  const Eigen::Index n = a.n();
  const ShiftedLU lu(a, xi);
  diag = Vector::Zero(n);
  if (full) mat = Matrix::Zero(n, n);
  for (Eigen::Index c0 = 0; c0 < n; c0 += block) {
    const Eigen::Index nb = std::min<Eigen::Index>(block, n - c0);
    CMatrix rhs = CMatrix::Zero(n, nb);
    for (Eigen::Index k = 0; k < nb; ++k) rhs(c0 + k, k) = 1.0;
    const CMatrix x = lu.solve(rhs);
    for (Eigen::Index k = 0; k < nb; ++k) diag(c0 + k) = -(w * x(c0 + k, k)).imag();
    if (full) mat.middleCols(c0, nb) = -(w * x.array()).imag().matrix();
  }
}

// sum_j c_j T_j(t) for a matrix argument by the Clenshaw recurrence.
inline Matrix chebyshev_matrix(const TailSpec& t, const Matrix& x, double drop_tolerance) {
  const Eigen::Index n = x.rows();
  Matrix tt = (2.0 * x - (t.x_lo + t.x_hi) * Matrix::Identity(n, n)) / (t.x_hi - t.x_lo);
  Matrix b1 = Matrix::Zero(n, n), b2 = Matrix::Zero(n, n);
  auto drop = [drop_tolerance](Matrix& m) {
    if (drop_tolerance > 0.0) m = (m.array().abs() < drop_tolerance).select(0.0, m);
  };
  for (int j = t.n_cheb(); j >= 1; --j) {
    Matrix b0 = 2.0 * (tt * b1) - b2;
    b0.diagonal().array() += t.cheb_coeffs[j];
    drop(b0);
    b2 = std::move(b1);
    b1 = std::move(b0);
  }
  Matrix out = tt * b1 - b2;
  out.diagonal().array() += t.cheb_coeffs[0];
  return out;
}

}  // namespace detail

/// Scalar expansion c - Im sum_j w_j / (xi_j - x) [- tail(beta x)] at each
/// x = lambda_i - mu, poles summed in ascending index.
inline Vector spectral_values(const Vector& eigs, double mu, const PoleSet& ps, const TailSpec* tail) {
  Vector r(eigs.size());
  for (Eigen::Index i = 0; i < eigs.size(); ++i) {
    const double x = eigs(i) - mu;
    double acc = 0.0;
    for (std::size_t j = 0; j < ps.size(); ++j) {
      const auto [xi, w] = ps.energy_pole(j);
      acc += (w / (xi - x)).imag();
    }
    r(i) = ps.constant - acc;
    if (tail) r(i) -= tail->eval(ps.beta * x);
  }
  return r;
}

/// Density c I - Im sum_j w_j (xi_j - (H - mu))^{-1} [- tail(beta (H - mu))].
/// Matsubara sets are rescaled to energy units first. Pole contributions are
/// accumulated in ascending pole index whatever the worker count.
inline DensityResult apply_pole_expansion(const SymMatrix& H, double mu, const PoleSet& ps,
                                          const std::optional<TailSpec>& tail = std::nullopt,
                                          const ApplyOptions& opts = {}) {
  ps.validate();
  const TailSpec* t = detail::resolve_tail(ps, tail);
  if (ps.dimensionless() && !(ps.beta > 0.0 && std::isfinite(ps.beta)))
    throw std::invalid_argument("apply_pole_expansion: Matsubara set needs a finite beta");
  const Eigen::Index n = H.n();
  const int n_pole = static_cast<int>(ps.size());
  const int n_cheb = t ? t->n_cheb() : 0;
  const std::string tag = to_string(ps.scheme) + "/" + to_string(opts.backend);

  if (opts.backend == Backend::Eigen) {
    std::optional<EigDecomposition> own;
    if (!opts.eig) own = sym_eig(H);
    const EigDecomposition& eig = opts.eig ? *opts.eig : *own;
    if (eig.eigenvalues.size() != n) throw std::invalid_argument("apply_pole_expansion: eigendecomposition size");
    const Vector r = spectral_values(eig.eigenvalues, mu, ps, t);
    Vector diag = eig.eigenvectors.array().square().matrix() * r;
    std::optional<Matrix> full;
    if (opts.full_matrix) full = eig.eigenvectors * r.asDiagonal() * eig.eigenvectors.transpose();
    return detail::finish(std::move(diag), std::move(full), tag, n_pole, n_cheb);
  }

  Matrix am = H.matrix();
  am.diagonal().array() -= mu;
  const SymMatrix a(am);
  const int block = std::max(1, opts.block);
  const int workers = std::max(1, std::min(opts.parallel, std::max(1, n_pole)));

  Vector diag = Vector::Constant(n, ps.constant);
  std::optional<Matrix> full;
  if (opts.full_matrix) {
    full = Matrix::Identity(n, n);
    *full *= ps.constant;
  }

  // Batches of `workers` poles: solve concurrently, then reduce in index order.
  std::vector<Vector> bd(workers);
  std::vector<Matrix> bm(workers);
  for (int j0 = 0; j0 < n_pole; j0 += workers) {
    const int nb = std::min(workers, n_pole - j0);
    std::vector<std::exception_ptr> errs(nb);
    auto job = [&](int k) {
      try {
        const auto [xi, w] = ps.energy_pole(j0 + k);
        detail::pole_contribution(a, xi, w, block, opts.full_matrix, bd[k], bm[k]);
      } catch (...) {
        errs[k] = std::current_exception();
      }
    };
    if (nb == 1) {
      job(0);
    } else {
      std::vector<std::thread> th;
      for (int k = 0; k < nb; ++k) th.emplace_back(job, k);
      for (auto& x : th) x.join();
    }
    for (int k = 0; k < nb; ++k) {
      if (errs[k]) std::rethrow_exception(errs[k]);
      diag += bd[k];
      if (full) *full += bm[k];
    }
  }

  if (t) {
    const Matrix tm = detail::chebyshev_matrix(*t, ps.beta * am, opts.drop_tolerance);
    diag -= tm.diagonal();
    if (full) *full -= tm;
  }
  return detail::finish(std::move(diag), std::move(full), tag, n_pole, n_cheb);
}

/// Oracle 2 / (1 + exp(beta (H - mu))) from the eigendecomposition; infinite
/// beta gives step filling with 1 at lambda == mu.
inline DensityResult exact_density(const SymMatrix& H, double mu, double beta, bool full_matrix = false,
                                   const EigDecomposition* eig = nullptr) {
  if (!(beta > 0.0)) throw std::domain_error("exact_density: beta must be positive");
  std::optional<EigDecomposition> own;
  if (!eig) own = sym_eig(H);
  const EigDecomposition& e = eig ? *eig : *own;
  auto f = [mu, beta](double lam) {
    const double d = lam - mu;
    if (!std::isfinite(beta)) return d < 0.0 ? 2.0 : d > 0.0 ? 0.0 : 1.0;
    return fermi_scalar(beta * d);
  };
  Vector diag = matrix_function_diagonal(e, f);
  std::optional<Matrix> full;
  if (full_matrix) full = matrix_function(e, f);
  return detail::finish(std::move(diag), std::move(full), "exact", 0, 0);
}

/// sum_i |approx_i - exact_i| / N_electron.
inline double delta_rho_rel(const DensityResult& approx, const DensityResult& exact, double n_electron) {
  if (approx.diagonal.size() != exact.diagonal.size())
    throw std::invalid_argument("delta_rho_rel: dimension mismatch");
  if (!(n_electron > 0.0)) throw std::domain_error("delta_rho_rel: N_electron must be positive");
  return (approx.diagonal - exact.diagonal).cwiseAbs().sum() / n_electron;
}

/// Trace norm tr|P_approx - P_exact| / N_electron; needs both full matrices.
inline double trace_norm_error(const DensityResult& approx, const DensityResult& exact, double n_electron) {
  if (!approx.full_matrix || !exact.full_matrix)
    throw std::invalid_argument("trace_norm_error: full matrices required");
  if (approx.full_matrix->rows() != exact.full_matrix->rows())
    throw std::invalid_argument("trace_norm_error: dimension mismatch");
  if (!(n_electron > 0.0)) throw std::domain_error("trace_norm_error: N_electron must be positive");
  const Matrix d = *approx.full_matrix - *exact.full_matrix;
  const Matrix sym = 0.5 * (d + d.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> es(sym, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw NumericalError("trace_norm_error: eigensolver failed");
  return es.eigenvalues().cwiseAbs().sum() / n_electron;
}

/// Density-profile error L1 over the diagonal, or trace norm of the matrix error.
enum class ErrorMetric { TraceNorm, DensityProfile };

inline ErrorMetric metric_from_string(const std::string& s) {
  if (s == "trace") return ErrorMetric::TraceNorm;
  if (s == "diagonal") return ErrorMetric::DensityProfile;
  throw std::invalid_argument("unknown error metric: " + s);
}

inline std::string to_string(ErrorMetric m) { return m == ErrorMetric::TraceNorm ? "trace" : "diagonal"; }

// ---------------------------------------------------------------------------
// N_pole search
// ---------------------------------------------------------------------------

struct NpoleSearchPolicy {
  int start = 4;  // first grid point tried; a warm start steps down if it already passes
  int step = 4;
  int cap = 400;
};

struct NpoleResult {
  int n_pole = 0;
  double achieved = 0.0;
  std::vector<std::pair<int, double>> trace;  // every (N_pole, error) evaluated
};

/// Smallest N_pole on the grid {step, 2 step, ...} with error(N_pole) <= tol.
template <class ErrorAt>
NpoleResult minimal_npole(ErrorAt&& error_at, double tol, const NpoleSearchPolicy& search = {}) {
  if (!(tol > 0.0)) throw std::domain_error("minimal_npole: tol must be positive");
  if (search.step < 1 || search.start < search.step || search.start % search.step != 0)
    throw std::domain_error("minimal_npole: start must be a positive multiple of step");
  NpoleResult r;
  auto eval = [&](int np) {
    const double e = error_at(np);
    r.trace.emplace_back(np, e);
    return e;
  };
  int np = search.start;
  double e = eval(np);
  if (e <= tol) {
    while (np - search.step >= search.step) {
      const double ed = eval(np - search.step);
      if (!(ed <= tol)) break;
      np -= search.step;
      e = ed;
    }
    r.n_pole = np;
    r.achieved = e;
    return r;
  }
  while (!(e <= tol)) {
    np += search.step;
    if (np > search.cap) throw NumericalError("minimal_npole: search cap " + std::to_string(search.cap) + " exceeded");
    e = eval(np);
  }
  r.n_pole = np;
  r.achieved = e;
  return r;
}

/// Quadrature points per loop for a given pole count.
inline int contour_q_for_npole(const ContourScheme& scheme, int n_pole) {
  if (scheme.variant == ContourVariant::GappedZeroT) return n_pole;
  if (n_pole % 2 != 0) throw std::domain_error("two-branch contour schemes need an even N_pole");
  return n_pole / 2;
}

/// Error of pole expansions against the oracle for one (H, mu, beta). With
/// the eigen backend the trace norm is sum_k |r(lambda_k) - f(lambda_k)|.
class ExpansionError {
 public:
  ExpansionError(const SymMatrix& H, const EigDecomposition& eig, double mu, double beta, ErrorMetric metric,
                 ApplyOptions opts = {})
      : h_(&H), eig_(&eig), mu_(mu), beta_(beta), metric_(metric), opts_(opts) {
    opts_.eig = &eig;
    const bool need_full = metric == ErrorMetric::TraceNorm && opts.backend == Backend::Resolvent;
    exact_ = exact_density(H, mu, beta, need_full, &eig);
    exact_values_.resize(eig.eigenvalues.size());
    for (Eigen::Index i = 0; i < exact_values_.size(); ++i) {
      const double d = eig.eigenvalues(i) - mu;
      exact_values_(i) = std::isfinite(beta) ? fermi_scalar(beta * d) : (d < 0.0 ? 2.0 : d > 0.0 ? 0.0 : 1.0);
    }
    n_electron_ = exact_values_.sum();
  }

  double n_electron() const { return n_electron_; }
  const DensityResult& exact() const { return exact_; }

  double operator()(const PoleSet& ps, const std::optional<TailSpec>& tail = std::nullopt) const {
    if (metric_ == ErrorMetric::TraceNorm && opts_.backend == Backend::Eigen) {
      const TailSpec* t = detail::resolve_tail(ps, tail);
      return (spectral_values(eig_->eigenvalues, mu_, ps, t) - exact_values_).cwiseAbs().sum() / n_electron_;
    }
    ApplyOptions o = opts_;
    o.full_matrix = metric_ == ErrorMetric::TraceNorm;
    const auto approx = apply_pole_expansion(*h_, mu_, ps, tail, o);
    return metric_ == ErrorMetric::TraceNorm ? trace_norm_error(approx, exact_, n_electron_)
                                             : delta_rho_rel(approx, exact_, n_electron_);
  }

 private:
  const SymMatrix* h_;
  const EigDecomposition* eig_;
  double mu_;
  double beta_;
  ErrorMetric metric_;
  ApplyOptions opts_;
  DensityResult exact_;
  Vector exact_values_;
  double n_electron_ = 0.0;
};

/// Minimal N_pole of a contour scheme on H against the oracle at scheme.beta.
inline NpoleResult minimal_npole(const SymMatrix& H, double mu, const ContourScheme& scheme, double tol,
                                 const NpoleSearchPolicy& search = {}, const ApplyOptions& opts = {},
                                 ErrorMetric metric = ErrorMetric::DensityProfile) {
  std::optional<EigDecomposition> own;
  if (!opts.eig) own = sym_eig(H);
  const ExpansionError err(H, opts.eig ? *opts.eig : *own, mu, scheme.beta, metric, opts);
  return minimal_npole(
      [&](int np) { return err(build_contour_pole_set(scheme, contour_q_for_npole(scheme, np))); }, tol, search);
}

/// CSV with columns site, approx, exact, abs_diff.
inline void write_density_csv(const std::string& path, const DensityResult& approx, const DensityResult& exact) {
  if (approx.diagonal.size() != exact.diagonal.size())
    throw std::invalid_argument("write_density_csv: dimension mismatch");
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path);
  out << "site,approx,exact,abs_diff\n" << std::setprecision(17);
  for (Eigen::Index i = 0; i < approx.diagonal.size(); ++i)
    out << i << ',' << approx.diagonal(i) << ',' << exact.diagonal(i) << ','
        << std::abs(approx.diagonal(i) - exact.diagonal(i)) << '\n';
}

}  // namespace fermipole
