#pragma once

#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "special_functions.hpp"

namespace fermipole {

enum class SchemeKind { GappedFiniteT, GappedZeroT, Gapless, Matsubara };

inline std::string to_string(SchemeKind s) {
  switch (s) {
    case SchemeKind::GappedFiniteT: return "gapped_finite_t";
    case SchemeKind::GappedZeroT: return "gapped_zero_t";
    case SchemeKind::Gapless: return "gapless";
    case SchemeKind::Matsubara: return "matsubara";
  }
  return "unknown";
}

inline SchemeKind scheme_from_string(const std::string& s) {
  if (s == "gapped_finite_t") return SchemeKind::GappedFiniteT;
  if (s == "gapped_zero_t") return SchemeKind::GappedZeroT;
  if (s == "gapless") return SchemeKind::Gapless;
  if (s == "matsubara") return SchemeKind::Matsubara;
  throw std::invalid_argument("unknown scheme tag: " + s);
}

/// Chebyshev representation of the digamma tail of a truncated Matsubara sum.
/// The interval and the fitted function use the dimensionless x = beta(E-mu).
struct TailSpec {
  int M_pole = 0;
  double beta = 1.0;
  double x_lo = -1.0;
  double x_hi = 1.0;
  std::vector<double> cheb_coeffs;  // degree N_cheb, length N_cheb + 1
  double target_accuracy = 1e-7;

  int n_cheb() const { return static_cast<int>(cheb_coeffs.size()) - 1; }

  /// Clenshaw evaluation at dimensionless x.
  double eval(double x) const {
    const double t = (2.0 * x - (x_lo + x_hi)) / (x_hi - x_lo);
    double b1 = 0.0, b2 = 0.0;
    for (int j = n_cheb(); j >= 1; --j) {
      const double b0 = cheb_coeffs[j] + 2.0 * t * b1 - b2;
      b2 = b1;
      b1 = b0;
    }
    return cheb_coeffs[0] + t * b1 - b2;
  }
};

/// A rational approximation of the density in pole form:
///
///     rho(x) = constant - Im sum_j w_j / (xi_j - x)   [- tail(x)]
///
/// Only poles in the upper half plane are stored; the Im(.) accounts for
/// their conjugates. Contour sets use the energy offset x = E - mu directly.
/// Matsubara sets are stored in the dimensionless variable beta(E - mu) and
/// `beta` converts between the two.
struct PoleSet {
  SchemeKind scheme = SchemeKind::GappedFiniteT;
  int Q = 0;  // quadrature points per loop, or M_pole for Matsubara sets
  double beta = std::numeric_limits<double>::infinity();
  double E_g = 0.0;
  double E_M = 0.0;
  std::vector<cplx> poles;
  std::vector<cplx> weights;
  double constant = 1.0;
  std::optional<TailSpec> tail;

  std::size_t size() const { return poles.size(); }
  bool dimensionless() const { return scheme == SchemeKind::Matsubara; }

  /// Pole location and weight of entry j in energy units.
  std::pair<cplx, cplx> energy_pole(std::size_t j) const {
    if (!dimensionless()) return {poles[j], weights[j]};
    return {poles[j] / beta, weights[j] / beta};
  }

  void validate() const {
    if (poles.size() != weights.size()) throw std::logic_error("PoleSet: poles/weights length mismatch");
    for (const auto& p : poles)
      if (!(p.imag() > 0.0)) throw std::logic_error("PoleSet: pole not in the upper half plane");
  }
};

/// Pole sum c - Im sum w/(xi - x), no tail.
inline double eval_pole_sum(const PoleSet& ps, double x) {
  const double xs = ps.dimensionless() ? ps.beta * x : x;
  double acc = 0.0;
  for (std::size_t j = 0; j < ps.poles.size(); ++j) acc += (ps.weights[j] / (ps.poles[j] - xs)).imag();
  return ps.constant - acc;
}

/// Density approximation at the energy offset x = E - mu, tail included.
inline double eval_scalar(const PoleSet& ps, double x) {
  double v = eval_pole_sum(ps, x);
  if (ps.tail) v -= ps.tail->eval(ps.beta * x);
  return v;
}

/// Move a lower-half-plane pole to its conjugate with the weight that leaves
/// -Im w/(xi - x) unchanged for real x.
inline void push_upper(PoleSet& ps, cplx pole, cplx weight) {
  if (pole.imag() < 0.0) {
    pole = std::conj(pole);
    weight = -std::conj(weight);
  }
  ps.poles.push_back(pole);
  ps.weights.push_back(weight);
}

// ---------------------------------------------------------------------------
// JSON pole-file format
// ---------------------------------------------------------------------------

namespace detail {
inline nlohmann::json complex_list(const std::vector<cplx>& v) {
  auto arr = nlohmann::json::array();
  for (const auto& z : v) arr.push_back({z.real(), z.imag()});
  return arr;
}
inline std::vector<cplx> complex_list(const nlohmann::json& arr) {
  std::vector<cplx> v;
  for (const auto& e : arr) v.emplace_back(e.at(0).get<double>(), e.at(1).get<double>());
  return v;
}
inline nlohmann::json finite_or_null(double v) {
  return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr);
}
}  // namespace detail

inline nlohmann::json to_json(const TailSpec& t) {
  return {{"M_pole", t.M_pole},
          {"beta", t.beta},
          {"interval", {t.x_lo, t.x_hi}},
          {"target_accuracy", t.target_accuracy},
          {"cheb_coeffs", t.cheb_coeffs}};
}

inline TailSpec tail_from_json(const nlohmann::json& j) {
  TailSpec t;
  t.M_pole = j.at("M_pole").get<int>();
  t.beta = j.at("beta").get<double>();
  t.x_lo = j.at("interval").at(0).get<double>();
  t.x_hi = j.at("interval").at(1).get<double>();
  t.target_accuracy = j.value("target_accuracy", 1e-7);
  t.cheb_coeffs = j.at("cheb_coeffs").get<std::vector<double>>();
  return t;
}

/// Serialize with infinite beta written as null.
inline nlohmann::json to_json(const PoleSet& ps) {
  nlohmann::json j = {{"scheme", to_string(ps.scheme)},
                      {"Q", ps.Q},
                      {"beta", detail::finite_or_null(ps.beta)},
                      {"E_g", ps.E_g},
                      {"E_M", ps.E_M},
                      {"poles", detail::complex_list(ps.poles)},
                      {"weights", detail::complex_list(ps.weights)},
                      {"constant", ps.constant}};
  if (ps.tail) j["tail"] = to_json(*ps.tail);
  return j;
}

inline PoleSet pole_set_from_json(const nlohmann::json& j) {
  PoleSet ps;
  ps.scheme = scheme_from_string(j.at("scheme").get<std::string>());
  ps.Q = j.at("Q").get<int>();
  ps.beta = j.at("beta").is_null() ? std::numeric_limits<double>::infinity() : j.at("beta").get<double>();
  ps.E_g = j.at("E_g").get<double>();
  ps.E_M = j.at("E_M").get<double>();
  ps.poles = detail::complex_list(j.at("poles"));
  ps.weights = detail::complex_list(j.at("weights"));
  ps.constant = j.at("constant").get<double>();
  if (j.contains("tail")) ps.tail = tail_from_json(j.at("tail"));
  ps.validate();
  return ps;
}

}  // namespace fermipole
