#pragma once

// Model parameters and coefficient forms for the size-structured fishery.
//
// Every solver in this library is a template over a CoefficientModel: a type
// that exposes growth g(E,l), natural mortality mu(E,l), the crowding kernel
// chi(l), the unit price c(l), fertility m(l), the two crowding sensitivities
// dg/dE and dmu/dE, and a ModelParams block for the scalar constants
// (domain, inflow, discount rate, harvest cap, horizon). VonBertalanffyForms
// is the calibrated case-study model; tests plug in constant-coefficient
// forms to check the solvers against closed-form solutions.

#include <cmath>
#include <concepts>
#include <stdexcept>
#include <string>
#include <vector>

namespace structured_harvest {

struct ModelParams {
  double l0 = 20.0;        // entry size (cm)
  double lm = 130.0;       // upper boundary size (cm)
  double L_inf = 135.3;    // asymptotic length (cm)
  double K = 0.17;         // Brody growth coefficient (1/yr)
  double alpha = 5e-6;     // growth crowding sensitivity (1/individual)
  double mu0 = 0.20;       // baseline natural mortality (1/yr)
  double mu1 = 1e-7;       // crowding mortality sensitivity (1/(yr*individual))
  double chi = 1e-4;       // crowding kernel coefficient (1/cm^2)
  double c0 = 1e-5;        // price coefficient ($/cm^3)
  double m0 = 2.0;         // fertility scale (1/yr)
  double l_mat = 50.0;     // maturation length (cm)
  double p = 5e4;          // external inflow flux (individuals/yr)
  double r = 0.05;         // discount rate (1/yr)
  double u_max = 0.5;      // maximum harvest intensity (1/yr)
  double T = 60.0;         // simulation horizon (yr)

  friend bool operator==(const ModelParams&, const ModelParams&) = default;
};

/// Calibrated Atlantic-cod-like case study.
inline ModelParams case_study_params() { return ModelParams{}; }

template <class M>
concept CoefficientModel = requires(const M& m, double E, double l) {
  { m.params() } -> std::convertible_to<const ModelParams&>;
  { m.growth(E, l) } -> std::convertible_to<double>;
  { m.mortality(E, l) } -> std::convertible_to<double>;
  { m.kernel(l) } -> std::convertible_to<double>;
  { m.price(l) } -> std::convertible_to<double>;
  { m.fertility(l) } -> std::convertible_to<double>;
  { m.growth_dE(E, l) } -> std::convertible_to<double>;
  { m.mortality_dE(E, l) } -> std::convertible_to<double>;
};

/// Models that know their growth maximum analytically; others get a grid scan.
template <class M>
concept HasAnalyticMaxGrowth = requires(const M& m) {
  { m.max_growth() } -> std::convertible_to<double>;
};

/// Density-dependent von Bertalanffy growth, linear crowding mortality,
/// size-squared kernel, cubic price and cubic fertility above maturation.
///
/// Member functions are unchecked so they can sit in inner loops; the free
/// functions below validate the domain.
class VonBertalanffyForms {
 public:
  VonBertalanffyForms() = default;
  explicit VonBertalanffyForms(const ModelParams& params) : params_(params) {}

  const ModelParams& params() const noexcept { return params_; }

  double growth(double E, double l) const noexcept {
    return params_.K * (params_.L_inf - l) / (1.0 + params_.alpha * E);
  }
  double mortality(double E, double /*l*/) const noexcept {
    return params_.mu0 + params_.mu1 * E;
  }
  double kernel(double l) const noexcept { return params_.chi * l * l; }
  double price(double l) const noexcept { return params_.c0 * l * l * l; }
  double fertility(double l) const noexcept {
    if (l < params_.l_mat) return 0.0;
    const double s = l / params_.lm;
    return params_.m0 * s * s * s;
  }
  double growth_dE(double E, double l) const noexcept {
    const double d = 1.0 + params_.alpha * E;
    return -params_.alpha * params_.K * (params_.L_inf - l) / (d * d);
  }
  double mortality_dE(double /*E*/, double /*l*/) const noexcept { return params_.mu1; }

  // g is decreasing in both E and l, so the maximum sits at (0, l0).
  double max_growth() const noexcept { return params_.K * (params_.L_inf - params_.l0); }

 private:
  ModelParams params_{};
};

static_assert(CoefficientModel<VonBertalanffyForms>);

// ---------------------------------------------------------------------------
// Checked scalar evaluation

namespace detail {

inline void require_size(const ModelParams& p, double l) {
  if (!(l >= p.l0 && l <= p.lm)) {
    throw std::domain_error("length " + std::to_string(l) + " outside [" + std::to_string(p.l0) +
                            ", " + std::to_string(p.lm) + "]");
  }
}

inline void require_crowding(double E) {
  if (!(E >= 0.0)) throw std::domain_error("crowding index must be non-negative");
}

}  // namespace detail

inline double growth_rate(const ModelParams& p, double E, double l) {
  detail::require_crowding(E);
  detail::require_size(p, l);
  return VonBertalanffyForms(p).growth(E, l);
}

inline double natural_mortality(const ModelParams& p, double E, double l) {
  detail::require_crowding(E);
  detail::require_size(p, l);
  return VonBertalanffyForms(p).mortality(E, l);
}

inline double crowding_kernel(const ModelParams& p, double l) {
  detail::require_size(p, l);
  return VonBertalanffyForms(p).kernel(l);
}

inline double price(const ModelParams& p, double l) {
  detail::require_size(p, l);
  return VonBertalanffyForms(p).price(l);
}

inline double fertility(const ModelParams& p, double l) {
  detail::require_size(p, l);
  return VonBertalanffyForms(p).fertility(l);
}

// ---------------------------------------------------------------------------
// Validation

struct ParamIssue {
  std::string field;
  std::string message;
};

struct ParamReport {
  std::vector<ParamIssue> errors;
  std::vector<ParamIssue> warnings;

  bool ok() const noexcept { return errors.empty(); }
};

/// Checks the standing assumptions. Problems are collected, never thrown, so
/// a caller can print all of them at once.
inline ParamReport validate_params(const ModelParams& p) {
  ParamReport report;
  auto error = [&](std::string field, std::string msg) {
    report.errors.push_back({std::move(field), std::move(msg)});
  };

  if (!(p.l0 < p.lm)) error("l0", "l0 < l_m required");
  if (!(p.lm < p.L_inf)) error("L_inf", "l_m < L_inf required");
  if (!(p.l0 > 0.0)) error("l0", "l0 > 0 required");

  const struct {
    const char* name;
    double value;
  } positive[] = {{"K", p.K},   {"chi", p.chi},     {"c0", p.c0}, {"r", p.r},
                  {"u_max", p.u_max}, {"T", p.T}};
  for (const auto& [name, value] : positive) {
    if (!(value > 0.0)) error(name, std::string(name) + " > 0 required");
  }

  const struct {
    const char* name;
    double value;
  } non_negative[] = {{"mu0", p.mu0}, {"mu1", p.mu1}, {"alpha", p.alpha}, {"m0", p.m0}};
  for (const auto& [name, value] : non_negative) {
    if (!(value >= 0.0)) error(name, std::string(name) + " >= 0 required");
  }

  if (!(p.l_mat >= p.l0 && p.l_mat <= p.lm)) error("l_mat", "l0 <= l_mat <= l_m required");

  if (p.p < 0.0) {
    error("p", "p >= 0 required");
  } else if (p.p == 0.0) {
    report.warnings.push_back({"p", "p > 0 required for a positive stationary crowding level"});
  }
  return report;
}

}  // namespace structured_harvest
