#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include <boost/math/quadrature/trapezoidal.hpp>

#include "nvelec/errors.hpp"
#include "nvelec/fit.hpp"
#include "nvelec/spectrum.hpp"

namespace nvelec {

// Off-resonant orientations contribute 5/3 R0 in a (111)-cut sample.
inline constexpr double offresonant_orientation_factor = 5.0 / 3.0;

struct ProtocolParams {
  double p_pi = 0.77;          // Lorentzian lineshape factor
  double p_f = 0.39;
  double c0 = 0.21;            // maximum CW contrast
  double chi_eff = 6.97;       // Hz/(V/cm)
  double chi_e_par = 0.7;      // MHz/(V/cm)
  double chi_e_perp = 1.4;     // MHz/(V/cm)
  double kappa0_g = 0.2;       // MHz
  double kappaE_g = 3.7;       // MHz at the reference density
  double kappa0_e = 1e4;       // MHz
  double kappaE_e = 1e6;       // MHz at the reference density
  double kappa_ref = 2e6;      // MHz
  double reference_density = 8.0;     // ppm NV
  double reference_count_rate = 0.0;  // R0 at reference density and volume; 0 = derived default
  double reference_volume = 0.1;      // mm^3
  double illumination_volume = 0.1;   // mm^3

  // R0 back-computed from the tabulated total rate 2.4e15 counts/s of the
  // reference sample, R = R0 (r + 5/3).
  double r0_reference() const {
    if (reference_count_rate > 0.0) return reference_count_rate;
    const double r = kappa_ref / (kappa0_e + kappaE_e);
    return 2.4e15 / (r + offresonant_orientation_factor);
  }

  void validate() const {
    const double v[] = {p_pi, p_f, c0, chi_eff, chi_e_par, chi_e_perp, kappa0_g, kappa0_e, kappa_ref,
                        reference_density, reference_volume, illumination_volume};
    for (double x : v)
      if (!(x > 0.0) || !std::isfinite(x)) throw DomainError("protocol parameters must be positive");
    if (!(kappaE_g >= 0.0 && kappaE_e >= 0.0 && reference_count_rate >= 0.0))
      throw DomainError("protocol broadening slopes and reference rate must be non-negative");
    if (!(c0 < 1.0)) throw DomainError("c0 must lie in (0, 1)");
    if (!(p_pi < 1.0 && p_f < 1.0)) throw DomainError("lineshape factors must lie in (0, 1)");
  }
};

// Intrinsic plus charge-induced width, kappa0 + kappaE (rho / rho_ref)^(2/3).
inline double linewidth_model(double rho_nv_ppm, double kappa0, double kappaE, double reference_density) {
  if (!(rho_nv_ppm >= 0.0) || !(reference_density > 0.0)) throw DomainError("linewidth_model: bad density");
  return kappa0 + kappaE * std::pow(rho_nv_ppm / reference_density, 2.0 / 3.0);
}

inline double optical_linewidth(double rho_nv_ppm, const ProtocolParams& p) {
  return linewidth_model(rho_nv_ppm, p.kappa0_e, p.kappaE_e, p.reference_density);
}

inline double odmr_linewidth(double rho_nv_ppm, const ProtocolParams& p) {
  return linewidth_model(rho_nv_ppm, p.kappa0_g, p.kappaE_g, p.reference_density);
}

// Fluorescence enhancement of resonant configurations.
inline double resonant_enhancement(double rho_nv_ppm, const ProtocolParams& p) {
  return p.kappa_ref / optical_linewidth(rho_nv_ppm, p);
}

struct CountRate {
  double rate = 0.0;        // counts/s
  double c_r = 0.0;         // resonant share of all photons
  double r0 = 0.0;          // single off-resonant orientation, counts/s
};

inline CountRate count_rate_and_contrast(double rho_nv_ppm, const ProtocolParams& p) {
  p.validate();
  const double r = resonant_enhancement(rho_nv_ppm, p);
  CountRate c;
  c.r0 = p.r0_reference() * (rho_nv_ppm / p.reference_density) * (p.illumination_volume / p.reference_volume);
  c.rate = c.r0 * (r + offresonant_orientation_factor);
  c.c_r = r / (r + offresonant_orientation_factor);
  return c;
}

struct SensitivityBreakdown {
  double rho_nv_ppm = 0.0;
  double eta_pi = 0.0, eta_f = 0.0, eta_total = 0.0;  // V/cm/sqrt(Hz)
  double gamma_g = 0.0, gamma_e = 0.0;                // MHz
  double r_enh = 0.0, c_r = 0.0, count_rate = 0.0;
};

// Shot-noise limited sensitivity of one channel: p Gamma / (chi C sqrt(R)).
// Gamma and chi must share the frequency unit.
inline double channel_sensitivity(double p, double gamma, double chi, double contrast, double rate) {
  if (!(rate > 0.0)) throw DomainError("sensitivity: count rate must be positive");
  return p * gamma / (chi * contrast * std::sqrt(rate));
}

inline SensitivityBreakdown sensitivity_breakdown(double rho_nv_ppm, const ProtocolParams& p) {
  const auto cr = count_rate_and_contrast(rho_nv_ppm, p);
  SensitivityBreakdown s;
  s.rho_nv_ppm = rho_nv_ppm;
  s.gamma_g = odmr_linewidth(rho_nv_ppm, p);
  s.gamma_e = optical_linewidth(rho_nv_ppm, p);
  s.r_enh = resonant_enhancement(rho_nv_ppm, p);
  s.c_r = cr.c_r;
  s.count_rate = cr.rate;
  s.eta_pi = channel_sensitivity(p.p_pi, s.gamma_g * 1e6, p.chi_eff, p.c0 * s.c_r, s.count_rate);
  s.eta_f = channel_sensitivity(p.p_f, s.gamma_e * 1e6, p.chi_e_par * 1e6, s.c_r, s.count_rate);
  s.eta_total = 1.0 / (1.0 / s.eta_pi + 1.0 / s.eta_f);
  return s;
}

// Off-resonant ensemble reference: all photons scattered off resonantly, no
// resonant-share penalty. Rate 5e14 counts/s per ppm, contrast 0.02.
struct ConventionalProtocol {
  double p = 0.77;
  double chi = 17.0;             // Hz/(V/cm)
  double contrast = 0.02;
  double rate_per_ppm = 5e14;    // counts/s
};

inline double conventional_sensitivity(double rho_nv_ppm, const ProtocolParams& p, const ConventionalProtocol& c = {}) {
  return channel_sensitivity(c.p, odmr_linewidth(rho_nv_ppm, p) * 1e6, c.chi, c.contrast, c.rate_per_ppm * rho_nv_ppm);
}

// OLS slope of log y against log x.
inline double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw DomainError("loglog_slope: need at least 2 paired points");
  double mx = 0.0, my = 0.0;
  const double n = static_cast<double>(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] > 0.0 && y[i] > 0.0)) throw DomainError("loglog_slope: values must be positive");
    mx += std::log(x[i]) / n;
    my += std::log(y[i]) / n;
  }
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = std::log(x[i]) - mx;
    sxy += dx * (std::log(y[i]) - my);
    sxx += dx * dx;
  }
  return sxy / sxx;
}

struct DensitySweep {
  std::vector<SensitivityBreakdown> rows;
  std::vector<double> conventional;  // V/cm/sqrt(Hz)
  double slope_low = 0.0, slope_high = 0.0, conventional_slope_high = 0.0;
  double best_density = 0.0;          // ppm, minimum of eta_total on the grid
};

// Log-spaced sweep; exponents fitted on the lowest and highest decade.
inline DensitySweep density_sweep(double rho_min, double rho_max, int n_points, const ProtocolParams& p) {
  if (!(rho_min > 0.0 && rho_max > rho_min) || n_points < 4) throw DomainError("density_sweep: bad range");
  DensitySweep s;
  std::vector<double> rho(static_cast<std::size_t>(n_points));
  for (int i = 0; i < n_points; ++i) rho[i] = rho_min * std::pow(rho_max / rho_min, double(i) / (n_points - 1));
  for (double r : rho) {
    s.rows.push_back(sensitivity_breakdown(r, p));
    s.conventional.push_back(conventional_sensitivity(r, p));
  }
  auto fit = [&](bool low, auto&& value) {
    std::vector<double> x, y;
    for (std::size_t i = 0; i < rho.size(); ++i)
      if (low ? rho[i] <= rho_min * 10.0 * (1 + 1e-12) : rho[i] >= rho_max / 10.0 * (1 - 1e-12)) {
        x.push_back(rho[i]);
        y.push_back(value(i));
      }
    return loglog_slope(x, y);
  };
  auto total = [&](std::size_t i) { return s.rows[i].eta_total; };
  s.slope_low = fit(true, total);
  s.slope_high = fit(false, total);
  s.conventional_slope_high = fit(false, [&](std::size_t i) { return s.conventional[i]; });
  const auto best = std::min_element(s.rows.begin(), s.rows.end(),
                                     [](const auto& a, const auto& b) { return a.eta_total < b.eta_total; });
  s.best_density = best->rho_nv_ppm;
  return s;
}

// Bias along one NV axis; the other three axes sit at arccos(-1/3) and see
// E_par = -E/3, E_perp = 2 sqrt(2)/3 E. The target group must clear their
// lower branches by gamma_e/2. gamma_e in MHz, susceptibilities in MHz/(V/cm).
inline double required_bias_field(double gamma_e, double chi_e_perp, double chi_e_par) {
  if (!(gamma_e >= 0.0) || !(chi_e_perp > 0.0 && chi_e_par > 0.0))
    throw DomainError("required_bias_field: need gamma_e >= 0 and positive susceptibilities");
  const double per_field = chi_e_par + chi_e_par / 3.0 + chi_e_perp * 2.0 * std::sqrt(2.0) / 3.0;
  return 0.5 * gamma_e / per_field;
}

inline double required_bias_field(double rho_nv_ppm, const ProtocolParams& p) {
  return required_bias_field(optical_linewidth(rho_nv_ppm, p), p.chi_e_perp, p.chi_e_par);
}

// Ensemble-average shift of the lower branch per unit chi_e_perp when a small
// perpendicular field adds to internal perpendicular fields of magnitude e0 and
// uniformly random direction: mean over t of sqrt(e0^2 + d^2 + 2 d e0 cos t) - e0.
// The integrand is rationalised and its d cos t part (zero mean) removed so the
// O(d^2) result carries no cancellation; the periodic trapezoid converges
// geometrically.
inline double perpendicular_suppression(double delta_e_perp, double e0) {
  if (!(e0 > 0.0)) throw DomainError("perpendicular_suppression: e0 must be positive");
  if (delta_e_perp == 0.0) return 0.0;
  const double d = delta_e_perp;
  auto f = [&](double t) {
    const double c = std::cos(t);
    const double root = std::sqrt(e0 * e0 + d * d + 2.0 * d * e0 * c);
    // (d^2 + 2 d e0 c)/(root + e0) - d c  =  (d^2 + d c (e0 - root)) / (root + e0)
    return (d * d + d * c * (e0 - root)) / (root + e0);
  };
  using boost::math::quadrature::trapezoidal;
  return trapezoidal(f, 0.0, 2.0 * pi, 1e-14) / (2.0 * pi);
}

// Fluorescence-channel sensitivity with a thermally broadened optical line
// (gamma_e in THz) at the given density; no microwave readout.
inline double microwave_free_sensitivity(double gamma_e_thz, double rho_nv_ppm, const ProtocolParams& p) {
  if (!(gamma_e_thz > 0.0)) throw DomainError("microwave_free_sensitivity: gamma_e must be positive");
  const auto cr = count_rate_and_contrast(rho_nv_ppm, p);
  return channel_sensitivity(p.p_f, gamma_e_thz * 1e12, p.chi_e_par * 1e6, cr.c_r, cr.rate);
}

// Operating point on the model splitting curve: the smallest detuning whose
// local slope reaches `linear_fraction` of the large-detuning slope.
struct OperatingPoint {
  double detuning_ghz = 0.0;
  double slope = 0.0;              // d(splitting)/d(detuning), MHz per MHz
  double asymptotic_slope = 0.0;
  double chi_eff = 0.0;            // Hz/(V/cm)
  double chi_eff_ratio = 0.0;      // chi_eff / chi_g_perp
};

inline OperatingPoint effective_susceptibility(const SpectrumModel& m, double max_detuning_ghz = 1000.0,
                                               double step_ghz = 25.0, double linear_fraction = 0.9,
                                               unsigned threads = 1) {
  if (!(step_ghz > 0.0 && max_detuning_ghz >= 8 * step_ghz)) throw DomainError("effective_susceptibility: bad grid");
  std::vector<double> det;
  for (double d = 0.0; d <= max_detuning_ghz + 1e-9; d += step_ghz) det.push_back(d);
  const auto pi_perp = model_splittings(m, det, threads);
  const std::size_t n = det.size();
  // Asymptote from the last four points.
  double mx = 0.0, my = 0.0;
  for (std::size_t i = n - 4; i < n; ++i) {
    mx += det[i] / 4.0;
    my += pi_perp[i] / 4.0;
  }
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = n - 4; i < n; ++i) {
    sxy += (det[i] - mx) * (pi_perp[i] - my);
    sxx += (det[i] - mx) * (det[i] - mx);
  }
  OperatingPoint op;
  op.asymptotic_slope = sxy / sxx * 1e-3;
  for (std::size_t i = 1; i + 1 < n; ++i) {
    const double s = (pi_perp[i + 1] - pi_perp[i - 1]) / (det[i + 1] - det[i - 1]) * 1e-3;
    if (s >= linear_fraction * op.asymptotic_slope) {
      op.detuning_ghz = det[i];
      op.slope = s;
      break;
    }
  }
  if (op.slope == 0.0) throw NumericalError("effective_susceptibility: splitting never becomes linear on the grid");
  op.chi_eff = op.slope * m.params().chi_e_par * 1e6;
  op.chi_eff_ratio = op.chi_eff / m.params().chi_g_perp;
  return op;
}

}  // namespace nvelec
