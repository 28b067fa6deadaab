#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "nvelec/errors.hpp"
#include "nvelec/least_squares.hpp"
#include "nvelec/parallel.hpp"
#include "nvelec/spectrum.hpp"

namespace nvelec {

// Observables of one resonant spectrum.
struct PeakSummary {
  double pi_perp = 0.0;      // half peak-to-peak separation, MHz
  double pi_perp_err = 0.0;  // MHz
  double gamma_g = 0.0;      // FWHM, MHz
  double gamma_g_err = 0.0;  // MHz
  double detuning = 0.0;     // GHz
};

struct Peak {
  std::size_t index = 0;
  double position = 0.0;  // refined, same units as the offsets
  double height = 0.0;
  double prominence = 0.0;
};

// Vertex of the parabola through three points.
inline std::pair<double, double> parabola_vertex(double x0, double y0, double x1, double y1, double x2, double y2) {
  const double d01 = (y1 - y0) / (x1 - x0), d12 = (y2 - y1) / (x2 - x1);
  const double a = (d12 - d01) / (x2 - x0);
  if (!(a < 0.0)) return {x1, y1};
  const double b = d01 - a * (x0 + x1);
  const double xv = std::clamp(-b / (2.0 * a), x0, x2);
  return {xv, y1 + (xv - x1) * (d01 + a * (xv - x0))};
}

// Noise level from the median absolute deviation of second differences,
// scaled to a Gaussian sigma (white noise gives var(d2) = 6 sigma^2).
inline double robust_noise(const std::vector<double>& y) {
  if (y.size() < 3) return 0.0;
  std::vector<double> d(y.size() - 2);
  for (std::size_t i = 1; i + 1 < y.size(); ++i) d[i - 1] = y[i - 1] - 2.0 * y[i] + y[i + 1];
  auto median = [](std::vector<double> v) {
    const std::size_t m = v.size() / 2;
    std::nth_element(v.begin(), v.begin() + static_cast<long>(m), v.end());
    double hi = v[m];
    if (v.size() % 2 == 1) return hi;
    return 0.5 * (hi + *std::max_element(v.begin(), v.begin() + static_cast<long>(m)));
  };
  const double med = median(d);
  for (double& x : d) x = std::abs(x - med);
  return 1.482602218505602 * median(d) / std::sqrt(6.0);
}

// Local maxima whose topographic prominence reaches `min_prominence`.
inline std::vector<Peak> find_peaks(const std::vector<double>& x, const std::vector<double>& y, double min_prominence) {
  std::vector<Peak> out;
  const std::size_t n = y.size();
  for (std::size_t i = 1; i + 1 < n; ++i) {
    if (!(y[i] > y[i - 1])) continue;
    std::size_t j = i;
    while (j + 1 < n && y[j + 1] == y[i]) ++j;
    if (j + 1 >= n || !(y[j + 1] < y[i])) {
      i = j;
      continue;
    }
    const std::size_t c = (i + j) / 2;
    double lmin = y[i];
    for (std::size_t k = i; k-- > 0;) {
      if (y[k] > y[i]) break;
      lmin = std::min(lmin, y[k]);
    }
    double rmin = y[i];
    for (std::size_t k = j + 1; k < n; ++k) {
      if (y[k] > y[i]) break;
      rmin = std::min(rmin, y[k]);
    }
    const double prom = y[i] - std::max(lmin, rmin);
    if (prom >= min_prominence && prom > 0.0) {
      Peak p;
      p.index = c;
      p.prominence = prom;
      if (i == j) {
        const auto [xv, yv] = parabola_vertex(x[c - 1], y[c - 1], x[c], y[c], x[c + 1], y[c + 1]);
        p.position = xv;
        p.height = yv;
      } else {
        p.position = 0.5 * (x[i] + x[j]);
        p.height = y[i];
      }
      out.push_back(p);
    }
    i = j;
  }
  return out;
}

struct PeakOptions {
  double noise_multiple = 3.0;    // prominence floor in robust-noise units
  double relative_floor = 1e-6;   // and never below this fraction of the signal range
};

struct PeakPair {
  Peak lower, upper;
  double splitting() const { return 0.5 * (upper.position - lower.position); }
};

// Most prominent peak on each side of omega = 0.
inline PeakPair find_peak_pair(const Spectrum& s, const PeakOptions& o = {}) {
  s.validate();
  if (s.size() < 5) throw DomainError("find_peak_pair: need at least 5 points");
  const auto [mn, mx] = std::minmax_element(s.signal.begin(), s.signal.end());
  const double floor = std::max(o.noise_multiple * robust_noise(s.signal), o.relative_floor * (*mx - *mn));
  const auto peaks = find_peaks(s.mw_offset, s.signal, floor);
  std::optional<Peak> lo, hi;
  for (const auto& p : peaks) {
    if (p.position < 0.0 && (!lo || p.prominence > lo->prominence)) lo = p;
    if (p.position > 0.0 && (!hi || p.prominence > hi->prominence)) hi = p;
  }
  if (!lo || !hi) throw PeaksUnresolved("peaks unresolved: fewer than two maxima clear the prominence floor");
  return {*lo, *hi};
}

inline PeakSummary extract_peak_splitting(const Spectrum& s, const PeakOptions& o = {}) {
  PeakSummary r;
  r.pi_perp = find_peak_pair(s, o).splitting();
  return r;
}

// Splitting of a noise-free model spectrum; falls back to the global maximum on
// omega >= 0 when the two peaks are not resolved (0 for a central peak).
inline double model_splitting(const Spectrum& s) {
  try {
    return find_peak_pair(s).splitting();
  } catch (const PeaksUnresolved&) {
    std::size_t best = 0;
    bool found = false;
    for (std::size_t i = 0; i < s.size(); ++i)
      if (s.mw_offset[i] >= 0.0 && (!found || s.signal[i] > s.signal[best])) {
        best = i;
        found = true;
      }
    if (!found) throw DomainError("model_splitting: no non-negative offsets");
    if (best == 0 || best + 1 >= s.size() || s.mw_offset[best] == 0.0) return std::max(0.0, s.mw_offset[best]);
    return std::max(0.0, parabola_vertex(s.mw_offset[best - 1], s.signal[best - 1], s.mw_offset[best],
                                         s.signal[best], s.mw_offset[best + 1], s.signal[best + 1])
                             .first);
  }
}

struct PeakUncertainty {
  double sigma = 0.0;     // std of the re-extracted upper peak position, MHz
  int unresolved = 0;
  int trials = 0;
};

// Re-extracts the upper peak from `trials` copies with added Gaussian noise.
inline PeakUncertainty peak_uncertainty_mc(const Spectrum& s, double noise_sigma, int trials, std::uint64_t rng_seed,
                                           unsigned threads = 1, const PeakOptions& o = {}) {
  if (trials < 100) throw DomainError("peak_uncertainty_mc: trials must be at least 100");
  if (!(noise_sigma >= 0.0)) throw DomainError("peak_uncertainty_mc: noise_sigma must be non-negative");
  PeakUncertainty out;
  out.trials = trials;
  if (noise_sigma == 0.0) {
    find_peak_pair(s, o);
    return out;
  }
  std::vector<double> pos(static_cast<std::size_t>(trials), std::numeric_limits<double>::quiet_NaN());
  parallel_for(pos.size(), threads, [&](std::size_t t) {
    auto g = stream_rng(rng_seed, t);
    std::normal_distribution<double> nd(0.0, noise_sigma);
    Spectrum noisy = s;
    for (double& v : noisy.signal) v += nd(g);
    try {
      pos[t] = find_peak_pair(noisy, o).upper.position;
    } catch (const PeaksUnresolved&) {
    }
  });
  double sum = 0.0, sum2 = 0.0;
  int n = 0;
  for (double p : pos) {
    if (std::isnan(p)) {
      ++out.unresolved;
      continue;
    }
    sum += p;
    ++n;
  }
  if (out.unresolved * 10 > trials)
    throw PeaksUnresolved("peak_uncertainty_mc: " + std::to_string(out.unresolved) + " of " + std::to_string(trials) +
                          " trials unresolved");
  const double mean = sum / n;
  for (double p : pos)
    if (!std::isnan(p)) sum2 += (p - mean) * (p - mean);
  out.sigma = n > 1 ? std::sqrt(sum2 / (n - 1)) : 0.0;
  return out;
}

struct LorentzFit {
  double amplitude = 0.0, center = 0.0, fwhm = 0.0, offset = 0.0;
  bool converged = false;
};

// Lorentzian plus constant fitted around the peak at index `ip`. The window
// reaches 1.5 half widths on each side and never crosses omega = 0.
inline LorentzFit fit_lorentzian_peak(const Spectrum& s, std::size_t ip) {
  const auto& x = s.mw_offset;
  const auto& y = s.signal;
  const double base = *std::min_element(y.begin(), y.end());
  const double half = base + 0.5 * (y[ip] - base);
  std::size_t r = ip, l = ip;
  while (r + 1 < y.size() && y[r] > half) ++r;
  while (l > 0 && y[l] > half && x[l - 1] * x[ip] > 0.0) --l;
  double hw = std::max(x[r] - x[ip], x[ip] - x[l]);
  if (!(hw > 0.0)) hw = 3.0 * (x[1] - x[0]);
  const double xlo = x[ip] > 0.0 ? std::max(x[ip] - 1.5 * hw, 0.0) : x[ip] - 1.5 * hw;
  const double xhi = x[ip] < 0.0 ? std::min(x[ip] + 1.5 * hw, 0.0) : x[ip] + 1.5 * hw;
  std::vector<double> wx, wy;
  const double scale = y[ip] - base > 0.0 ? y[ip] - base : 1.0;
  for (std::size_t i = 0; i < x.size(); ++i)
    if (x[i] >= xlo && x[i] <= xhi) {
      wx.push_back(x[i]);
      wy.push_back((y[i] - base) / scale);
    }
  if (wx.size() < 5) throw NumericalError("fit_lorentzian_peak: window holds fewer than 5 points");
  auto res = [&](const Eigen::VectorXd& q) {
    Eigen::VectorXd r(static_cast<Eigen::Index>(wx.size()));
    const double g = 0.5 * q[2];
    for (std::size_t i = 0; i < wx.size(); ++i) {
      const double d = wx[i] - q[1];
      r[static_cast<Eigen::Index>(i)] = q[0] * g * g / (d * d + g * g) + q[3] - wy[i];
    }
    return r;
  };
  Eigen::VectorXd q0(4);
  q0 << 1.0, x[ip], 2.0 * hw, 0.0;
  LmOptions lo;
  lo.fd_step = 1e-6;
  lo.max_iter = 200;
  const auto fit = levenberg_marquardt(res, q0, lo);
  LorentzFit f;
  f.amplitude = fit.x[0] * scale;
  f.center = fit.x[1];
  f.fwhm = std::abs(fit.x[2]);
  f.offset = base + fit.x[3] * scale;
  f.converged = fit.converged && std::isfinite(f.fwhm) && f.fwhm > 0.0;
  return f;
}

// Mean FWHM of Lorentzian fits to the two peaks; error is their difference.
inline PeakSummary extract_linewidth(const Spectrum& s, const PeakOptions& o = {}) {
  const auto pair = find_peak_pair(s, o);
  const auto left = fit_lorentzian_peak(s, pair.lower.index);
  const auto right = fit_lorentzian_peak(s, pair.upper.index);
  if (!left.converged) throw NumericalError("extract_linewidth: left peak fit did not converge");
  if (!right.converged) throw NumericalError("extract_linewidth: right peak fit did not converge");
  PeakSummary r;
  r.pi_perp = pair.splitting();
  r.gamma_g = 0.5 * (left.fwhm + right.fwhm);
  r.gamma_g_err = std::abs(left.fwhm - right.fwhm);
  return r;
}

// Splitting observations to fit.
struct SplittingData {
  std::vector<double> detuning_ghz;
  std::vector<double> pi_perp_mhz;
  std::vector<double> sigma_mhz;

  std::size_t size() const { return detuning_ghz.size(); }

  void validate() const {
    if (pi_perp_mhz.size() != size() || sigma_mhz.size() != size()) throw DomainError("SplittingData: column lengths differ");
    if (size() < 3) throw DomainError("SplittingData: need at least 3 observations");
    for (std::size_t i = 0; i < size(); ++i) {
      if (!(sigma_mhz[i] > 0.0)) throw DomainError("SplittingData: every sigma must be positive");
      if (!std::isfinite(pi_perp_mhz[i]) || !std::isfinite(detuning_ghz[i])) throw DomainError("SplittingData: non-finite value");
    }
  }
};

// Resonant-spectrum splittings predicted by `m` at each detuning.
inline std::vector<double> model_splittings(const SpectrumModel& m, const std::vector<double>& detuning_ghz,
                                            unsigned threads = 1) {
  m.resonant_table();
  std::vector<double> out(detuning_ghz.size());
  parallel_for(out.size(), threads, [&](std::size_t i) { out[i] = model_splitting(m.resonant(detuning_ghz[i])); });
  return out;
}

struct FitOptions {
  std::array<double, 2> perp_range{0.4, 3.0};  // multistart grid bounds, MHz/(V/cm)
  std::array<double, 2> par_range{0.15, 2.0};
  int grid_n = 5;
  LmOptions lm{};
  double degeneracy_condition = 1e6;
  unsigned threads = 1;
};

struct FitResult {
  double chi_e_perp = 0.0, chi_e_par = 0.0;
  Eigen::Matrix2d covariance = Eigen::Matrix2d::Zero();  // (perp, par)
  double chi2 = 0.0, chi2_reduced = 0.0;
  std::size_t n_obs = 0;
  double condition_number = 0.0;
  bool degenerate = false;
  bool converged = false;
  int iterations = 0;
  std::vector<double> objective_history;
  std::vector<double> model;       // fitted splittings
  Eigen::MatrixXd jacobian;        // d(residual)/d(chi), whitened

  // Two-sigma fractional error of one parameter alone.
  std::array<double, 2> stat_err_2sigma() const {
    return {2.0 * std::sqrt(covariance(0, 0)) / chi_e_perp, 2.0 * std::sqrt(covariance(1, 1)) / chi_e_par};
  }
};

namespace detail {

// Covariance from whitened residual Jacobian; flags ill-conditioning.
inline void finish_covariance(FitResult& r, const Eigen::MatrixXd& j, double cond_limit) {
  r.jacobian = j;
  const Eigen::Matrix2d a = j.transpose() * j;
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(a);
  const double lmin = es.eigenvalues()[0], lmax = es.eigenvalues()[1];
  r.condition_number = lmin > 0.0 ? lmax / lmin : std::numeric_limits<double>::infinity();
  r.degenerate = !(r.condition_number <= cond_limit);
  if (lmin > 0.0) {
    r.covariance = es.eigenvectors() * es.eigenvalues().cwiseInverse().asDiagonal() * es.eigenvectors().transpose();
  } else {
    r.covariance = a.completeOrthogonalDecomposition().pseudoInverse();
  }
  r.covariance = 0.5 * (r.covariance + r.covariance.transpose());
}

}  // namespace detail

// Weighted least squares over (chi_e_perp, chi_e_par): coarse log-spaced grid,
// then Levenberg-Marquardt in log coordinates from the best grid point.
inline FitResult fit_susceptibilities(const SplittingData& d, const SpectrumModel& m, const FitOptions& o = {}) {
  d.validate();
  if (o.grid_n < 1) throw DomainError("fit_susceptibilities: grid_n must be positive");
  const Eigen::Index n = static_cast<Eigen::Index>(d.size());
  auto residuals = [&](const Eigen::VectorXd& lx) {
    const auto pred = model_splittings(m.with_excited(std::exp(lx[0]), std::exp(lx[1])), d.detuning_ghz, o.threads);
    Eigen::VectorXd r(n);
    for (Eigen::Index i = 0; i < n; ++i) r[i] = (pred[i] - d.pi_perp_mhz[i]) / d.sigma_mhz[i];
    return r;
  };
  auto grid = [&](const std::array<double, 2>& rg, int k) {
    return o.grid_n == 1 ? std::sqrt(rg[0] * rg[1]) : rg[0] * std::pow(rg[1] / rg[0], double(k) / (o.grid_n - 1));
  };
  Eigen::VectorXd best(2);
  double best_obj = std::numeric_limits<double>::infinity();
  for (int a = 0; a < o.grid_n; ++a)
    for (int b = 0; b < o.grid_n; ++b) {
      Eigen::VectorXd lx(2);
      lx << std::log(grid(o.perp_range, a)), std::log(grid(o.par_range, b));
      const double obj = residuals(lx).squaredNorm();
      if (obj < best_obj) {
        best_obj = obj;
        best = lx;
      }
    }
  if (!std::isfinite(best_obj)) throw NumericalError("fit_susceptibilities: objective not finite on the start grid");
  const auto lm = levenberg_marquardt(residuals, best, o.lm);
  if (!lm.converged)
    throw NumericalError("fit_susceptibilities: no convergence after " + std::to_string(lm.iterations) + " iterations");
  FitResult r;
  r.chi_e_perp = std::exp(lm.x[0]);
  r.chi_e_par = std::exp(lm.x[1]);
  r.chi2 = lm.objective;
  r.n_obs = d.size();
  r.chi2_reduced = d.size() > 2 ? r.chi2 / static_cast<double>(d.size() - 2) : 0.0;
  r.converged = lm.converged;
  r.iterations = lm.iterations;
  r.objective_history = lm.history;
  r.model.resize(d.size());
  for (std::size_t i = 0; i < d.size(); ++i)
    r.model[i] = d.pi_perp_mhz[i] + lm.residuals[static_cast<Eigen::Index>(i)] * d.sigma_mhz[i];
  Eigen::MatrixXd j = lm.jacobian;
  j.col(0) /= r.chi_e_perp;
  j.col(1) /= r.chi_e_par;
  detail::finish_covariance(r, j, o.degeneracy_condition);
  return r;
}

// Joint confidence ellipse in the (perp, par) plane.
struct ConfidenceEllipse {
  double center_perp = 0.0, center_par = 0.0;
  double semi_major = 0.0, semi_minor = 0.0;
  double angle = 0.0;  // of the major axis from the perp axis, radians
  Eigen::Matrix2d axes = Eigen::Matrix2d::Identity();  // columns: minor, major directions
  double delta_chi2 = 0.0;
  std::array<double, 2> frac_err_2sigma{};  // marginal two-sigma fractional errors
  bool singular = false;

  // Point at parameter angle t on the boundary.
  std::pair<double, double> point(double t) const {
    const Eigen::Vector2d v = axes.col(1) * semi_major * std::cos(t) + axes.col(0) * semi_minor * std::sin(t);
    return {center_perp + v[0], center_par + v[1]};
  }
};

// Delta chi^2 = 6.18 bounds the joint two-sigma region of two parameters.
inline ConfidenceEllipse confidence_region(const FitResult& f, double delta_chi2 = 6.18) {
  ConfidenceEllipse e;
  e.center_perp = f.chi_e_perp;
  e.center_par = f.chi_e_par;
  e.delta_chi2 = delta_chi2;
  e.singular = f.degenerate;
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(f.covariance);
  e.axes = es.eigenvectors();
  e.semi_minor = std::sqrt(std::max(0.0, es.eigenvalues()[0]) * delta_chi2);
  e.semi_major = std::sqrt(std::max(0.0, es.eigenvalues()[1]) * delta_chi2);
  e.angle = std::atan2(e.axes(1, 1), e.axes(0, 1));
  e.frac_err_2sigma = f.stat_err_2sigma();
  return e;
}

// One systematic alternative: charge density and resonant inhomogeneous width.
struct ScanPoint {
  double rho_c_ppm = 0.0;
  double kappa_ih = 0.0;
};

struct ScanOutcome {
  ScanPoint point;
  std::optional<FitResult> fit;
  std::string error;
};

struct ScanResult {
  std::vector<ScanOutcome> outcomes;
  std::array<double, 2> spread{};  // max fractional deviation from the central fit (perp, par)
};

// Model for another (rho_c, kappa_ih): same calibration ratio, rebuilt tables.
inline SpectrumModel model_variant(const SpectrumModel& m, const ScanPoint& p,
                                   const PhysicalConstants& c = default_constants()) {
  SampleParams sp = m.params();
  sp.rho_c = ChargeDensity::ppm(p.rho_c_ppm);
  BroadeningParams b = m.broadening();
  b.kappa_ih_res = p.kappa_ih;
  const auto dist = FieldDistribution::from_ratio(sp.rho_c, m.distribution().ratio(), c);
  return SpectrumModel(sp, dist, b, m.grid(), m.quadrature());
}

// Refits at every grid point. Failures are recorded and the scan continues.
inline ScanResult systematic_scan(const SplittingData& d, const SpectrumModel& m, const FitResult& central,
                                  const std::vector<ScanPoint>& grid, const FitOptions& o = {}) {
  ScanResult r;
  for (const auto& p : grid) {
    ScanOutcome out;
    out.point = p;
    try {
      out.fit = fit_susceptibilities(d, model_variant(m, p), o);
      r.spread[0] = std::max(r.spread[0], std::abs(out.fit->chi_e_perp / central.chi_e_perp - 1.0));
      r.spread[1] = std::max(r.spread[1], std::abs(out.fit->chi_e_par / central.chi_e_par - 1.0));
    } catch (const Error& e) {
      out.error = e.what();
    }
    r.outcomes.push_back(std::move(out));
  }
  return r;
}

// Closed-form estimate from the splitting curve: the elbow detuning (GHz) where
// the linear rise meets the plateau, the large-detuning slope (MHz of
// splitting per MHz of detuning) and the plateau scale E0 chi_g_perp (MHz).
// chi_g_perp in Hz/(V/cm). Returns (chi_e_perp, chi_e_par) in MHz/(V/cm).
inline std::pair<double, double> analytic_susceptibilities(double elbow_ghz, double slope, double e0_freq_mhz,
                                                           double chi_g_perp) {
  if (!(elbow_ghz > 0.0 && e0_freq_mhz > 0.0 && chi_g_perp > 0.0))
    throw DomainError("analytic_susceptibilities: elbow, E0 scale and chi_g_perp must be positive");
  const double ratio = elbow_ghz * 1e3 / e0_freq_mhz;
  const double s = slope * ratio;
  if (!(s > 0.0 && s <= 1.0)) throw DomainError("analytic_susceptibilities: slope * elbow / E0 scale must lie in (0, 1]");
  const double alpha = std::asin(s);
  const double par = std::cos(alpha) * ratio * chi_g_perp * 1e-6;
  return {s >= 1.0 ? std::numeric_limits<double>::infinity() : par * std::tan(alpha), par};
}

// Continuous two-segment fit y = c + m_lo (x - b) for x < b, c + m_hi (x - b)
// beyond. With `flat_low` the first segment is a plateau (m_lo = 0).
struct ElbowFit {
  double elbow = 0.0, level = 0.0, slope_low = 0.0, slope_high = 0.0, sse = 0.0;
};

inline ElbowFit fit_elbow(const std::vector<double>& x, const std::vector<double>& y, bool flat_low = true,
                          const std::vector<double>& sigma = {}) {
  if (x.size() != y.size() || x.size() < 3) throw DomainError("fit_elbow: need at least 3 paired points");
  if (!sigma.empty() && sigma.size() != x.size()) throw DomainError("fit_elbow: sigma length differs");
  const double xmin = *std::min_element(x.begin(), x.end()), xmax = *std::max_element(x.begin(), x.end());
  auto solve = [&](double b) {
    const int k = flat_low ? 2 : 3;
    Eigen::MatrixXd a(static_cast<Eigen::Index>(x.size()), k);
    Eigen::VectorXd v(static_cast<Eigen::Index>(x.size()));
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double w = sigma.empty() ? 1.0 : 1.0 / sigma[i];
      const auto r = static_cast<Eigen::Index>(i);
      a(r, 0) = w;
      a(r, 1) = w * std::max(0.0, x[i] - b);
      if (!flat_low) a(r, 2) = w * std::min(0.0, x[i] - b);
      v[r] = w * y[i];
    }
    const Eigen::VectorXd c = a.colPivHouseholderQr().solve(v);
    ElbowFit f;
    f.elbow = b;
    f.level = c[0];
    f.slope_high = c[1];
    f.slope_low = flat_low ? 0.0 : c[2];
    f.sse = (a * c - v).squaredNorm();
    return f;
  };
  const int n = 400;
  ElbowFit best = solve(xmin);
  int ib = 0;
  for (int i = 1; i <= n; ++i) {
    const auto f = solve(xmin + (xmax - xmin) * i / n);
    if (f.sse < best.sse) {
      best = f;
      ib = i;
    }
  }
  // Golden-section polish inside the bracketing cells.
  double lo = xmin + (xmax - xmin) * std::max(0, ib - 1) / n, hi = xmin + (xmax - xmin) * std::min(n, ib + 1) / n;
  const double g = 0.5 * (std::sqrt(5.0) - 1.0);
  for (int it = 0; it < 60; ++it) {
    const double a = hi - g * (hi - lo), b = lo + g * (hi - lo);
    if (solve(a).sse < solve(b).sse)
      hi = b;
    else
      lo = a;
  }
  const auto f = solve(0.5 * (lo + hi));
  return f.sse < best.sse ? f : best;
}

}  // namespace nvelec
