#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <memory>
#include <mutex>
#include <string>
#include <utility>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>

#include "nvelec/field_distribution.hpp"
#include "nvelec/lineshape.hpp"
#include "nvelec/log.hpp"
#include "nvelec/params.hpp"

namespace nvelec {

// Tabulated ODMR trace. mw_offset in MHz from the zero-field splitting.
struct Spectrum {
  std::vector<double> mw_offset;
  std::vector<double> signal;

  std::size_t size() const { return mw_offset.size(); }

  void validate() const {
    if (mw_offset.size() != signal.size()) throw DomainError("Spectrum: column lengths differ");
    for (std::size_t i = 0; i < signal.size(); ++i) {
      if (!std::isfinite(signal[i]) || !std::isfinite(mw_offset[i])) throw DomainError("Spectrum: non-finite value");
      if (i > 0 && !(mw_offset[i] > mw_offset[i - 1])) throw DomainError("Spectrum: offsets not strictly increasing");
    }
  }
};

// Symmetric grid omega_i = i * step, i = -n..n.
struct SpectralGrid {
  double half_width = 15.0;  // MHz
  double step = 0.03;        // MHz

  std::size_t n_half() const { return static_cast<std::size_t>(std::llround(half_width / step)); }

  std::vector<double> nonnegative() const {
    std::vector<double> w(n_half() + 1);
    for (std::size_t i = 0; i < w.size(); ++i) w[i] = static_cast<double>(i) * step;
    return w;
  }

  std::vector<double> full() const {
    const long n = static_cast<long>(n_half());
    std::vector<double> w;
    w.reserve(2 * n + 1);
    for (long i = -n; i <= n; ++i) w.push_back(static_cast<double>(i) * step);
    return w;
  }

  // Mirrors values on omega >= 0 into a full spectrum.
  Spectrum mirror(const std::vector<double>& half) const {
    Spectrum s;
    s.mw_offset = full();
    const std::size_t n = half.size() - 1;
    s.signal.resize(2 * n + 1);
    for (std::size_t i = 0; i <= n; ++i) s.signal[n + i] = s.signal[n - i] = half[i];
    return s;
  }

  void validate() const {
    if (!(step > 0.0) || !(half_width >= step)) throw DomainError("SpectralGrid: need 0 < step <= half_width");
  }
};

// Grid presets: susceptibility work and temperature presets.
inline SpectralGrid susceptibility_grid() { return {15.0, 0.03}; }
inline SpectralGrid preset_grid() { return {60.0, 0.1}; }

struct QuadratureOptions {
  double split_steps_per_width = 20.0;  // splitting grid step = min positive kappa / this
  double split_margin_widths = 10.0;    // splitting grid extends this many (kappa_ih + kappa_h) past the window
  double lineshape_tol = 1e-9;
  double band_tol = 1e-9;
  double resonant_floor = 1e-12;        // warn when the resonant measure is below this
  unsigned threads = 1;
};

struct ConfigFractions {
  double f_resonant = 0.0;
  double f_offresonant = 0.0;
};

// Excited-state branch energies relative to the zero-phonon line, in GHz
// (upper, lower) = chi_par E_par -/+ chi_perp E_perp.
inline std::pair<double, double> excited_branch_shifts(const FieldVector& e, const SampleParams& p) {
  const double par = p.chi_e_par * e.e_parallel * 1e-3, perp = p.chi_e_perp * e.e_perp * 1e-3;
  return {par - perp, par + perp};
}

// Number of branches within gamma_e/2 of the drive, and number of branches the
// drive lies above by more than gamma_e/2.
inline std::pair<int, int> resonance_indicators(const FieldVector& e, double detuning_ghz, const SampleParams& p) {
  if (!(p.gamma_e_single > 0.0)) throw DomainError("resonance_indicators: gamma_e_single must be positive");
  const auto [u, l] = excited_branch_shifts(e, p);
  const double half = 0.5 * p.gamma_e_single * 1e-3;
  int dr = 0, dor = 0;
  for (double s : {u, l}) {
    const double delta = detuning_ghz - s;
    if (std::abs(delta) <= half) ++dr;
    if (delta > half) ++dor;
  }
  return {dr, dor};
}

namespace detail {

// Angular measure (1/2) int sin(theta) over {theta : shift(E, theta) < x} for
// the lower (shift = E A cos(theta - tA)) or upper (E A cos(theta + tA)) branch.
inline double below_measure(double e, double x, double amp, double ta, bool lower) {
  if (e <= 0.0) return x > 0.0 ? 1.0 : 0.0;
  const double c = x / (e * amp);
  if (c >= 1.0) return 1.0;
  if (c <= -1.0) return 0.0;
  const double a = std::acos(c);
  if (lower) {
    double m = 0.0;
    if (ta - a > 0.0) m += 0.5 * (1.0 - std::cos(ta - a));
    if (ta + a < pi) m += 0.5 * (std::cos(ta + a) + 1.0);
    return m;
  }
  const double lo = std::max(0.0, a - ta), hi = std::min(pi, 2.0 * pi - a - ta);
  return lo < hi ? 0.5 * (std::cos(lo) - std::cos(hi)) : 0.0;
}

}  // namespace detail

// Resonant and off-resonant ODMR spectra for one sample. Lineshape tables are
// built lazily and shared between copies, so copies with other excited-state
// susceptibilities are cheap.
class SpectrumModel {
 public:
  SpectrumModel(SampleParams p, FieldDistribution dist, BroadeningParams b, SpectralGrid grid = susceptibility_grid(),
                QuadratureOptions q = {})
      : p_(std::move(p)), dist_(dist), b_(b), grid_(grid), q_(q), tables_(std::make_shared<Tables>()) {
    p_.validate();
    b_.validate();
    grid_.validate();
    if (!(dist_.e_ref > 0.0)) throw DomainError("SpectrumModel: field distribution has zero scale");
  }

  const SampleParams& params() const { return p_; }
  const FieldDistribution& distribution() const { return dist_; }
  const BroadeningParams& broadening() const { return b_; }
  const SpectralGrid& grid() const { return grid_; }
  const QuadratureOptions& quadrature() const { return q_; }

  SpectrumModel with_excited(double chi_e_perp, double chi_e_par) const {
    SpectrumModel m = *this;
    m.p_.chi_e_perp = chi_e_perp;
    m.p_.chi_e_par = chi_e_par;
    m.p_.validate();
    return m;
  }

  SpectrumModel with_gamma_e(double gamma_e) const {
    SpectrumModel m = *this;
    m.p_.gamma_e_single = gamma_e;
    m.p_.validate();
    return m;
  }

  // Density over E_perp (1/(V/cm)) of configurations with the lower or upper
  // branch inside the resonant band, summed over branches.
  double resonant_weight(double e_perp, double detuning_ghz) const {
    const double d = detuning_ghz * 1e3, h = 0.5 * p_.gamma_e_single;
    const double cp = p_.chi_e_par, cq = p_.chi_e_perp * e_perp;
    return band(e_perp, (d - h - cq) / cp, (d + h - cq) / cp) + band(e_perp, (d - h + cq) / cp, (d + h + cq) / cp);
  }

  // Same for configurations whose drive sits above a branch by more than gamma_e/2.
  double offresonant_weight(double e_perp, double detuning_ghz) const {
    const double d = detuning_ghz * 1e3, h = 0.5 * p_.gamma_e_single;
    const double cp = p_.chi_e_par, cq = p_.chi_e_perp * e_perp;
    const double ninf = -std::numeric_limits<double>::infinity();
    return band(e_perp, ninf, (d - h - cq) / cp) + band(e_perp, ninf, (d - h + cq) / cp);
  }

  // Values on omega >= 0.
  std::vector<double> resonant_half(double detuning_ghz) const {
    const auto& t = resonant_table();
    auto w = weights(t, [&](double e) { return resonant_weight(e, detuning_ghz); });
    double mass = 0.0;
    for (double x : w) mass += x;
    if (mass < q_.resonant_floor)
      warn("resonant measure below floor at detuning " + std::to_string(detuning_ghz) + " GHz");
    return apply(t, w);
  }

  std::vector<double> offresonant_half(double detuning_ghz) const {
    const auto& t = offresonant_table();
    return apply(t, weights(t, [&](double e) { return offresonant_weight(e, detuning_ghz); }));
  }

  Spectrum resonant(double detuning_ghz) const { return grid_.mirror(resonant_half(detuning_ghz)); }
  Spectrum offresonant(double detuning_ghz) const { return grid_.mirror(offresonant_half(detuning_ghz)); }

  // epsilon_c * S_R - S_OR
  Spectrum total(double detuning_ghz) const {
    auto r = resonant_half(detuning_ghz);
    const auto o = offresonant_half(detuning_ghz);
    for (std::size_t i = 0; i < r.size(); ++i) r[i] = p_.epsilon_c * r[i] - o[i];
    return grid_.mirror(r);
  }

  ConfigFractions fractions(double detuning_ghz) const {
    const double d = detuning_ghz * 1e3, h = 0.5 * p_.gamma_e_single;
    const double amp = std::hypot(p_.chi_e_par, p_.chi_e_perp), ta = std::atan2(p_.chi_e_perp, p_.chi_e_par);
    auto below = [&](double e, double x) {
      return detail::below_measure(e, x, amp, ta, true) + detail::below_measure(e, x, amp, ta, false);
    };
    // Integrate over the field CDF u, E = quantile(u); kinks where the band is
    // tangent to the cone (E A = |x|) and where it crosses the axis (E chi_par = |x|).
    auto integrate = [&](auto&& g) {
      std::vector<double> pts{0.0, 1.0};
      for (double x : {d - h, d + h})
        if (x != 0.0) {
          pts.push_back(dist_.cdf(std::abs(x) / amp));
          pts.push_back(dist_.cdf(std::abs(x) / p_.chi_e_par));
        }
      std::sort(pts.begin(), pts.end());
      auto f = [&](double u) { return (u <= 0.0 || u >= 1.0) ? 0.0 : g(dist_.quantile(u)); };
      // acos square-root singularities sit at the breakpoints; tanh-sinh converges
      // there where Gauss-Kronrod bisects to its depth limit.
      thread_local boost::math::quadrature::tanh_sinh<double> ts;
      double s = 0.0;
      for (std::size_t i = 0; i + 1 < pts.size(); ++i)
        if (pts[i + 1] > pts[i]) s += ts.integrate(f, pts[i], pts[i + 1], q_.band_tol);
      return s;
    };
    ConfigFractions out;
    out.f_offresonant = integrate([&](double e) { return below(e, d - h); });
    out.f_resonant = integrate([&](double e) { return std::max(0.0, below(e, d + h) - below(e, d - h)); });
    return out;
  }

  // Relative rate (epsilon_r F_R + F_OR) / 2; equals 1 on the plateau where
  // every configuration is driven off resonantly through both branches.
  double fluorescence(double detuning_ghz) const {
    const auto f = fractions(detuning_ghz);
    return 0.5 * (p_.epsilon_r_enh * f.f_resonant + f.f_offresonant);
  }

  // Resonant fluorescence relative to the off-resonant plateau, epsilon_r F_R / 2.
  double resonant_enhancement(double detuning_ghz) const {
    return 0.5 * p_.epsilon_r_enh * fractions(detuning_ghz).f_resonant;
  }

  const LineshapeTable& resonant_table() const {
    std::call_once(tables_->res_once, [&] { tables_->res = build(b_.resonant()); });
    return tables_->res;
  }

  const LineshapeTable& offresonant_table() const {
    std::call_once(tables_->or_once, [&] {
      if (b_.offresonant().kappa_ih == b_.resonant().kappa_ih && b_.offresonant().kappa_h == b_.resonant().kappa_h)
        tables_->offres = resonant_table();
      else
        tables_->offres = build(b_.offresonant());
    });
    return tables_->offres;
  }

 private:
  struct Tables {
    std::once_flag res_once, or_once;
    LineshapeTable res, offres;
  };

  // Density over E_perp = t of configurations with E_par in [lo, hi]:
  // (1/2) int dE_par P(E) t / E^2. Finite bands are integrated in E_par, the
  // semi-infinite one in psi = atan(E_par / t). Fields below 0.1 E_ref are
  // dropped: P < 1e-55 there and the integrand underflows.
  double band(double t, double lo, double hi) const {
    if (!(hi > lo)) return 0.0;
    const double e_lo = 0.1 * dist_.e_ref;
    if (std::isinf(lo)) {
      const double a = -0.5 * pi, b = std::atan(hi / t);
      const double pc = t < e_lo ? std::acos(t / e_lo) : 0.0;
      double s = 0.0;
      if (pc > 0.0) {
        if (a < -pc) s += band_piece(t, a, std::min(b, -pc));
        if (b > pc) s += band_piece(t, std::max(a, pc), b);
      } else {
        s = band_piece(t, a, b);
      }
      return 0.5 * s;
    }
    auto f = [&](double x) {
      const double e2 = x * x + t * t;
      return dist_.pdf(std::sqrt(e2)) * t / e2;
    };
    std::vector<double> pts{lo, hi};
    auto add = [&](double x) {
      if (x > lo && x < hi) pts.push_back(x);
    };
    const double xc = t < e_lo ? std::sqrt(e_lo * e_lo - t * t) : 0.0;
    add(-xc);
    add(xc);
    const double e0 = dist_.most_probable();
    if (t < e0) {
      add(-std::sqrt(e0 * e0 - t * t));
      add(std::sqrt(e0 * e0 - t * t));
    }
    std::sort(pts.begin(), pts.end());
    using boost::math::quadrature::gauss_kronrod;
    double s = 0.0;
    for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
      const double m = 0.5 * (pts[i] + pts[i + 1]);
      if (xc > 0.0 && std::abs(m) < xc) continue;
      s += gauss_kronrod<double, 15>::integrate(f, pts[i], pts[i + 1], 15, q_.band_tol);
    }
    return 0.5 * s;
  }

  double band_piece(double t, double a, double b) const {
    if (!(b > a)) return 0.0;
    auto f = [&](double psi) {
      const double c = std::cos(psi);
      return c > 0.0 ? dist_.pdf(t / c) : 0.0;
    };
    double pts[4] = {a, b, b, b};
    int n = 2;
    const double e0 = dist_.most_probable();
    if (t < e0) {
      const double ps = std::acos(t / e0);
      for (double x : {-ps, ps})
        if (x > a && x < b) pts[n++] = x;
      std::sort(pts, pts + n);
    }
    using boost::math::quadrature::gauss_kronrod;
    double s = 0.0;
    for (int i = 0; i + 1 < n; ++i) s += gauss_kronrod<double, 15>::integrate(f, pts[i], pts[i + 1], 15, q_.band_tol);
    return s;
  }

  LineshapeTable build(LineBroadening lb) const {
    const double kmin = std::min(lb.kappa_ih > 0.0 ? lb.kappa_ih : lb.kappa_h, lb.kappa_h > 0.0 ? lb.kappa_h : lb.kappa_ih);
    const double step = kmin / q_.split_steps_per_width;
    const double smax = grid_.half_width + q_.split_margin_widths * (lb.kappa_ih + lb.kappa_h);
    PrimitiveLineshape shape(lb, p_.hyperfine_shifts, q_.lineshape_tol);
    return LineshapeTable::build(shape, grid_.nonnegative(), step, smax, q_.threads);
  }

  // Weight per splitting bin: density over E_perp times the bin width in E_perp.
  template <class W>
  std::vector<double> weights(const LineshapeTable& t, W&& w) const {
    std::vector<double> out(t.n_split);
    const double chi = p_.chi_g_perp_mhz(), dt = t.split_step / chi;
    parallel_for(t.n_split, q_.threads, [&](std::size_t k) { out[k] = dt * w(t.split(k) / chi); });
    return out;
  }

  std::vector<double> apply(const LineshapeTable& t, const std::vector<double>& w) const {
    std::vector<double> s(t.omega.size());
    parallel_for(t.omega.size(), q_.threads, [&](std::size_t i) {
      const double* row = t.row(i);
      double acc = 0.0;
      for (std::size_t k = 0; k < t.n_split; ++k) acc += w[k] * row[k];
      s[i] = acc;
    });
    return s;
  }

  SampleParams p_;
  FieldDistribution dist_;
  BroadeningParams b_;
  SpectralGrid grid_;
  QuadratureOptions q_;
  std::shared_ptr<Tables> tables_;
};

inline Spectrum resonant_spectrum(double detuning_ghz, const SampleParams& p, const BroadeningParams& b,
                                  const FieldDistribution& dist, SpectralGrid grid = susceptibility_grid()) {
  return SpectrumModel(p, dist, b, grid).resonant(detuning_ghz);
}

inline Spectrum offresonant_spectrum(double detuning_ghz, const SampleParams& p, const BroadeningParams& b,
                                     const FieldDistribution& dist, SpectralGrid grid = susceptibility_grid()) {
  return SpectrumModel(p, dist, b, grid).offresonant(detuning_ghz);
}

inline Spectrum total_spectrum(double detuning_ghz, const SampleParams& p, const BroadeningParams& b,
                               const FieldDistribution& dist, SpectralGrid grid = susceptibility_grid()) {
  return SpectrumModel(p, dist, b, grid).total(detuning_ghz);
}

inline ConfigFractions config_fractions(double detuning_ghz, const SampleParams& p, const FieldDistribution& dist) {
  return SpectrumModel(p, dist, BroadeningParams{}).fractions(detuning_ghz);
}

inline double fluorescence(double detuning_ghz, const SampleParams& p, const FieldDistribution& dist) {
  return SpectrumModel(p, dist, BroadeningParams{}).fluorescence(detuning_ghz);
}

// A uniform external field along the NV axis shifts both branches by
// chi_e_par * dE, equivalent to driving at detuning - chi_e_par * dE.
inline double equivalent_detuning(double delta_e_par_vcm, double detuning_ghz, const SampleParams& p) {
  return detuning_ghz - p.chi_e_par * delta_e_par_vcm * 1e-3;
}

struct FieldResponse {
  Spectrum spectrum;           // total spectrum under the applied field
  double fluorescence_delta;   // change of the relative fluorescence
};

inline FieldResponse external_field_response(const SpectrumModel& m, double delta_e_par_vcm, double detuning_ghz) {
  const double d = equivalent_detuning(delta_e_par_vcm, detuning_ghz, m.params());
  return {m.total(d), m.fluorescence(d) - m.fluorescence(detuning_ghz)};
}

}  // namespace nvelec
