#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "nvelec/constants.hpp"
#include "nvelec/parallel.hpp"

namespace nvelec {

// Internal field split relative to the NV axis (z). V/cm.
struct FieldVector {
  double e_parallel = 0.0;
  double e_perp = 0.0;

  static FieldVector from_cartesian(double x, double y, double z) { return {z, std::hypot(x, y)}; }
  static FieldVector from_polar(double magnitude, double theta) {
    return {magnitude * std::cos(theta), magnitude * std::sin(theta)};
  }

  double magnitude() const { return std::hypot(e_parallel, e_perp); }
  double polar_angle() const { return std::atan2(e_perp, e_parallel); }
};

// Field scale e*rho^(2/3)/(4 pi eps0 eps_r) in V/cm.
inline double e_ref(ChargeDensity rho, const PhysicalConstants& c = default_constants()) {
  if (!(rho.value_ppm >= 0.0)) throw DomainError("e_ref: density must be non-negative");
  const double rho_m3 = rho.volumetric(c) * 1e6;
  const double e_vm = c.elementary_charge * std::cbrt(rho_m3 * rho_m3) /
                      (4.0 * pi * c.vacuum_permittivity * c.relative_permittivity_diamond);
  return e_vm / 100.0;
}

// Nearest-charge field magnitude distribution in units of E_ref.
namespace normalized {

inline constexpr double four_pi_thirds = 4.0 * pi / 3.0;

// Location of the maximum, (4 pi / 5)^(2/3).
inline double mode() { return std::pow(4.0 * pi / 5.0, 2.0 / 3.0); }

// P_r(1/sqrt(E)) / (2 E^(3/2)) = 2 pi E^(-5/2) exp(-4 pi / (3 E^(3/2))), unit area.
inline double pdf(double e_tilde) {
  if (!(e_tilde > 0.0)) throw DomainError("pdf_field_magnitude: requires e_tilde > 0");
  const double s = std::sqrt(e_tilde);
  const double e32 = e_tilde * s;
  return 2.0 * pi / (e32 * e_tilde) * std::exp(-four_pi_thirds / e32);
}

inline double cdf(double e_tilde) {
  if (e_tilde <= 0.0) return 0.0;
  return std::exp(-four_pi_thirds / (e_tilde * std::sqrt(e_tilde)));
}

inline double quantile(double u) {
  if (!(u > 0.0 && u < 1.0)) throw DomainError("quantile: requires u in (0, 1)");
  return std::pow(four_pi_thirds / -std::log(u), 2.0 / 3.0);
}

}  // namespace normalized

inline double pdf_field_magnitude(double e_tilde) { return normalized::pdf(e_tilde); }

// Analytic magnitude distribution, scaled to physical units.
struct FieldDistribution {
  double e_ref = 0.0;            // V/cm
  ChargeDensity rho_eff;
  ChargeDensity source_rho_c;

  static FieldDistribution from_ratio(ChargeDensity rho_c, double ratio,
                                      const PhysicalConstants& c = default_constants()) {
    if (!(ratio > 0.0)) throw DomainError("FieldDistribution: rho_eff/rho_c must be positive");
    FieldDistribution d;
    d.source_rho_c = rho_c;
    d.rho_eff = rho_c.scaled(ratio);
    d.e_ref = nvelec::e_ref(d.rho_eff, c);
    return d;
  }

  double ratio() const { return source_rho_c.value_ppm > 0.0 ? rho_eff.value_ppm / source_rho_c.value_ppm : 0.0; }

  // Density in 1/(V/cm).
  double pdf(double e_vcm) const { return e_vcm <= 0.0 ? 0.0 : normalized::pdf(e_vcm / e_ref) / e_ref; }
  double cdf(double e_vcm) const { return normalized::cdf(e_vcm / e_ref); }
  double quantile(double u) const { return normalized::quantile(u) * e_ref; }

  // E0 in V/cm.
  double most_probable() const { return normalized::mode() * e_ref; }
};

// Field at the origin from one charge of sign `sign` at `pos` (metres). V/cm.
inline std::array<double, 3> coulomb_field(int sign, const std::array<double, 3>& pos,
                                           const PhysicalConstants& c = default_constants()) {
  const double k = c.elementary_charge / (4.0 * pi * c.vacuum_permittivity * c.relative_permittivity_diamond) / 100.0;
  const double r2 = pos[0] * pos[0] + pos[1] * pos[1] + pos[2] * pos[2];
  const double f = -sign * k / (r2 * std::sqrt(r2));
  return {f * pos[0], f * pos[1], f * pos[2]};
}

struct MonteCarloOptions {
  double box_factor = 20.0;           // box radius / mean nearest-charge spacing
  double exclusion_radius_m = 3.57e-10;
  std::size_t n_charges = 0;          // 0: derived from box_factor

  std::size_t charges() const {
    if (n_charges > 0) return n_charges;
    // mean nearest spacing = Gamma(4/3) (3 / (4 pi rho))^(1/3)
    const double spacing = std::tgamma(4.0 / 3.0) * std::cbrt(3.0 / (4.0 * pi));
    const double r = box_factor * spacing;
    return static_cast<std::size_t>(std::llround(4.0 / 3.0 * pi * r * r * r));
  }
};

// One probe sample: n uniformly placed charges with random signs in a sphere of
// volume n / rho_c centred on the probe.
inline FieldVector sample_field_mc(ChargeDensity rho_c, std::size_t n_charges, std::uint64_t rng_seed,
                                   std::uint64_t stream = 0, double exclusion_radius_m = 3.57e-10,
                                   const PhysicalConstants& c = default_constants()) {
  if (n_charges < 1) throw DomainError("sample_field_mc: n_charges must be >= 1");
  if (!(rho_c.value_ppm > 0.0)) throw DomainError("sample_field_mc: rho_c must be positive");
  const double rho_m3 = rho_c.volumetric(c) * 1e6;
  const double radius = std::cbrt(3.0 * static_cast<double>(n_charges) / (4.0 * pi * rho_m3));
  if (!(exclusion_radius_m < radius)) throw DomainError("sample_field_mc: exclusion radius exceeds the box");
  const double k = c.elementary_charge / (4.0 * pi * c.vacuum_permittivity * c.relative_permittivity_diamond) / 100.0;
  const double r2_min = exclusion_radius_m * exclusion_radius_m;
  const double r2_max = radius * radius;

  // One 64-bit draw per trial: three 21-bit coordinates (cell centres of a grid
  // ~1e-13 m at ppm densities) and the charge sign in the top bit.
  constexpr std::uint64_t mask = (std::uint64_t{1} << 21) - 1;
  const double step = 2.0 * radius / static_cast<double>(mask + 1);
  auto coord = [&](std::uint64_t bits) { return (static_cast<double>(bits & mask) + 0.5) * step - radius; };

  auto g = stream_rng(rng_seed, stream);
  double ex = 0.0, ey = 0.0, ez = 0.0;
  for (std::size_t i = 0; i < n_charges; ++i) {
    double x, y, z, r2;
    std::uint64_t w;
    do {
      w = g();
      x = coord(w);
      y = coord(w >> 21);
      z = coord(w >> 42);
      r2 = x * x + y * y + z * z;
    } while (r2 > r2_max || r2 < r2_min);
    const double s = (w >> 63) ? 1.0 : -1.0;
    const double f = s / (r2 * std::sqrt(r2));
    ex += f * x;
    ey += f * y;
    ez += f * z;
  }
  return FieldVector::from_cartesian(k * ex, k * ey, k * ez);
}

// Samples with indices [first, first + count). Sample i always uses stream i, so
// disjoint index ranges can be drawn separately and concatenated.
inline std::vector<FieldVector> sample_fields_mc(ChargeDensity rho_c, std::size_t first, std::size_t count,
                                                 std::uint64_t seed, const MonteCarloOptions& opt = {},
                                                 unsigned threads = 1,
                                                 const PhysicalConstants& c = default_constants()) {
  std::vector<FieldVector> out(count);
  const std::size_t n = opt.charges();
  parallel_for(count, threads, [&](std::size_t i) {
    out[i] = sample_field_mc(rho_c, n, seed, first + i, opt.exclusion_radius_m, c);
  });
  return out;
}

// Largest |F_emp - F| over sorted samples lying in [lo, hi]. `cdf` maps a value to
// the model CDF.
template <class Cdf>
double ks_distance_windowed(const std::vector<double>& sorted, double lo, double hi, Cdf&& cdf) {
  const double n = static_cast<double>(sorted.size());
  auto it = std::lower_bound(sorted.begin(), sorted.end(), lo);
  double d = 0.0;
  for (; it != sorted.end() && *it <= hi; ++it) {
    const double i = static_cast<double>(it - sorted.begin());
    const double f = cdf(*it);
    d = std::max({d, std::abs(f - i / n), std::abs(f - (i + 1.0) / n)});
  }
  return d;
}

// Mode of a sample of positive values from a smoothed histogram with parabolic
// refinement. Throws when the peak holds too few counts to be located reliably.
inline double histogram_mode(const std::vector<double>& values, double bin_width, double smooth_sigma_bins = 3.0,
                             double min_peak_counts = 400.0) {
  if (values.empty()) throw NumericalError("histogram_mode: no samples");
  double vmax = 0.0;
  for (double v : values) vmax = std::max(vmax, v);
  double median_guess = values[values.size() / 2];
  const double top = std::min(vmax, 50.0 * std::max(median_guess, bin_width));
  const std::size_t nb = static_cast<std::size_t>(top / bin_width) + 2;
  std::vector<double> h(nb, 0.0);
  for (double v : values) {
    if (v < 0.0 || v >= top) continue;
    h[static_cast<std::size_t>(v / bin_width)] += 1.0;
  }
  const int half = static_cast<int>(std::ceil(4.0 * smooth_sigma_bins));
  std::vector<double> kern(2 * half + 1);
  double ksum = 0.0;
  for (int j = -half; j <= half; ++j) ksum += kern[j + half] = std::exp(-0.5 * j * j / (smooth_sigma_bins * smooth_sigma_bins));
  for (double& w : kern) w /= ksum;
  std::vector<double> s(nb, 0.0);
  for (std::size_t i = 0; i < nb; ++i)
    for (int j = -half; j <= half; ++j) {
      const long k = static_cast<long>(i) + j;
      if (k >= 0 && k < static_cast<long>(nb)) s[i] += kern[j + half] * h[k];
    }
  std::size_t im = static_cast<std::size_t>(std::max_element(s.begin(), s.end()) - s.begin());
  // counts effectively averaged by the kernel at the peak
  const double eff = s[im] * 2.0 * std::sqrt(pi) * smooth_sigma_bins;
  if (eff < min_peak_counts) {
    const double need = std::ceil(static_cast<double>(values.size()) * min_peak_counts / std::max(eff, 1.0));
    throw NumericalError("MC histogram too noisy to locate a mode; need at least " +
                         std::to_string(static_cast<long long>(need)) + " samples");
  }
  double x = (static_cast<double>(im) + 0.5) * bin_width;
  if (im > 0 && im + 1 < nb) {
    const double a = s[im - 1], b = s[im], cc = s[im + 1];
    const double den = a - 2.0 * b + cc;
    if (den < 0.0) x += 0.5 * (a - cc) / den * bin_width;
  }
  return x;
}

enum class CalibrationMethod {
  distribution,  // minimise the windowed KS distance
  mode,          // match the analytic and Monte Carlo modes
};

struct CalibrationOptions {
  CalibrationMethod method = CalibrationMethod::distribution;
  std::size_t samples = 100000;
  MonteCarloOptions mc{};
  double window_lo = 0.3;  // in units of E0
  double window_hi = 3.0;
  double ratio_min = 0.25;
  double ratio_max = 16.0;
  unsigned threads = 1;
};

struct Calibration {
  ChargeDensity rho_c;
  ChargeDensity rho_eff;
  double ratio = 0.0;          // rho_eff / rho_c
  double ks_distance = 0.0;    // windowed KS at the returned ratio
  double mc_mode_vcm = 0.0;    // histogram mode of the Monte Carlo magnitudes
  std::size_t samples = 0;
  CalibrationMethod method = CalibrationMethod::distribution;

  FieldDistribution distribution(const PhysicalConstants& c = default_constants()) const {
    return FieldDistribution::from_ratio(rho_c, ratio, c);
  }
};

// Windowed KS distance between sorted magnitudes (V/cm) and the analytic model at
// rho_eff = ratio * rho_c; the window is [lo, hi] * E0 of that model.
inline double ks_for_ratio(const std::vector<double>& sorted_vcm, ChargeDensity rho_c, double ratio, double lo,
                           double hi, const PhysicalConstants& c = default_constants()) {
  const auto d = FieldDistribution::from_ratio(rho_c, ratio, c);
  const double e0 = d.most_probable();
  return ks_distance_windowed(sorted_vcm, lo * e0, hi * e0, [&](double e) { return d.cdf(e); });
}

// Calibrates from precomputed magnitudes (V/cm).
inline Calibration calibrate_from_magnitudes(ChargeDensity rho_c, std::vector<double> mags,
                                             const CalibrationOptions& opt = {},
                                             const PhysicalConstants& c = default_constants()) {
  if (!(rho_c.value_ppm > 0.0)) throw DomainError("calibrate_rho_eff: rho_c must be positive");
  std::sort(mags.begin(), mags.end());
  const double scale = e_ref(rho_c, c);
  Calibration out;
  out.rho_c = rho_c;
  out.samples = mags.size();
  out.method = opt.method;
  {
    std::vector<double> u(mags.size());
    for (std::size_t i = 0; i < mags.size(); ++i) u[i] = mags[i] / scale;
    out.mc_mode_vcm = histogram_mode(u, 0.05) * scale;
  }

  if (opt.method == CalibrationMethod::mode) {
    out.ratio = std::pow(out.mc_mode_vcm / (normalized::mode() * scale), 1.5);
  } else {
    auto ks = [&](double r) { return ks_for_ratio(mags, rho_c, r, opt.window_lo, opt.window_hi, c); };
    const int n = 121;
    const double l0 = std::log(opt.ratio_min), l1 = std::log(opt.ratio_max);
    int best = 0;
    double fbest = std::numeric_limits<double>::infinity();
    for (int i = 0; i < n; ++i) {
      const double f = ks(std::exp(l0 + (l1 - l0) * i / (n - 1)));
      if (f < fbest) fbest = f, best = i;
    }
    double a = l0 + (l1 - l0) * std::max(best - 1, 0) / (n - 1);
    double b = l0 + (l1 - l0) * std::min(best + 1, n - 1) / (n - 1);
    const double gr = (std::sqrt(5.0) - 1.0) / 2.0;
    double x1 = b - gr * (b - a), x2 = a + gr * (b - a);
    double f1 = ks(std::exp(x1)), f2 = ks(std::exp(x2));
    for (int it = 0; it < 60 && b - a > 1e-7; ++it) {
      if (f1 <= f2) {
        b = x2, x2 = x1, f2 = f1;
        x1 = b - gr * (b - a), f1 = ks(std::exp(x1));
      } else {
        a = x1, x1 = x2, f1 = f2;
        x2 = a + gr * (b - a), f2 = ks(std::exp(x2));
      }
    }
    const double xm = f1 <= f2 ? x1 : x2;
    out.ratio = std::min(f1, f2) <= fbest ? std::exp(xm) : std::exp(l0 + (l1 - l0) * best / (n - 1));
  }
  out.rho_eff = rho_c.scaled(out.ratio);
  out.ks_distance = ks_for_ratio(mags, rho_c, out.ratio, opt.window_lo, opt.window_hi, c);
  return out;
}

inline Calibration calibrate_rho_eff(ChargeDensity rho_c, std::uint64_t rng_seed, const CalibrationOptions& opt = {},
                                     const PhysicalConstants& c = default_constants()) {
  if (!(rho_c.value_ppm > 0.0)) throw DomainError("calibrate_rho_eff: rho_c must be positive");
  const auto fields = sample_fields_mc(rho_c, 0, opt.samples, rng_seed, opt.mc, opt.threads, c);
  std::vector<double> mags(fields.size());
  for (std::size_t i = 0; i < fields.size(); ++i) mags[i] = fields[i].magnitude();
  return calibrate_from_magnitudes(rho_c, std::move(mags), opt, c);
}

// E0 = (4 pi / 5)^(2/3) e_ref(ratio * rho_c), V/cm.
inline double most_probable_field(ChargeDensity rho_c, double rho_eff_ratio,
                                  const PhysicalConstants& c = default_constants()) {
  if (rho_c.value_ppm == 0.0) return 0.0;
  return normalized::mode() * e_ref(rho_c.scaled(rho_eff_ratio), c);
}

}  // namespace nvelec
