#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <utility>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "nvelec/parallel.hpp"
#include "nvelec/params.hpp"

namespace nvelec {

// Unit-area Lorentzian of full width `fwhm`.
inline double lorentzian(double x, double fwhm) {
  const double g = 0.5 * fwhm;
  return g / (pi * (x * x + g * g));
}

// Hyperfine shifts grouped by magnitude: (|B|, multiplicity).
inline std::vector<std::pair<double, double>> hyperfine_groups(const std::vector<double>& shifts) {
  std::vector<std::pair<double, double>> g;
  for (double b : shifts) {
    const double a = std::abs(b);
    auto it = std::find_if(g.begin(), g.end(), [&](const auto& p) { return std::abs(p.first - a) <= 1e-12 * (1.0 + a); });
    if (it == g.end())
      g.emplace_back(a, 1.0);
    else
      it->second += 1.0;
  }
  return g;
}

// Ground-state lineshape of one configuration with transverse splitting `split`
// (MHz): inhomogeneous Lorentzian broadening added in quadrature to the splitting,
// then convolved with a homogeneous Lorentzian.
class PrimitiveLineshape {
 public:
  PrimitiveLineshape(LineBroadening b, const std::vector<double>& hyperfine_mhz, double rel_tol = 1e-9)
      : b_(b), groups_(hyperfine_groups(hyperfine_mhz)), tol_(rel_tol) {
    if (!(b.kappa_ih >= 0.0 && b.kappa_h >= 0.0) || (b.kappa_ih == 0.0 && b.kappa_h == 0.0))
      throw DomainError("PrimitiveLineshape: needs non-negative widths, not both zero");
  }

  const LineBroadening& broadening() const { return b_; }

  // Inhomogeneous-only lineshape; zero for |omega| <= split.
  double inhomogeneous(double omega, double split) const {
    if (b_.kappa_ih <= 0.0) throw DomainError("inhomogeneous lineshape requires kappa_ih > 0");
    const double w = std::abs(omega);
    if (w <= split) return 0.0;
    const double u = std::sqrt((w - split) * (w + split));
    const double h = 0.5 * b_.kappa_ih;
    double s = 0.0;
    for (const auto& [a, m] : groups_) s += m * h * w / (pi * u * ((a - u) * (a - u) + h * h));
    return s;
  }

  double operator()(double omega, double split) const {
    if (b_.kappa_h == 0.0) return inhomogeneous(omega, split);
    if (b_.kappa_ih == 0.0) {
      double s = 0.0;
      for (const auto& [a, m] : groups_) {
        const double w = (a == 0.0 ? 0.5 : 1.0) * m;
        const double c = std::hypot(a, split);
        s += w * (lorentzian(omega - c, b_.kappa_h) + lorentzian(omega + c, b_.kappa_h));
      }
      return s;
    }
    double s = 0.0;
    for (const auto& [a, m] : groups_) s += m * (branch(omega, split, a, +1.0) + branch(omega, split, a, -1.0));
    return s;
  }

  // Total area of the lineshape (independent of split and kappa_h).
  double area() const {
    double s = 0.0;
    for (const auto& [a, m] : groups_)
      s += m * (b_.kappa_ih == 0.0 ? (a == 0.0 ? 1.0 : 2.0) : 1.0 + 2.0 * std::atan(2.0 * a / b_.kappa_ih) / pi);
    return s;
  }

 private:
  // int_0^inf du L_ih(u - a) L_h(omega - sign * sqrt(u^2 + split^2))
  double branch(double omega, double split, double a, double sign) const {
    auto f = [&](double u) {
      return lorentzian(u - a, b_.kappa_ih) * lorentzian(omega - sign * std::sqrt(u * u + split * split), b_.kappa_h);
    };
    double pts[6];
    int n = 0;
    pts[n++] = 0.0;
    if (a > 0.0) pts[n++] = a;
    if (sign * omega > split) {
      const double us = std::sqrt((sign * omega - split) * (sign * omega + split));
      if (us > 0.0) pts[n++] = us;
    }
    pts[n++] = a + 20.0 * std::max(b_.kappa_ih, b_.kappa_h);
    std::sort(pts, pts + n);
    using boost::math::quadrature::gauss_kronrod;
    double s = 0.0;
    for (int i = 0; i + 1 < n; ++i)
      if (pts[i + 1] > pts[i]) s += gauss_kronrod<double, 15>::integrate(f, pts[i], pts[i + 1], 15, tol_);
    s += gauss_kronrod<double, 15>::integrate(f, pts[n - 1], std::numeric_limits<double>::infinity(), 15, tol_);
    return s;
  }

  LineBroadening b_;
  std::vector<std::pair<double, double>> groups_;
  double tol_;
};

// Lineshape tabulated on omega >= 0 (exact mirror for omega < 0) and on a
// midpoint grid of splittings split_k = (k + 1/2) * split_step.
struct LineshapeTable {
  std::vector<double> omega;   // non-negative, increasing, MHz
  double split_step = 0.0;     // MHz
  std::size_t n_split = 0;
  std::vector<double> values;  // values[i * n_split + k]

  double split(std::size_t k) const { return (static_cast<double>(k) + 0.5) * split_step; }
  const double* row(std::size_t i) const { return values.data() + i * n_split; }

  static LineshapeTable build(const PrimitiveLineshape& shape, std::vector<double> omega_nonneg, double split_step,
                              double split_max, unsigned threads = 1) {
    if (!(split_step > 0.0)) throw DomainError("LineshapeTable: split_step must be positive");
    LineshapeTable t;
    t.omega = std::move(omega_nonneg);
    t.split_step = split_step;
    t.n_split = static_cast<std::size_t>(std::ceil(split_max / split_step));
    t.values.assign(t.omega.size() * t.n_split, 0.0);
    parallel_for(t.omega.size(), threads, [&](std::size_t i) {
      for (std::size_t k = 0; k < t.n_split; ++k) t.values[i * t.n_split + k] = shape(t.omega[i], t.split(k));
    });
    return t;
  }
};

}  // namespace nvelec
