#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "nvelec/fit.hpp"
#include "nvelec/pipeline.hpp"

using namespace nvelec;

namespace {

Spectrum lorentz_pair(double half_split, double fwhm, double offset = 0.0, double step = 0.02) {
  Spectrum s;
  for (int i = -750; i <= 750; ++i) {
    const double w = i * step;
    s.mw_offset.push_back(w);
    s.signal.push_back(offset + lorentzian(w - half_split, fwhm) + lorentzian(w + half_split, fwhm));
  }
  return s;
}

const SpectrumModel& fit_model() {
  static const SpectrumModel m(SampleParams{}, FieldDistribution::from_ratio(ChargeDensity::ppm(15.0), 2.027),
                               BroadeningParams{}, SpectralGrid{15.0, 0.1});
  return m;
}

const std::vector<double>& grid() {
  static const auto d = detuning_grid(0.0, 700.0, 50.0);
  return d;
}

const std::vector<double>& truth() {
  static const auto t = model_splittings(fit_model(), grid());
  return t;
}

SplittingData exact_data(double sigma) {
  SplittingData d;
  d.detuning_ghz = grid();
  d.pi_perp_mhz = truth();
  d.sigma_mhz.assign(grid().size(), sigma);
  return d;
}

const FitResult& exact_fit() {
  static const auto f = fit_susceptibilities(exact_data(0.1), fit_model());
  return f;
}

}  // namespace

TEST(Peaks, ParabolaVertex) {
  const auto [x, y] = parabola_vertex(-1.0, 0.0, 0.0, 1.0, 1.0, 0.0);
  EXPECT_NEAR(x, 0.0, 1e-15);
  EXPECT_NEAR(y, 1.0, 1e-15);
  const auto v = parabola_vertex(1.0, 3.0 - 0.25, 2.0, 3.0 - 0.25, 3.0, 3.0 - 2.25);
  EXPECT_NEAR(v.first, 1.5, 1e-12);
  EXPECT_NEAR(v.second, 3.0, 1e-12);
}

// Overlap pulls the maxima of the sum inward; references are the exact maxima
// from a 30-digit root find.
TEST(Peaks, DoubleLorentzianSplitting) {
  const std::pair<double, double> cases[] = {
      {1.0, 0.993009555593393923}, {2.4, 2.399446737322171090}, {5.0, 4.999937810173687685}};
  for (const auto& [a, peak] : cases) {
    const auto s = lorentz_pair(a, 1.0);
    EXPECT_NEAR(extract_peak_splitting(s).pi_perp, peak, 2e-5) << a;
    EXPECT_NEAR(model_splitting(s), peak, 2e-5);
  }
}

TEST(Peaks, OffsetDoesNotMoveThePeaks) {
  const auto a = find_peak_pair(lorentz_pair(2.0, 1.0));
  const auto b = find_peak_pair(lorentz_pair(2.0, 1.0, 40.0));
  EXPECT_NEAR(a.splitting(), b.splitting(), 1e-9);
}

TEST(Peaks, SinglePeakIsUnresolved) {
  const auto s = lorentz_pair(0.0, 1.0);
  EXPECT_THROW(find_peak_pair(s), PeaksUnresolved);
  // Model spectra fall back to the central maximum.
  EXPECT_NEAR(model_splitting(s), 0.0, 1e-12);
  Spectrum tiny{{0.0, 1.0}, {1.0, 2.0}};
  EXPECT_THROW(find_peak_pair(tiny), DomainError);
}

TEST(Peaks, ProminenceIgnoresShoulders) {
  std::vector<double> x, y;
  for (int i = 0; i < 400; ++i) {
    const double w = -10.0 + 0.05 * i;
    x.push_back(w);
    y.push_back(lorentzian(w - 3.0, 1.0) + 0.02 * lorentzian(w - 6.0, 0.4) + lorentzian(w + 3.0, 1.0));
  }
  const auto p = find_peaks(x, y, 0.1);
  ASSERT_EQ(p.size(), 2u);
  EXPECT_NEAR(p[0].position, -3.0, 1e-3);
  EXPECT_NEAR(p[1].position, 3.0, 1e-3);
}

TEST(Peaks, RobustNoiseOfGaussianSamples) {
  std::mt19937_64 g(4);
  std::normal_distribution<double> nd(0.0, 0.3);
  std::vector<double> y(20000);
  for (auto& v : y) v = nd(g);
  EXPECT_NEAR(robust_noise(y), 0.3, 0.02);
}

TEST(Peaks, MonteCarloUncertaintyShrinksWithNoise) {
  const auto s = lorentz_pair(2.0, 1.0);
  double prev = 0.0;
  for (double noise : {0.0005, 0.002, 0.008}) {
    const auto u = peak_uncertainty_mc(s, noise, 200, 11);
    EXPECT_EQ(u.unresolved, 0);
    EXPECT_GT(u.sigma, prev) << noise;
    prev = u.sigma;
  }
  EXPECT_EQ(peak_uncertainty_mc(s, 0.0, 100, 1).sigma, 0.0);
  EXPECT_THROW(peak_uncertainty_mc(s, 0.01, 50, 1), DomainError);
  // Same seed, different thread count: identical result.
  EXPECT_EQ(peak_uncertainty_mc(s, 0.004, 100, 3, 1).sigma, peak_uncertainty_mc(s, 0.004, 100, 3, 3).sigma);
}

TEST(Peaks, MonteCarloUncertaintyShrinksWithProminence) {
  const auto weak = lorentz_pair(2.0, 1.0);
  auto strong = weak;
  for (double& v : strong.signal) v *= 3.0;
  EXPECT_LT(peak_uncertainty_mc(strong, 0.004, 200, 5).sigma, peak_uncertainty_mc(weak, 0.004, 200, 5).sigma);
}

// Steep flanks, one maximum: most noisy copies have nothing on one side.
TEST(Peaks, MonteCarloUncertaintyGivesUpOnSinglePeak) {
  Spectrum s;
  for (int i = -100; i <= 100; ++i) {
    s.mw_offset.push_back(0.01 * i);
    s.signal.push_back(lorentzian(0.01 * i, 0.2));
  }
  EXPECT_THROW(peak_uncertainty_mc(s, 1e-3, 100, 2), PeaksUnresolved);
}

TEST(Linewidth, LorentzianPairWidth) {
  const auto lw = extract_linewidth(lorentz_pair(4.0, 1.6, 0.1));
  EXPECT_NEAR(lw.gamma_g, 1.6, 0.016);
  EXPECT_LT(lw.gamma_g_err, 1e-3);
  EXPECT_NEAR(lw.pi_perp, 4.0, 1e-3);
}

TEST(LeastSquares, ExponentialRecoveryAndMonotoneHistory) {
  std::vector<double> t, y;
  for (int i = 0; i < 30; ++i) {
    t.push_back(0.1 * i);
    y.push_back(2.5 * std::exp(-1.3 * t.back()));
  }
  auto r = [&](const Eigen::VectorXd& q) {
    Eigen::VectorXd v(30);
    for (int i = 0; i < 30; ++i) v[i] = q[0] * std::exp(-q[1] * t[i]) - y[i];
    return v;
  };
  Eigen::VectorXd x0(2);
  x0 << 1.0, 0.2;
  LmOptions o;
  o.fd_step = 1e-6;
  const auto f = levenberg_marquardt(r, x0, o);
  EXPECT_TRUE(f.converged);
  EXPECT_NEAR(f.x[0], 2.5, 1e-6);
  EXPECT_NEAR(f.x[1], 1.3, 1e-6);
  for (std::size_t i = 1; i < f.history.size(); ++i) EXPECT_LE(f.history[i], f.history[i - 1]);
}

TEST(Analytic, PublishedInputs) {
  const auto [perp, par] = analytic_susceptibilities(200.0, 1e-5, 2.4, 17.0);
  EXPECT_NEAR(perp, 1.1805555555555556, 1e-12);
  EXPECT_NEAR(par, 0.783091964389469, 1e-12);
  EXPECT_NEAR(perp, 1.2, 0.05 * 1.2);
  EXPECT_NEAR(par, 0.8, 0.05 * 0.8);
}

TEST(Analytic, InvertsItsOwnGeometry) {
  // Build (elbow, slope) from a known pair and recover it.
  const double perp = 1.43, par = 0.68, e0_freq = 2.4, chi_g = 17.0;
  const double alpha = std::atan2(perp, par);
  const double ratio = par / (std::cos(alpha) * chi_g * 1e-6);
  const auto r = analytic_susceptibilities(ratio * e0_freq * 1e-3, std::sin(alpha) / ratio, e0_freq, chi_g);
  EXPECT_NEAR(r.first, perp, 1e-12);
  EXPECT_NEAR(r.second, par, 1e-12);
  EXPECT_THROW(analytic_susceptibilities(200.0, 1e-4, 2.4, 17.0), DomainError);
  EXPECT_THROW(analytic_susceptibilities(0.0, 1e-5, 2.4, 17.0), DomainError);
}

TEST(Elbow, RecoversPlantedHinge) {
  std::vector<double> x, y, z;
  for (int i = 0; i <= 14; ++i) {
    x.push_back(50.0 * i);
    y.push_back(2.4 + 0.01 * std::max(0.0, x.back() - 215.0));
    z.push_back(2.4 + 0.002 * (x.back() - 215.0) + 0.008 * std::max(0.0, x.back() - 215.0));
  }
  const auto a = fit_elbow(x, y);
  EXPECT_NEAR(a.elbow, 215.0, 1e-4);
  EXPECT_NEAR(a.slope_high, 0.01, 1e-9);
  EXPECT_NEAR(a.level, 2.4, 1e-9);
  const auto b = fit_elbow(x, z, false);
  EXPECT_NEAR(b.elbow, 215.0, 1e-4);
  EXPECT_NEAR(b.slope_low, 0.002, 1e-9);
  EXPECT_NEAR(b.slope_high, 0.01, 1e-9);
  EXPECT_THROW(fit_elbow({1.0, 2.0}, {1.0, 2.0}), DomainError);
}

TEST(Covariance, RankDeficientJacobianIsFlagged) {
  FitResult r;
  Eigen::MatrixXd j(3, 2);
  j << 1, 2, 2, 4, 3, 6;
  detail::finish_covariance(r, j, 1e6);
  EXPECT_TRUE(r.degenerate);
  Eigen::MatrixXd k(3, 2);
  k << 1, 0, 0, 2, 1, 1;
  detail::finish_covariance(r, k, 1e6);
  EXPECT_FALSE(r.degenerate);
  const Eigen::Matrix2d expect = (k.transpose() * k).inverse();
  EXPECT_NEAR((r.covariance - expect).norm(), 0.0, 1e-12);
}

TEST(SusceptibilityFit, NoiseFreeRecovery) {
  const auto& f = exact_fit();
  EXPECT_TRUE(f.converged);
  EXPECT_FALSE(f.degenerate);
  EXPECT_NEAR(f.chi_e_perp, 1.43, 1e-3 * 1.43);
  EXPECT_NEAR(f.chi_e_par, 0.68, 1e-3 * 0.68);
  EXPECT_LT(f.chi2, 1e-4);
  EXPECT_EQ(f.n_obs, grid().size());
  for (std::size_t i = 1; i < f.objective_history.size(); ++i)
    EXPECT_LE(f.objective_history[i], f.objective_history[i - 1]);
}

TEST(SusceptibilityFit, EllipseAxesScaleWithNoise) {
  const auto half = fit_susceptibilities(exact_data(0.05), fit_model());
  const auto a = confidence_region(exact_fit()), b = confidence_region(half);
  EXPECT_NEAR(b.semi_major / a.semi_major, 0.5, 0.01);
  EXPECT_NEAR(b.semi_minor / a.semi_minor, 0.5, 0.01);
  EXPECT_NEAR(a.delta_chi2, 6.18, 0.0);
  // Boundary points sit at Delta chi^2 in the quadratic approximation.
  const Eigen::Matrix2d inv = exact_fit().covariance.inverse();
  for (double t : {0.0, 1.0, 2.5}) {
    const auto [x, y] = a.point(t);
    const Eigen::Vector2d d(x - a.center_perp, y - a.center_par);
    EXPECT_NEAR(d.dot(inv * d), 6.18, 1e-6);
  }
}

TEST(SusceptibilityFit, EllipseMatchesFiniteDifferenceHessian) {
  // Hessian of chi^2 in linear parameters by central differences, independent of
  // the Jacobian the fit used.
  const auto d = exact_data(0.1);
  auto chi2 = [&](double p, double q) {
    const auto m = model_splittings(fit_model().with_excited(p, q), d.detuning_ghz);
    double s = 0.0;
    for (std::size_t i = 0; i < m.size(); ++i) s += std::pow((m[i] - d.pi_perp_mhz[i]) / d.sigma_mhz[i], 2);
    return s;
  };
  const double p = 1.43, q = 0.68, hp = 0.01, hq = 0.005;
  const double f0 = chi2(p, q);
  Eigen::Matrix2d h;
  h(0, 0) = (chi2(p + hp, q) - 2 * f0 + chi2(p - hp, q)) / (hp * hp);
  h(1, 1) = (chi2(p, q + hq) - 2 * f0 + chi2(p, q - hq)) / (hq * hq);
  h(0, 1) = h(1, 0) =
      (chi2(p + hp, q + hq) - chi2(p + hp, q - hq) - chi2(p - hp, q + hq) + chi2(p - hp, q - hq)) / (4 * hp * hq);
  const Eigen::Matrix2d cov = (0.5 * h).inverse();
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(cov);
  const Eigen::Vector2d ref = es.eigenvectors().col(1);
  const auto e = confidence_region(exact_fit());
  const Eigen::Vector2d got = e.axes.col(1);
  const double angle = std::acos(std::min(1.0, std::abs(ref.dot(got)))) * 180.0 / pi;
  EXPECT_LT(angle, 5.0);
}

TEST(SusceptibilityFit, CentralScanPointHasNoSpread) {
  const auto& f = exact_fit();
  const auto s = systematic_scan(exact_data(0.1), fit_model(), f, {{15.0, 1.7}});
  ASSERT_EQ(s.outcomes.size(), 1u);
  ASSERT_TRUE(s.outcomes[0].fit.has_value()) << s.outcomes[0].error;
  EXPECT_NEAR(s.spread[0], 0.0, 1e-9);
  EXPECT_NEAR(s.spread[1], 0.0, 1e-9);
}

TEST(SusceptibilityFit, RejectsBadData) {
  SplittingData d;
  d.detuning_ghz = {0.0, 100.0};
  d.pi_perp_mhz = {2.0, 3.0};
  d.sigma_mhz = {0.1, 0.1};
  EXPECT_THROW(fit_susceptibilities(d, fit_model()), DomainError);
  d.detuning_ghz.push_back(200.0);
  d.pi_perp_mhz.push_back(4.0);
  d.sigma_mhz.push_back(0.0);
  EXPECT_THROW(d.validate(), DomainError);
}

TEST(SyntheticData, SeededAndStreamed) {
  const auto a = synthetic_splittings({0.0, 50.0}, {2.0, 2.1}, 0.1, 5, 1);
  const auto b = synthetic_splittings({0.0, 50.0}, {2.0, 2.1}, 0.1, 5, 1);
  const auto c = synthetic_splittings({0.0, 50.0}, {2.0, 2.1}, 0.1, 5, 2);
  EXPECT_EQ(a.pi_perp_mhz, b.pi_perp_mhz);
  EXPECT_NE(a.pi_perp_mhz, c.pi_perp_mhz);
  EXPECT_EQ(a.sigma_mhz[1], 0.1);
}
