#include <cmath>

#include <gtest/gtest.h>

#include "nvelec/fit.hpp"
#include "nvelec/sensitivity.hpp"
#include "nvelec/spectrum.hpp"

using namespace nvelec;

namespace {

// Ratio 2 at 15 ppm keeps the reference values below exact; a coarse offset grid
// keeps table construction fast.
const FieldDistribution& dist() {
  static const auto d = FieldDistribution::from_ratio(ChargeDensity::ppm(15.0), 2.0);
  return d;
}

const SpectrumModel& model() {
  static const SpectrumModel m(SampleParams{}, dist(), BroadeningParams{}, SpectralGrid{15.0, 0.25});
  return m;
}

double at(const Spectrum& s, double w) {
  for (std::size_t i = 0; i < s.size(); ++i)
    if (std::abs(s.mw_offset[i] - w) < 1e-9) return s.signal[i];
  ADD_FAILURE() << "offset " << w << " not on grid";
  return 0.0;
}

}  // namespace

TEST(SpectralGrid, MirrorIsSymmetric) {
  SpectralGrid g{1.0, 0.25};
  EXPECT_EQ(g.n_half(), 4u);
  const auto s = g.mirror({5, 4, 3, 2, 1});
  ASSERT_EQ(s.size(), 9u);
  EXPECT_EQ(s.mw_offset.front(), -1.0);
  EXPECT_EQ(s.signal.front(), 1.0);
  EXPECT_EQ(s.signal[4], 5.0);
  EXPECT_THROW((SpectralGrid{1.0, 0.0}).validate(), DomainError);
  EXPECT_THROW((SpectralGrid{0.1, 0.2}).validate(), DomainError);
}

// Reference fractions: scipy quadrature over the field CDF with exact polar-angle
// intervals, written independently of the library.
TEST(Fractions, MatchIndependentQuadrature) {
  const double ref[4][3] = {{0.0, 3.690034845968715e-05, 0.999981549825737},
                            {200.0, 6.48380932548453e-05, 1.34107370473426},
                            {500.0, 1.9779710149496345e-05, 1.7298921837080667},
                            {-100.0, 5.0081929567756195e-05, 0.8686075094091513}};
  for (const auto& r : ref) {
    const auto f = model().fractions(r[0]);
    EXPECT_NEAR(f.f_resonant, r[1], 1e-6 * r[1]) << r[0];
    EXPECT_NEAR(f.f_offresonant, r[2], 1e-7 * r[2]) << r[0];
  }
}

TEST(Fractions, ResonantWeightIntegratesToTheResonantFraction) {
  // Trapezoid over E_perp of the resonant density.
  const double d = 200.0, top = 30.0 * dist().e_ref;
  const int n = 200000;
  double s = 0.0;
  for (int i = 1; i < n; ++i) s += model().resonant_weight(top * i / n, d);
  s *= top / n;
  EXPECT_NEAR(s, model().fractions(d).f_resonant, 2e-4 * s);
}

TEST(Fluorescence, PlateauAndLimits) {
  // Far below the zero-phonon line both branches sit in the off-resonant band.
  EXPECT_NEAR(model().fluorescence(20000.0), 1.0, 2e-3);
  // Far above it nothing is excited.
  EXPECT_LT(model().fluorescence(-20000.0), 1e-3);
  const auto f = model().fractions(300.0);
  EXPECT_DOUBLE_EQ(model().fluorescence(300.0), 0.5 * (1e5 * f.f_resonant + f.f_offresonant));
  EXPECT_DOUBLE_EQ(model().resonant_enhancement(300.0), 0.5 * 1e5 * f.f_resonant);
  EXPECT_DOUBLE_EQ(fluorescence(300.0, SampleParams{}, dist()), model().fluorescence(300.0));
}

// Reference: scipy double quadrature of the resonant E_perp density against the
// primitive lineshape, truncated at the same splitting range as the table.
TEST(Spectrum, ResonantMatchesIndependentQuadrature) {
  const auto s = model().resonant(200.0);
  EXPECT_NEAR(at(s, 0.0), 5.281327048539666e-06, 2e-3 * 5.28e-6);
  EXPECT_NEAR(at(s, 2.5), 3.215736866512822e-05, 2e-3 * 3.22e-5);
}

TEST(Spectrum, EverySpectrumIsEven) {
  for (double d : {-50.0, 0.0, 150.0, 600.0})
    for (const auto& s : {model().resonant(d), model().offresonant(d), model().total(d)}) {
      s.validate();
      const std::size_t n = s.size();
      for (std::size_t i = 0; i < n; ++i) {
        EXPECT_DOUBLE_EQ(s.mw_offset[i], -s.mw_offset[n - 1 - i]);
        EXPECT_NEAR(s.signal[i], s.signal[n - 1 - i], 1e-6 * std::abs(s.signal[i]) + 1e-300);
      }
    }
}

TEST(Spectrum, TotalCombinesChannels) {
  SampleParams p;
  p.epsilon_c = 3.0;
  const SpectrumModel m(p, dist(), BroadeningParams{}, SpectralGrid{15.0, 0.25});
  const auto r = m.resonant(100.0), o = m.offresonant(100.0), t = m.total(100.0);
  for (std::size_t i = 0; i < t.size(); ++i) EXPECT_NEAR(t.signal[i], 3.0 * r.signal[i] - o.signal[i], 1e-18);
}

TEST(Spectrum, ReproducibleAcrossThreadCounts) {
  QuadratureOptions q;
  q.threads = 3;
  const SpectrumModel m(SampleParams{}, dist(), BroadeningParams{}, SpectralGrid{15.0, 0.25}, q);
  const auto a = m.resonant(250.0), b = model().resonant(250.0);
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a.signal[i], b.signal[i]);
}

TEST(Spectrum, SplittingGrowsWithDetuning) {
  const auto pi = model_splittings(model(), {0.0, 100.0, 300.0, 600.0});
  EXPECT_GT(pi[0], 1.5);
  for (std::size_t i = 1; i < pi.size(); ++i) EXPECT_GT(pi[i], pi[i - 1]);
  // Large-detuning branch: splitting grows roughly in proportion.
  EXPECT_NEAR(pi[3] / pi[2], 2.0, 0.4);
}

TEST(Spectrum, LinewidthWithoutHyperfineNearSumOfWidths) {
  SampleParams p;
  p.hyperfine_shifts = {0.0};
  const SpectrumModel m(p, dist(), BroadeningParams{}, SpectralGrid{15.0, 0.1});
  const auto lw = extract_linewidth(m.resonant(0.0));
  EXPECT_NEAR(lw.gamma_g, 1.7 + 1.0, 0.2 * 2.7);
}

TEST(Spectrum, ExternalFieldActsAsDetuningShift) {
  const SampleParams p;
  EXPECT_DOUBLE_EQ(equivalent_detuning(1000.0, 200.0, p), 200.0 - 0.68);
  const auto r = external_field_response(model(), 1e5, 200.0);
  EXPECT_NEAR(r.fluorescence_delta, model().fluorescence(132.0) - model().fluorescence(200.0), 1e-12);
}

TEST(Spectrum, RejectsInvalidParameters) {
  EXPECT_THROW(model().with_excited(-1.0, 0.5), DomainError);
  SampleParams p;
  p.hyperfine_shifts = {0.0, 2.16};
  EXPECT_THROW(SpectrumModel(p, dist(), BroadeningParams{}), DomainError);
  BroadeningParams b;
  b.kappa_ih_res = b.kappa_h_res = 0.0;
  EXPECT_THROW(SpectrumModel(SampleParams{}, dist(), b), DomainError);
  FieldDistribution zero;
  EXPECT_THROW(SpectrumModel(SampleParams{}, zero, BroadeningParams{}), DomainError);
}

TEST(Spectrum, TemperaturePresets) {
  const auto& t = temperature_preset("5K");
  EXPECT_EQ(t.broadening.kappa_h_res, 2.0);
  EXPECT_EQ(t.broadening.kappa_ih_res, 4.0);
  EXPECT_EQ(t.broadening.kappa_h_offres, 20.0);
  EXPECT_EQ(t.broadening.kappa_ih_offres, 27.0);
  EXPECT_EQ(t.epsilon_c, 1e4);
  EXPECT_EQ(temperature_presets().size(), 4u);
  EXPECT_THROW(temperature_preset("300K"), DomainError);
}

TEST(OperatingPoint, SlopeApproachesAsymptote) {
  const auto op = effective_susceptibility(model(), 700.0, 25.0);
  EXPECT_GT(op.detuning_ghz, 0.0);
  EXPECT_GE(op.slope, 0.9 * op.asymptotic_slope);
  EXPECT_DOUBLE_EQ(op.chi_eff, op.slope * 0.68 * 1e6);
  EXPECT_GT(op.chi_eff_ratio, 0.0);
  EXPECT_LT(op.chi_eff_ratio, 1.0);
}
