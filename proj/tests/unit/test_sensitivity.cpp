#include <cmath>

#include <gtest/gtest.h>

#include "nvelec/sensitivity.hpp"

using namespace nvelec;

// Reference values: a separate Python evaluation of the same budget.
TEST(Budget, ReferenceSample) {
  const auto b = sensitivity_breakdown(8.0, ProtocolParams{});
  EXPECT_NEAR(b.eta_f, 0.021154041283709023, 1e-12);
  EXPECT_NEAR(b.eta_pi, 0.07712739552564245, 1e-12);
  EXPECT_NEAR(b.eta_total, 0.016600857313668744, 1e-12);
  EXPECT_NEAR(b.count_rate, 2.4e15, 1.0);
  EXPECT_NEAR(b.c_r, 0.5429864253393665, 1e-13);
  EXPECT_DOUBLE_EQ(b.gamma_g, 3.9);
  EXPECT_DOUBLE_EQ(b.gamma_e, 1.01e6);
}

TEST(Budget, OptimalDensity) {
  const auto b = sensitivity_breakdown(0.01, ProtocolParams{});
  EXPECT_NEAR(b.eta_f, 0.0013916363777040832, 1e-13);
  EXPECT_NEAR(b.eta_pi, 0.014775895033149342, 1e-12);
  EXPECT_NEAR(b.eta_total, 0.0012718498896785058, 1e-13);
  EXPECT_NEAR(b.count_rate, 77525965493317.53, 1e2);
}

TEST(Budget, HarmonicCombination) {
  for (double rho : {1e-4, 0.3, 8.0, 500.0}) {
    const auto b = sensitivity_breakdown(rho, ProtocolParams{});
    EXPECT_DOUBLE_EQ(1.0 / b.eta_total, 1.0 / b.eta_pi + 1.0 / b.eta_f);
  }
}

TEST(Budget, ShotNoiseScalingWithVolume) {
  ProtocolParams p;
  const double a = sensitivity_breakdown(8.0, p).eta_total;
  p.illumination_volume *= 2.0;
  EXPECT_NEAR(sensitivity_breakdown(8.0, p).eta_total, a / std::sqrt(2.0), 1e-15);
}

TEST(Budget, ExplicitReferenceRate) {
  ProtocolParams p;
  p.reference_count_rate = 1e12;
  EXPECT_DOUBLE_EQ(count_rate_and_contrast(8.0, p).r0, 1e12);
  ProtocolParams d;
  const double r = d.kappa_ref / (d.kappa0_e + d.kappaE_e);
  EXPECT_NEAR(d.r0_reference() * (r + 5.0 / 3.0), 2.4e15, 1.0);
}

TEST(Budget, Linewidths) {
  EXPECT_DOUBLE_EQ(linewidth_model(8.0, 0.2, 3.7, 8.0), 3.9);
  EXPECT_NEAR(linewidth_model(64.0, 0.0, 1.0, 8.0), 4.0, 1e-14);
  EXPECT_THROW(linewidth_model(-1.0, 0.2, 3.7, 8.0), DomainError);
}

TEST(Budget, ValidationRejectsUnphysicalInputs) {
  ProtocolParams p;
  p.c0 = 1.2;
  EXPECT_THROW(sensitivity_breakdown(8.0, p), DomainError);
  ProtocolParams q;
  q.kappaE_e = -1.0;
  EXPECT_THROW(q.validate(), DomainError);
  EXPECT_THROW(channel_sensitivity(1.0, 1.0, 1.0, 1.0, 0.0), DomainError);
}

TEST(Conventional, ReferenceSample) {
  EXPECT_NEAR(conventional_sensitivity(8.0, ProtocolParams{}), 0.1396517619630242, 1e-13);
}

TEST(Scaling, LogLogSlopeOfPowerLaw) {
  std::vector<double> x, y;
  for (int i = 1; i < 10; ++i) {
    x.push_back(i);
    y.push_back(3.0 * std::pow(i, -0.75));
  }
  EXPECT_NEAR(loglog_slope(x, y), -0.75, 1e-13);
  EXPECT_THROW(loglog_slope({1.0}, {1.0}), DomainError);
  EXPECT_THROW(loglog_slope({1.0, 2.0}, {1.0, -2.0}), DomainError);
}

TEST(Scaling, DensityExponents) {
  const auto s = density_sweep(1e-6, 1e4, 81, ProtocolParams{});
  EXPECT_EQ(s.rows.size(), 81u);
  EXPECT_NEAR(s.slope_low, -0.5, 0.05);
  EXPECT_NEAR(s.slope_high, 5.0 / 6.0, 0.05);
  EXPECT_NEAR(s.conventional_slope_high, 1.0 / 6.0, 0.05);
  EXPECT_GT(s.best_density, 1e-3);
  EXPECT_LT(s.best_density, 1.0);
  EXPECT_THROW(density_sweep(1.0, 0.5, 10, ProtocolParams{}), DomainError);
}

TEST(BiasField, ClosedForm) {
  // Reference: 0.5 * 1e4 / (0.7 + 0.7/3 + 1.4 * 2 sqrt(2) / 3).
  EXPECT_NEAR(required_bias_field(1e4, 1.4, 0.7), 2219.0012269987233, 1e-9);
  EXPECT_EQ(required_bias_field(0.0, 1.4, 0.7), 0.0);
  EXPECT_NEAR(required_bias_field(8.0, ProtocolParams{}), required_bias_field(1.01e6, 1.4, 0.7), 1e-9);
  EXPECT_THROW(required_bias_field(1.0, 0.0, 0.7), DomainError);
}

// Reference: 40-digit mpmath quadrature of mean(sqrt(1 + d^2 + 2 d cos t) - 1).
TEST(PerpendicularField, EnsembleShiftMatchesHighPrecision) {
  EXPECT_NEAR(perpendicular_suppression(1e-3, 1.0), 2.5000001562500391e-7, 1e-20);
  EXPECT_NEAR(perpendicular_suppression(1e-2, 1.0), 2.5000156253906403e-5, 1e-18);
  EXPECT_NEAR(perpendicular_suppression(0.1, 1.0), 0.0025015664215839803, 1e-15);
}

TEST(PerpendicularField, QuadraticWithNoLinearTerm) {
  std::vector<double> d, s;
  for (int i = 0; i <= 10; ++i) {
    d.push_back(1e-3 * std::pow(10.0, i / 10.0));
    s.push_back(perpendicular_suppression(d.back() * 1e5, 1e5));
  }
  EXPECT_NEAR(loglog_slope(d, s), 2.0, 1e-3);
  EXPECT_EQ(perpendicular_suppression(0.0, 1.0), 0.0);
  EXPECT_NEAR(perpendicular_suppression(-1e-3, 1.0), perpendicular_suppression(1e-3, 1.0), 1e-22);
  EXPECT_THROW(perpendicular_suppression(1.0, 0.0), DomainError);
}

TEST(MicrowaveFree, ThermalLineAtOptimalDensity) {
  EXPECT_NEAR(microwave_free_sensitivity(2.0, 0.01, ProtocolParams{}), 0.1288315289698673, 1e-12);
  EXPECT_THROW(microwave_free_sensitivity(0.0, 0.01, ProtocolParams{}), DomainError);
}
