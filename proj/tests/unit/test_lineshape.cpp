#include <cmath>
#include <limits>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <gtest/gtest.h>

#include "nvelec/lineshape.hpp"

using namespace nvelec;

namespace {
const std::vector<double> hf{0.0, 2.16, -2.16};
}

TEST(Lorentzian, UnitAreaAndHalfMaximum) {
  EXPECT_NEAR(lorentzian(0.0, 2.0), 1.0 / pi, 1e-15);
  EXPECT_NEAR(lorentzian(1.0, 2.0), 0.5 / pi, 1e-15);
}

TEST(Lineshape, HyperfineGroupsByMagnitude) {
  const auto g = hyperfine_groups(hf);
  ASSERT_EQ(g.size(), 2u);
  EXPECT_EQ(g[0].first, 0.0);
  EXPECT_EQ(g[0].second, 1.0);
  EXPECT_EQ(g[1].first, 2.16);
  EXPECT_EQ(g[1].second, 2.0);
}

// Reference values: scipy quad of the same convolution, split at its kinks.
TEST(Lineshape, MatchesIndependentQuadrature) {
  PrimitiveLineshape s({1.7, 1.0}, hf);
  const double ref[4][3] = {{0.0, 0.5, 0.3024398825200002},
                            {2.5, 2.0, 0.6921381206518721},
                            {-3.1, 1.2, 0.46000778613837334},
                            {7.0, 4.0, 0.10693678930426644}};
  for (const auto& r : ref) EXPECT_NEAR(s(r[0], r[1]), r[2], 1e-7 * r[2]) << r[0] << " " << r[1];
}

TEST(Lineshape, EvenInOffset) {
  PrimitiveLineshape s({1.7, 1.0}, hf);
  for (double w : {0.3, 1.9, 4.4, 12.0})
    for (double sp : {0.0, 0.8, 3.0}) EXPECT_NEAR(s(w, sp), s(-w, sp), 1e-12 * s(w, sp));
}

TEST(Lineshape, AreaIndependentOfSplitting) {
  using boost::math::quadrature::gauss_kronrod;
  PrimitiveLineshape s({1.7, 1.0}, hf);
  for (double sp : {0.0, 2.0, 6.0}) {
    auto f = [&](double w) { return s(w, sp); };
    double a = 0.0;
    const double cuts[] = {0.0, 2.0, 4.0, 6.0, 8.0, 12.0, 30.0, 100.0};
    for (int i = 0; i + 1 < 8; ++i) a += gauss_kronrod<double, 31>::integrate(f, cuts[i], cuts[i + 1], 15, 1e-11);
    a += gauss_kronrod<double, 31>::integrate(f, 100.0, std::numeric_limits<double>::infinity(), 15, 1e-11);
    EXPECT_NEAR(2.0 * a, s.area(), 1e-5 * s.area()) << sp;
  }
  // Central line weight 1; each satellite carries its half-line on u >= 0.
  EXPECT_NEAR(s.area(), 1.0 + 2.0 * (1.0 + 2.0 * std::atan(2.0 * 2.16 / 1.7) / pi), 1e-14);
}

TEST(Lineshape, InhomogeneousClosedForm) {
  PrimitiveLineshape s({1.7, 0.0}, {0.0});
  EXPECT_EQ(s(1.0, 1.5), 0.0);
  // omega = 2.5, split 1.5: u = 2, h = 0.85.
  const double expect = 0.85 * 2.5 / (pi * 2.0 * (4.0 + 0.85 * 0.85));
  EXPECT_NEAR(s(2.5, 1.5), expect, 1e-15);
}

TEST(Lineshape, VanishingHomogeneousWidthApproachesInhomogeneous) {
  PrimitiveLineshape narrow({1.7, 1e-4}, hf), none({1.7, 0.0}, hf);
  for (double w : {2.0, 3.5, 6.0}) EXPECT_NEAR(narrow(w, 1.0), none(w, 1.0), 2e-3 * none(w, 1.0)) << w;
}

TEST(Lineshape, PureHomogeneousIsLorentzianPair) {
  PrimitiveLineshape s({0.0, 1.0}, {0.0});
  EXPECT_NEAR(s(0.7, 2.0), 0.5 * (lorentzian(0.7 - 2.0, 1.0) + lorentzian(2.7, 1.0)), 1e-15);
  EXPECT_THROW(PrimitiveLineshape({0.0, 0.0}, hf), DomainError);
  EXPECT_THROW(PrimitiveLineshape({0.0, 1.0}, hf).inhomogeneous(1.0, 0.0), DomainError);
}

TEST(Lineshape, TableMatchesDirectEvaluation) {
  PrimitiveLineshape s({1.7, 1.0}, hf);
  const auto t = LineshapeTable::build(s, {0.0, 0.5, 1.0, 3.0}, 0.25, 2.0, 2);
  EXPECT_EQ(t.n_split, 8u);
  EXPECT_DOUBLE_EQ(t.split(0), 0.125);
  for (std::size_t i = 0; i < t.omega.size(); ++i)
    for (std::size_t k = 0; k < t.n_split; ++k) EXPECT_EQ(t.row(i)[k], s(t.omega[i], t.split(k)));
  EXPECT_THROW(LineshapeTable::build(s, {0.0}, 0.0, 1.0), DomainError);
}
