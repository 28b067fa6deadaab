#include <cmath>

#include <gtest/gtest.h>

#include "nvelec/theory.hpp"

using namespace nvelec;

// Reference values computed with CODATA constants in a separate script.
TEST(Theory, DipoleConversion) {
  EXPECT_NEAR(dipole_to_susceptibility(0.67), 1.6200527921968952, 1e-12);
  EXPECT_NEAR(dipole_to_susceptibility(0.26), 0.6286772029420786, 1e-12);
  EXPECT_NEAR(dipole_to_susceptibility(2.0) / dipole_to_susceptibility(1.0), 2.0, 1e-15);
}

TEST(Theory, OrbitalReductions) {
  OrbitalInputs in;
  const auto d = excited_dipoles_from_orbitals(in);
  EXPECT_DOUBLE_EQ(d.d_perp, 0.67);
  EXPECT_EQ(d.d_par, 0.0);
  in.z_carbon = 1.0;
  in.z_nitrogen = -0.5;
  EXPECT_NEAR(excited_dipoles_from_orbitals(in).d_par, 0.49 / 3.49 * 1.5, 1e-15);
  EXPECT_NEAR(transition_dipole_from_orbitals(OrbitalInputs{}), 0.8784918047442819, 1e-13);
}

TEST(Theory, SpinSpinCoupling) {
  EXPECT_NEAR(spin_spin_coupling(OrbitalInputs{}), 4083823717.9996247, 1e-3);
  EXPECT_NEAR(ground_state_spin_spin(OrbitalInputs{}), 37.82910391410179, 1e-10);
}

TEST(Theory, InverseCubeOfOrbitalExtent) {
  OrbitalInputs a, b;
  b.x1 = 2.0 * a.x1;
  EXPECT_NEAR(ground_state_spin_spin(a) / ground_state_spin_spin(b), 8.0, 1e-12);
  EXPECT_NEAR(ground_state_spin_spin(b), 4.728637989262724, 1e-11);
}

TEST(Theory, LinearInTransitionDipole) {
  const OrbitalInputs in;
  EXPECT_NEAR(ground_state_spin_spin(in, 0.44), 0.5 * ground_state_spin_spin(in), 1e-12);
  EXPECT_EQ(ground_state_spin_spin(in, 0.0), 0.0);
  EXPECT_THROW(ground_state_spin_spin(in, -1.0), DomainError);
}

TEST(Theory, ComparisonTable) {
  const auto rows = theory_comparison(OrbitalInputs{});
  ASSERT_EQ(rows.size(), 4u);
  EXPECT_NEAR(rows[1].chi_perp, 1.6200527921968952e6, 1e-5);
  EXPECT_NEAR(rows[3].chi_perp, 37.82910391410179, 1e-10);
  EXPECT_EQ(rows[3].chi_par, 0.0);
}

TEST(Theory, Validation) {
  OrbitalInputs in;
  in.lambda_mix = 1.5;
  EXPECT_THROW(in.validate(), DomainError);
  OrbitalInputs z;
  z.nu0_ev = 0.0;
  EXPECT_THROW(ground_state_spin_spin(z), DomainError);
}
