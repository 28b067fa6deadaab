#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "nvelec/constants.hpp"
#include "nvelec/errors.hpp"

namespace nvelec {

// Molecular-orbital inputs. Lengths in Angstrom, dipoles in e*Angstrom.
struct OrbitalInputs {
  double lambda_mix = 0.7;
  double x1 = 1.34;               // <sigma_1|x|sigma_1>, consistent with |d_perp| = 0.67
  double z_carbon = 0.0;          // <sigma_1|z|sigma_1>
  double z_nitrogen = 0.0;        // <sigma_N|z|sigma_N>
  double nu0_ev = 1.9;            // ground to excited splitting
  double d_perp = 0.67;
  double d_par = 0.26;
  double d_perp_prime = 0.88;

  void validate() const {
    if (!(lambda_mix > 0.0 && lambda_mix <= 1.0)) throw DomainError("lambda_mix must lie in (0, 1]");
    if (!(nu0_ev > 0.0)) throw DomainError("nu0 must be positive");
    if (!(x1 > 0.0 && d_perp > 0.0 && d_par > 0.0 && d_perp_prime > 0.0))
      throw DomainError("orbital extent and dipole magnitudes must be positive");
  }
};

// Linear Stark coefficient of a permanent dipole, MHz/(V/cm).
inline double dipole_to_susceptibility(double d_e_angstrom, const PhysicalConstants& c = default_constants()) {
  return c.elementary_charge * d_e_angstrom * 1e-10 * 100.0 / c.planck_h * 1e-6;
}

struct ExcitedDipoles {
  double d_perp = 0.0;  // e*Angstrom
  double d_par = 0.0;
};

// Non-overlapping atomic orbital reductions of the excited-state dipoles.
inline ExcitedDipoles excited_dipoles_from_orbitals(const OrbitalInputs& in) {
  const double l2 = in.lambda_mix * in.lambda_mix;
  return {0.5 * in.x1, l2 / (3.0 + l2) * (in.z_carbon - in.z_nitrogen)};
}

// Ground-to-excited transverse transition dipole |<e_x|x|a_1>|, e*Angstrom.
inline double transition_dipole_from_orbitals(const OrbitalInputs& in) {
  return 3.0 * in.x1 / std::sqrt(6.0 * (3.0 + in.lambda_mix * in.lambda_mix));
}

// Field-induced spin-spin coupling D_E in Hz.
inline double spin_spin_coupling(const OrbitalInputs& in, const PhysicalConstants& c = default_constants()) {
  const double x = in.x1 * 1e-10;
  return c.vacuum_permeability * c.bohr_magneton * c.bohr_magneton * c.electron_g_factor * c.electron_g_factor /
         (8.0 * pi * c.planck_h * std::sqrt(2.0 * (3.0 + in.lambda_mix * in.lambda_mix))) / (x * x * x);
}

// Transverse ground-state susceptibility from mixing with the excited state
// followed by the dipolar spin-spin interaction, Hz/(V/cm). The longitudinal
// transition dipole vanishes by symmetry, so there is no parallel counterpart.
inline double ground_state_spin_spin(const OrbitalInputs& in, double d_perp_prime,
                                     const PhysicalConstants& c = default_constants()) {
  in.validate();
  if (!(d_perp_prime >= 0.0)) throw DomainError("transition dipole must be non-negative");
  const double mixing_per_vcm = d_perp_prime * 1e-10 * 100.0 / in.nu0_ev;  // (eV per V/cm) / eV
  return 2.0 * mixing_per_vcm * spin_spin_coupling(in, c);
}

inline double ground_state_spin_spin(const OrbitalInputs& in, const PhysicalConstants& c = default_constants()) {
  return ground_state_spin_spin(in, in.d_perp_prime, c);
}

struct TheoryRow {
  std::string label;
  double chi_perp = 0.0;  // Hz/(V/cm)
  double chi_par = 0.0;
};

// Measured values next to the estimates, all in Hz/(V/cm).
inline std::vector<TheoryRow> theory_comparison(const OrbitalInputs& in, const PhysicalConstants& c = default_constants()) {
  in.validate();
  return {
      {"excited, measured", 1.4e6, 0.7e6},
      {"excited, electronic", dipole_to_susceptibility(in.d_perp, c) * 1e6, dipole_to_susceptibility(in.d_par, c) * 1e6},
      {"ground, measured", 17.0, 0.35},
      {"ground, spin-spin", ground_state_spin_spin(in, c), 0.0},
  };
}

}  // namespace nvelec
