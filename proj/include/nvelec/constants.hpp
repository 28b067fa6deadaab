#pragma once

#include <numbers>

#include "nvelec/errors.hpp"

namespace nvelec {

inline constexpr double pi = std::numbers::pi;

// SI values unless noted.
struct PhysicalConstants {
  double vacuum_permittivity = 8.8541878128e-12;   // F/m
  double relative_permittivity_diamond = 5.7;
  double elementary_charge = 1.602176634e-19;      // C
  double planck_h = 6.62607015e-34;                // J s
  double bohr_magneton = 9.2740100783e-24;         // J/T
  double vacuum_permeability = 1.25663706212e-6;   // T m/A
  double electron_g_factor = 2.0;
  double diamond_atom_density = 1.76e23;           // cm^-3

  void validate() const {
    const double v[] = {vacuum_permittivity, relative_permittivity_diamond, elementary_charge, planck_h,
                        bohr_magneton,       vacuum_permeability,           electron_g_factor, diamond_atom_density};
    for (double x : v)
      if (!(x > 0.0)) throw DomainError("physical constants must be strictly positive");
  }
};

inline const PhysicalConstants& default_constants() {
  static const PhysicalConstants c{};
  return c;
}

// Defect or charge density quoted in ppm of lattice sites.
struct ChargeDensity {
  double value_ppm = 0.0;

  static ChargeDensity ppm(double v) {
    if (!(v >= 0.0)) throw DomainError("charge density must be non-negative");
    return ChargeDensity{v};
  }

  // cm^-3
  double volumetric(const PhysicalConstants& c = default_constants()) const {
    return value_ppm * 1e-6 * c.diamond_atom_density;
  }

  ChargeDensity scaled(double k) const { return ppm(value_ppm * k); }
};

}  // namespace nvelec
