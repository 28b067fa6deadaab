#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "nvelec/constants.hpp"

namespace nvelec {

// Physical parameters of one sample and measurement. Susceptibilities: ground
// state in Hz/(V/cm), excited state in MHz/(V/cm). Positive detuning is below the
// zero-phonon line everywhere in the library.
struct SampleParams {
  ChargeDensity rho_c{15.0};
  double chi_g_perp = 17.0;
  double chi_g_par = 0.35;
  double chi_e_perp = 1.43;
  double chi_e_par = 0.68;
  double delta_zfs_ghz = 2.87;
  std::vector<double> hyperfine_shifts{0.0, 2.16, -2.16};  // MHz
  double gamma_e_single = 30.0;                          // MHz
  double epsilon_c = 1.0;
  double epsilon_r_enh = 1e5;

  // Transverse splitting per unit field, MHz/(V/cm).
  double chi_g_perp_mhz() const { return chi_g_perp * 1e-6; }

  void validate() const {
    auto pos = [](double v, const char* name) {
      if (!(v > 0.0) || !std::isfinite(v)) throw DomainError(std::string(name) + " must be positive");
    };
    if (!(rho_c.value_ppm > 0.0)) throw DomainError("rho_c must be positive");
    pos(chi_g_perp, "chi_g_perp");
    pos(chi_g_par, "chi_g_par");
    pos(chi_e_perp, "chi_e_perp");
    pos(chi_e_par, "chi_e_par");
    pos(delta_zfs_ghz, "delta_zfs");
    pos(gamma_e_single, "gamma_e_single");
    pos(epsilon_r_enh, "epsilon_r_enh");
    if (!(epsilon_c >= 0.0)) throw DomainError("epsilon_c must be non-negative");
    if (!(gamma_e_single < delta_zfs_ghz * 1e3)) throw DomainError("gamma_e_single must be below delta_zfs");
    std::vector<double> a = hyperfine_shifts, b = hyperfine_shifts;
    for (double& x : b) x = -x;
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    if (a.empty()) throw DomainError("hyperfine_shifts must not be empty");
    for (std::size_t i = 0; i < a.size(); ++i)
      if (std::abs(a[i] - b[i]) > 1e-12 * (1.0 + std::abs(a[i])))
        throw DomainError("hyperfine_shifts must be symmetric about 0");
  }

  // Non-fatal conditions worth reporting.
  std::vector<std::string> warnings() const {
    std::vector<std::string> w;
    if (rho_c.value_ppm < 0.01)
      w.emplace_back("rho_c below 10 ppb: spin-orbit fine structure is no longer negligible");
    return w;
  }
};

// Lorentzian FWHMs in MHz of the ground-state lineshape.
struct LineBroadening {
  double kappa_ih = 1.7;
  double kappa_h = 1.0;
};

struct BroadeningParams {
  double kappa_ih_res = 1.7;
  double kappa_h_res = 1.0;
  double kappa_ih_offres = 1.7;
  double kappa_h_offres = 1.0;

  LineBroadening resonant() const { return {kappa_ih_res, kappa_h_res}; }
  LineBroadening offresonant() const { return {kappa_ih_offres, kappa_h_offres}; }

  void validate() const {
    const double v[] = {kappa_ih_res, kappa_h_res, kappa_ih_offres, kappa_h_offres};
    for (double x : v)
      if (!(x >= 0.0) || !std::isfinite(x)) throw DomainError("broadening widths must be non-negative");
    if (kappa_ih_res == 0.0 && kappa_h_res == 0.0) throw DomainError("resonant broadening pair is all zero");
    if (kappa_ih_offres == 0.0 && kappa_h_offres == 0.0) throw DomainError("off-resonant broadening pair is all zero");
  }
};

// Temperature presets: broadening plus the resonant/off-resonant contrast factor.
struct TemperaturePreset {
  BroadeningParams broadening;
  double epsilon_c;
};

inline const std::map<std::string, TemperaturePreset>& temperature_presets() {
  // Columns as tabulated: kappa_h_res, kappa_ih_res, kappa_h_offres, kappa_ih_offres.
  auto make = [](double h_r, double ih_r, double h_or, double ih_or, double eps_c) {
    return TemperaturePreset{BroadeningParams{ih_r, h_r, ih_or, h_or}, eps_c};
  };
  static const std::map<std::string, TemperaturePreset> p{
      {"5K", make(2.0, 4.0, 20.0, 27.0, 1e4)},
      {"40K", make(2.0, 4.0, 16.0, 16.0, 4e3)},
      {"55K", make(2.0, 4.0, 12.0, 15.0, 1.7e3)},
      {"100K", make(2.0, 4.0, 9.0, 8.0, 1.7e3)},
  };
  return p;
}

inline const TemperaturePreset& temperature_preset(const std::string& name) {
  const auto& p = temperature_presets();
  auto it = p.find(name);
  if (it == p.end()) throw DomainError("unknown preset '" + name + "'");
  return it->second;
}

}  // namespace nvelec
