// Library walk-through: model spectra for the default sample, their peak
// splittings, and the sensitivity budget of the reference sample.
#include <cstdio>

#include "nvelec/fit.hpp"
#include "nvelec/sensitivity.hpp"
#include "nvelec/spectrum.hpp"

int main() {
  using namespace nvelec;
  SampleParams p;
  // rho_eff / rho_c from a 1e5-sample calibration; `calibrate_rho_eff` recomputes it.
  const auto dist = FieldDistribution::from_ratio(p.rho_c, 2.03);
  SpectrumModel model(p, dist, BroadeningParams{});

  std::printf("E0 chi_g_perp = %.3f MHz\n", p.chi_g_perp_mhz() * dist.most_probable());
  std::printf("%10s %12s %12s %12s\n", "det [GHz]", "Pi [MHz]", "Gamma [MHz]", "fluor.");
  for (double d : {0.0, 100.0, 200.0, 400.0, 700.0}) {
    const auto s = model.resonant(d);
    const auto lw = extract_linewidth(s);
    std::printf("%10.0f %12.4f %12.4f %12.4f\n", d, model_splitting(s), lw.gamma_g, model.fluorescence(d));
  }

  ProtocolParams q;
  for (double rho : {8.0, 0.01}) {
    const auto b = sensitivity_breakdown(rho, q);
    std::printf("rho_NV = %5.2f ppm: eta_F = %.4f  eta_Pi = %.4f  eta = %.4f V/cm/sqrt(Hz)\n", rho, b.eta_f, b.eta_pi,
                b.eta_total);
  }
  return 0;
}
