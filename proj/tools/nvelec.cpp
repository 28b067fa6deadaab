// Command-line front end for the nvelec toolkit.
#include <charconv>
#include <chrono>
#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "nvelec/log.hpp"
#include "nvelec/pipeline.hpp"

namespace {

enum Exit { ok = 0, config_error = 2, data_error = 3, numerical_error = 4 };

struct Globals {
  std::string config;
  std::uint64_t seed = 0;
  bool seed_set = false;
  std::string out_dir;
  unsigned threads = 0;
  bool quiet = false;
};

nvelec::RunContext make_context(const Globals& g) {
  nvelec::RunContext ctx;
  if (!g.config.empty()) ctx.config = nvelec::load_config(g.config);
  if (g.seed_set) ctx.config.seeds = {g.seed};
  if (!g.out_dir.empty()) ctx.config.output_dir = g.out_dir;
  ctx.threads = nvelec::resolve_threads(g.threads);
  if (!g.quiet) ctx.progress = [](const std::string& s) { std::cerr << "nvelec: " << s << "\n"; };
  if (!g.quiet) {
    nvelec::set_warning_handler([](const std::string& s) { std::cerr << "nvelec: warning: " << s << "\n"; });
    for (const auto& w : ctx.config.sample.warnings()) nvelec::warn(w);
  }
  return ctx;
}

void emit(const nvelec::Bundle& b, const nvelec::RunContext& ctx) {
  b.write(ctx.config.output_dir, ctx);
  std::cout << b.summary().dump(2) << "\n";
  ctx.note("wrote " + std::to_string(b.files().size() + 1) + " files to " + ctx.config.output_dir);
}

std::vector<double> parse_list(const std::string& s) {
  std::vector<double> v;
  std::size_t start = 0;
  while (start <= s.size()) {
    const auto p = s.find(',', start);
    const auto tok = nvelec::trim(std::string_view(s).substr(start, p == std::string::npos ? std::string::npos : p - start));
    double x = 0.0;
    const auto r = std::from_chars(tok.data(), tok.data() + tok.size(), x);
    if (tok.empty() || r.ec != std::errc() || r.ptr != tok.data() + tok.size())
      throw nvelec::ConfigError("bad number '" + tok + "' in list '" + s + "'");
    v.push_back(x);
    if (p == std::string::npos) break;
    start = p + 1;
  }
  return v;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Resonant ODMR electrometry toolkit for NV ensembles"};
  app.set_version_flag("--version", std::string(nvelec::toolkit_version));
  app.require_subcommand(1);
  Globals g;
  app.add_option("--config", g.config, "JSON configuration file")->check(CLI::ExistingFile);
  app.add_option_function<std::uint64_t>("--seed", [&](std::uint64_t s) { g.seed = s, g.seed_set = true; },
                                         "Override the run seed");
  app.add_option("--out-dir", g.out_dir, "Output directory");
  app.add_option("--threads", g.threads, "Worker threads (0 = all cores)");
  app.add_flag("--quiet", g.quiet, "Suppress progress and warnings on stderr");

  auto* fd = app.add_subcommand("field-dist", "Calibrate rho_eff and compare analytic and Monte Carlo P(E)");
  int bins = 200;
  fd->add_option("--bins", bins, "Histogram bins")->check(CLI::PositiveNumber);

  auto* sp = app.add_subcommand("spectrum", "Synthesise ODMR spectra");
  std::string detunings = "156", kind = "resonant";
  sp->add_option("--detuning-ghz", detunings, "Comma-separated optical detunings, GHz");
  sp->add_option("--kind", kind, "resonant, offresonant or total")->check(CLI::IsMember({"resonant", "offresonant", "total"}));

  auto* fl = app.add_subcommand("fluorescence", "Configuration fractions and fluorescence against detuning");
  std::string range = "-200,800,51";
  fl->add_option("--range", range, "min,max,n in GHz");

  auto* fit = app.add_subcommand("fit", "Fit excited-state susceptibilities to splitting data");
  std::string data_path, scan_path;
  fit->add_option("--data", data_path, "CSV: detuning_ghz,pi_perp_mhz,pi_perp_err_mhz")->required();
  fit->add_option("--scan", scan_path, "CSV: rho_c_ppm,kappa_ih_mhz systematic grid");

  auto* sens = app.add_subcommand("sensitivity", "Sensitivity budget at one density or over a sweep");
  double rho_nv = 8.0, kappa0e = 0.0, volume = 0.0;
  std::string sweep;
  sens->add_option("--rho-nv-ppm", rho_nv, "NV density, ppm");
  sens->add_option("--sweep", sweep, "min,max,n log-spaced densities in ppm");
  sens->add_option("--kappa0e-ghz", kappa0e, "Intrinsic optical linewidth, GHz (10 or 100)");
  sens->add_option("--volume-mm3", volume, "Illumination volume, mm^3");

  auto* bias = app.add_subcommand("bias-field", "Bias field needed to isolate one NV orientation");
  double bias_rho = 8.0;
  bias->add_option("--rho-nv-ppm", bias_rho, "NV density, ppm");
  bias->add_option("--kappa0e-ghz", kappa0e, "Intrinsic optical linewidth, GHz");

  auto* th = app.add_subcommand("theory", "Molecular-orbital susceptibility estimates");
  std::string orbitals;
  th->add_option("--orbitals", orbitals, "JSON file with an 'orbitals' section")->check(CLI::ExistingFile);

  auto* rep = app.add_subcommand("reproduce", "Run a full pipeline and write a plot-ready bundle");
  std::string which;
  rep->add_option("which", which, "fig2b, fig3 or table_sens")->required()->check(CLI::IsMember({"fig2b", "fig3", "table_sens"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? ok : config_error;
  }

  const auto t0 = std::chrono::steady_clock::now();
  try {
    auto ctx = make_context(g);
    if (kappa0e > 0.0) ctx.config.protocol.kappa0_e = kappa0e * 1e3;
    if (volume > 0.0) ctx.config.protocol.illumination_volume = volume;
    if (*fd) {
      emit(nvelec::run_field_dist(ctx, bins), ctx);
    } else if (*sp) {
      const auto k = kind == "resonant"      ? nvelec::SpectrumKind::resonant
                     : kind == "offresonant" ? nvelec::SpectrumKind::offresonant
                                             : nvelec::SpectrumKind::total;
      emit(nvelec::run_spectrum(ctx, parse_list(detunings), k), ctx);
    } else if (*fl) {
      const auto r = parse_list(range);
      if (r.size() != 3) throw nvelec::ConfigError("--range needs min,max,n");
      emit(nvelec::run_fluorescence(ctx, r[0], r[1], static_cast<int>(r[2])), ctx);
    } else if (*fit) {
      const auto data = nvelec::splitting_data_from_table(nvelec::read_csv(data_path));
      std::vector<nvelec::ScanPoint> grid;
      if (!scan_path.empty()) grid = nvelec::scan_grid_from_table(nvelec::read_csv(scan_path));
      emit(nvelec::run_fit(ctx, data, grid), ctx);
    } else if (*sens) {
      std::vector<double> s;
      if (!sweep.empty()) {
        s = parse_list(sweep);
        if (s.size() != 3) throw nvelec::ConfigError("--sweep needs min,max,n");
      }
      emit(nvelec::run_sensitivity(ctx, rho_nv, s), ctx);
    } else if (*bias) {
      std::cout << nvelec::bias_field_summary(ctx, bias_rho).dump(2) << "\n";
    } else if (*th) {
      if (!orbitals.empty()) ctx.config.orbitals = nvelec::load_config(orbitals).orbitals;
      emit(nvelec::run_theory(ctx), ctx);
    } else if (*rep) {
      emit(nvelec::reproduce(ctx, which), ctx);
    }
  } catch (const nvelec::ConfigError& e) {
    std::cerr << "nvelec: config error: " << e.what() << "\n";
    return config_error;
  } catch (const nvelec::DomainError& e) {
    std::cerr << "nvelec: invalid argument: " << e.what() << "\n";
    return config_error;
  } catch (const nvelec::DataError& e) {
    std::cerr << "nvelec: data error: " << e.what() << "\n";
    return data_error;
  } catch (const nvelec::NumericalError& e) {
    std::cerr << "nvelec: numerical failure: " << e.what() << "\n";
    return numerical_error;
  }
  if (!g.quiet)
    std::cerr << "nvelec: done in "
              << std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count() << " s\n";
  return ok;
}
