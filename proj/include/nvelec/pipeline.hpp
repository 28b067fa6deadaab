#pragma once

#include <filesystem>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "nvelec/config.hpp"
#include "nvelec/field_distribution.hpp"
#include "nvelec/fit.hpp"
#include "nvelec/io.hpp"
#include "nvelec/sensitivity.hpp"
#include "nvelec/spectrum.hpp"
#include "nvelec/theory.hpp"

namespace nvelec {

// Everything a pipeline stage needs besides its own arguments.
struct RunContext {
  RunConfig config;
  unsigned threads = 1;
  std::function<void(const std::string&)> progress;  // optional status lines

  void note(const std::string& s) const {
    if (progress) progress(s);
  }
  FileHeader header(const std::string& description = {}) const {
    return {config_digest(config), config.seed(), description};
  }
};

// Output files held in memory until written together with the run record.
class Bundle {
 public:
  explicit Bundle(std::string name) : name_(std::move(name)) {}

  const std::string& name() const { return name_; }
  const std::vector<std::pair<std::string, std::string>>& files() const { return files_; }
  json& summary() { return summary_; }
  const json& summary() const { return summary_; }

  void add_csv(const std::string& file, const CsvTable& t, const FileHeader& h) { files_.emplace_back(file, t.render(h)); }

  void add_text(const std::string& file, std::string body) { files_.emplace_back(file, std::move(body)); }

  void add_json(const std::string& file, json j, const FileHeader& h) {
    j["_header"] = json{{"toolkit_version", toolkit_version}, {"config_digest", h.config_digest}, {"seed", h.seed}};
    files_.emplace_back(file, j.dump(2) + "\n");
  }

  const std::string& content(const std::string& file) const {
    for (const auto& f : files_)
      if (f.first == file) return f.second;
    throw DomainError("bundle has no file '" + file + "'");
  }

  // Writes every file plus run_record.json (config snapshot, seeds, digests).
  // Timing is deliberately not recorded so reruns are byte-identical.
  void write(const std::string& dir, const RunContext& ctx) const {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw DataError("cannot create output directory '" + dir + "': " + ec.message());
    json outputs = json::array();
    for (const auto& [file, body] : files_) {
      write_file((std::filesystem::path(dir) / file).string(), body);
      outputs.push_back({{"path", file}, {"fnv1a64", hex64(fnv1a64(body))}});
    }
    json cfg = config_to_json(ctx.config);
    cfg.erase("output_dir");
    const json record{{"toolkit_version", toolkit_version},
                      {"bundle", name_},
                      {"config", cfg},
                      {"config_digest", config_digest(ctx.config)},
                      {"seeds", ctx.config.seeds},
                      {"outputs", outputs}};
    write_file((std::filesystem::path(dir) / "run_record.json").string(), record.dump(2) + "\n");
  }

 private:
  std::string name_;
  std::vector<std::pair<std::string, std::string>> files_;
  json summary_ = json::object();
};

// Re-raises module errors with the failing stage in the message, keeping the type.
template <class Fn>
auto staged(const std::string& stage, Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const PeaksUnresolved& e) {
    throw PeaksUnresolved(stage + ": " + e.what());
  } catch (const NumericalError& e) {
    throw NumericalError(stage + ": " + e.what());
  } catch (const ConfigError& e) {
    throw ConfigError(stage + ": " + e.what());
  } catch (const DataError& e) {
    throw DataError(stage + ": " + e.what());
  } catch (const DomainError& e) {
    throw DomainError(stage + ": " + e.what());
  }
}

inline CalibrationOptions calibration_options(const RunContext& ctx) {
  CalibrationOptions o;
  o.method = ctx.config.field.method;
  o.samples = ctx.config.field.samples;
  o.threads = ctx.threads;
  return o;
}

// Field distribution for the configured sample: a fixed ratio when given,
// otherwise a Monte Carlo calibration with the run seed.
inline FieldDistribution resolve_distribution(const RunContext& ctx, std::optional<Calibration>* cal = nullptr) {
  const auto& c = ctx.config;
  if (c.field.ratio > 0.0) return FieldDistribution::from_ratio(c.sample.rho_c, c.field.ratio);
  return staged("field-dist", [&] {
    ctx.note("calibrating rho_eff with " + std::to_string(c.field.samples) + " Monte Carlo samples");
    const auto k = calibrate_rho_eff(c.sample.rho_c, c.seed(), calibration_options(ctx));
    if (cal) *cal = k;
    return k.distribution();
  });
}

inline SpectrumModel make_model(const RunContext& ctx, const FieldDistribution& d) {
  QuadratureOptions q;
  q.threads = ctx.threads;
  return SpectrumModel(ctx.config.sample, d, ctx.config.broadening, ctx.config.grid, q);
}

// Analytic density against a Monte Carlo histogram, plus calibration summary.
inline Bundle run_field_dist(const RunContext& ctx, int bins = 200) {
  const auto& c = ctx.config;
  Bundle b("field-dist");
  const auto opt = calibration_options(ctx);
  const auto fields = staged("field-dist", [&] {
    return sample_fields_mc(c.sample.rho_c, 0, c.field.samples, c.seed(), opt.mc, ctx.threads);
  });
  std::vector<double> mags(fields.size());
  for (std::size_t i = 0; i < fields.size(); ++i) mags[i] = fields[i].magnitude();
  const auto cal = staged("field-dist", [&] { return calibrate_from_magnitudes(c.sample.rho_c, mags, opt); });
  const auto dist = c.field.ratio > 0.0 ? FieldDistribution::from_ratio(c.sample.rho_c, c.field.ratio) : cal.distribution();
  const double e0 = dist.most_probable(), top = 8.0 * e0, w = top / bins;
  std::vector<double> h(static_cast<std::size_t>(bins), 0.0);
  for (double m : mags)
    if (m < top) h[static_cast<std::size_t>(m / w)] += 1.0;
  CsvTable t;
  t.columns = {"e_vcm", "pdf_analytic", "pdf_monte_carlo"};
  for (int i = 0; i < bins; ++i) {
    const double e = (i + 0.5) * w;
    t.rows.push_back({e, dist.pdf(e), h[static_cast<std::size_t>(i)] / (static_cast<double>(mags.size()) * w)});
  }
  b.add_csv("field_dist.csv", t, ctx.header("field magnitude density, analytic vs Monte Carlo"));
  auto& s = b.summary();
  s = {{"rho_c_ppm", c.sample.rho_c.value_ppm},
       {"ratio", dist.ratio()},
       {"e0_vcm", e0},
       {"chi_g_perp_e0_mhz", c.sample.chi_g_perp_mhz() * e0},
       {"ks_window", cal.ks_distance},
       {"mc_mode_vcm", cal.mc_mode_vcm},
       {"samples", cal.samples}};
  b.add_json("field_dist.json", s, ctx.header());
  return b;
}

enum class SpectrumKind { resonant, offresonant, total };

inline Bundle run_spectrum(const RunContext& ctx, const std::vector<double>& detunings, SpectrumKind kind) {
  const auto model = make_model(ctx, resolve_distribution(ctx));
  std::vector<DetunedSpectrum> out(detunings.size());
  staged("spectrum", [&] {
    for (std::size_t i = 0; i < detunings.size(); ++i) {
      out[i].detuning_ghz = detunings[i];
      out[i].spectrum = kind == SpectrumKind::resonant      ? model.resonant(detunings[i])
                        : kind == SpectrumKind::offresonant ? model.offresonant(detunings[i])
                                                            : model.total(detunings[i]);
    }
    return 0;
  });
  Bundle b("spectrum");
  b.add_csv("spectrum.csv", spectra_to_table(out), ctx.header("ODMR signal against microwave offset"));
  return b;
}

inline Bundle run_fluorescence(const RunContext& ctx, double lo_ghz, double hi_ghz, int n) {
  if (n < 2 || !(hi_ghz > lo_ghz)) throw DomainError("fluorescence: need n >= 2 and max > min");
  const auto model = make_model(ctx, resolve_distribution(ctx));
  CsvTable t;
  t.columns = {"detuning_ghz", "f_resonant", "f_offresonant", "fluorescence"};
  staged("fluorescence", [&] {
    for (int i = 0; i < n; ++i) {
      const double d = lo_ghz + (hi_ghz - lo_ghz) * i / (n - 1);
      const auto f = model.fractions(d);
      t.rows.push_back({d, f.f_resonant, f.f_offresonant, model.fluorescence(d)});
    }
    return 0;
  });
  Bundle b("fluorescence");
  b.add_csv("fluorescence.csv", t, ctx.header("configuration fractions and relative fluorescence"));
  return b;
}

inline json fit_to_json(const FitResult& f) {
  const auto e = f.stat_err_2sigma();
  return {{"chi_e_perp", f.chi_e_perp},
          {"chi_e_par", f.chi_e_par},
          {"cov", {{f.covariance(0, 0), f.covariance(0, 1)}, {f.covariance(1, 0), f.covariance(1, 1)}}},
          {"chi2_nu", f.chi2_reduced},
          {"n_obs", f.n_obs},
          {"stat_err_2sigma", {e[0], e[1]}},
          {"degenerate", f.degenerate},
          {"condition_number", f.condition_number}};
}

inline Bundle run_fit(const RunContext& ctx, const SplittingData& data, const std::vector<ScanPoint>& scan = {}) {
  const auto model = make_model(ctx, resolve_distribution(ctx));
  FitOptions o;
  o.threads = ctx.threads;
  ctx.note("fitting " + std::to_string(data.size()) + " splittings");
  const auto fit = staged("fit", [&] { return fit_susceptibilities(data, model, o); });
  json j = fit_to_json(fit);
  j["sys_spread"] = nullptr;
  if (!scan.empty()) {
    const auto s = systematic_scan(data, model, fit, scan, o);
    j["sys_spread"] = {s.spread[0], s.spread[1]};
    json pts = json::array();
    for (const auto& p : s.outcomes) {
      json q{{"rho_c_ppm", p.point.rho_c_ppm}, {"kappa_ih_mhz", p.point.kappa_ih}};
      if (p.fit)
        q["fit"] = {{"chi_e_perp", p.fit->chi_e_perp}, {"chi_e_par", p.fit->chi_e_par}};
      else
        q["error"] = p.error;
      pts.push_back(q);
    }
    j["scan"] = pts;
  }
  CsvTable t;
  t.columns = {"detuning_ghz", "pi_perp_mhz", "pi_perp_err_mhz", "pi_perp_model_mhz"};
  for (std::size_t i = 0; i < data.size(); ++i)
    t.rows.push_back({data.detuning_ghz[i], data.pi_perp_mhz[i], data.sigma_mhz[i], fit.model[i]});
  Bundle b("fit");
  b.summary() = j;
  b.add_json("fit.json", j, ctx.header());
  b.add_csv("fit_residuals.csv", t, ctx.header("observed and fitted splittings"));
  return b;
}

inline CsvTable sensitivity_table(const std::vector<SensitivityBreakdown>& rows) {
  CsvTable t;
  t.columns = {"rho_nv_ppm", "eta_pi", "eta_f", "eta_total", "gamma_g_mhz", "gamma_e_mhz", "r", "c_r", "count_rate"};
  for (const auto& r : rows)
    t.rows.push_back({r.rho_nv_ppm, r.eta_pi, r.eta_f, r.eta_total, r.gamma_g, r.gamma_e, r.r_enh, r.c_r, r.count_rate});
  return t;
}

// Single density when `sweep` is empty, otherwise {min, max, n}.
inline Bundle run_sensitivity(const RunContext& ctx, double rho_nv_ppm, const std::vector<double>& sweep = {}) {
  const auto& p = ctx.config.protocol;
  Bundle b("sensitivity");
  if (sweep.empty()) {
    const auto s = staged("sensitivity", [&] { return sensitivity_breakdown(rho_nv_ppm, p); });
    b.add_csv("sensitivity.csv", sensitivity_table({s}), ctx.header("sensitivity budget, V/cm/sqrt(Hz)"));
    b.summary() = {{"rho_nv_ppm", rho_nv_ppm}, {"eta_total", s.eta_total}, {"eta_pi", s.eta_pi}, {"eta_f", s.eta_f}};
  } else {
    if (sweep.size() != 3) throw DomainError("sensitivity sweep needs min,max,n");
    const auto s = staged("sensitivity", [&] {
      return density_sweep(sweep[0], sweep[1], static_cast<int>(sweep[2]), p);
    });
    b.add_csv("sensitivity.csv", sensitivity_table(s.rows), ctx.header("sensitivity budget, V/cm/sqrt(Hz)"));
    b.summary() = {{"slope_low", s.slope_low},
                   {"slope_high", s.slope_high},
                   {"conventional_slope_high", s.conventional_slope_high},
                   {"best_density_ppm", s.best_density}};
  }
  b.add_json("sensitivity.json", b.summary(), ctx.header());
  return b;
}

inline json bias_field_summary(const RunContext& ctx, double rho_nv_ppm) {
  const auto& p = ctx.config.protocol;
  return {{"rho_nv_ppm", rho_nv_ppm},
          {"gamma_e_mhz", optical_linewidth(rho_nv_ppm, p)},
          {"bias_field_vcm", required_bias_field(rho_nv_ppm, p)}};
}

inline Bundle run_theory(const RunContext& ctx) {
  const auto& o = ctx.config.orbitals;
  const auto rows = theory_comparison(o);
  json table = json::array();
  std::string md = "| | chi_perp [Hz/(V/cm)] | chi_par [Hz/(V/cm)] |\n|---|---|---|\n";
  for (const auto& r : rows) {
    table.push_back({{"label", r.label}, {"chi_perp", r.chi_perp}, {"chi_par", r.chi_par}});
    md += "| " + r.label + " | " + format_double(r.chi_perp) + " | " + format_double(r.chi_par) + " |\n";
  }
  const auto dip = excited_dipoles_from_orbitals(o);
  Bundle b("theory");
  b.summary() = {{"table", table},
                 {"transition_dipole_from_orbitals", transition_dipole_from_orbitals(o)},
                 {"d_perp_from_orbitals", dip.d_perp},
                 {"d_par_from_orbitals", dip.d_par},
                 {"spin_spin_coupling_hz", spin_spin_coupling(o)}};
  b.add_json("theory.json", b.summary(), ctx.header());
  const auto h = ctx.header();
  b.add_text("theory.md", "<!-- nvelec " + std::string(toolkit_version) + " config_digest " + h.config_digest +
                                  " seed " + std::to_string(h.seed) + " -->\n" + md);
  return b;
}

// Noise per splitting used for synthetic data, MHz. Gives two-sigma errors of
// about 5% on chi_e_perp over the default detuning grid.
inline constexpr double synthetic_splitting_sigma = 0.1;

inline std::vector<double> detuning_grid(double lo, double hi, double step) {
  std::vector<double> d;
  for (int i = 0; lo + i * step <= hi + 1e-9; ++i) d.push_back(lo + i * step);
  return d;
}

// Splittings with Gaussian noise drawn from stream `stream` of `seed`.
inline SplittingData synthetic_splittings(const std::vector<double>& det, const std::vector<double>& truth,
                                          double sigma, std::uint64_t seed, std::uint64_t stream) {
  SplittingData d;
  auto g = stream_rng(seed, stream);
  std::normal_distribution<double> nd(0.0, sigma);
  for (std::size_t i = 0; i < det.size(); ++i) {
    d.detuning_ghz.push_back(det[i]);
    d.pi_perp_mhz.push_back(truth[i] + nd(g));
    d.sigma_mhz.push_back(sigma);
  }
  return d;
}

// Splitting and linewidth against detuning, elbow analysis and a fit to
// synthetic noisy data.
inline Bundle reproduce_fig2b(const RunContext& ctx) {
  std::optional<Calibration> cal;
  const auto dist = resolve_distribution(ctx, &cal);
  const auto model = make_model(ctx, dist);
  const auto& sp = ctx.config.sample;
  Bundle b("fig2b");
  ctx.note("model splitting curve");
  const auto fine = detuning_grid(0.0, 800.0, 25.0);
  CsvTable curve;
  curve.columns = {"detuning_ghz", "pi_perp_mhz", "gamma_g_mhz", "fluorescence"};
  staged("spectrum", [&] {
    for (double d : fine) {
      const auto s = model.resonant(d);
      const auto lw = extract_linewidth(s);
      curve.rows.push_back({d, model_splitting(s), lw.gamma_g, model.fluorescence(d)});
    }
    return 0;
  });
  b.add_csv("fig2b_model.csv", curve, ctx.header("model splitting, linewidth and fluorescence"));

  const auto det = detuning_grid(0.0, 700.0, 50.0);
  const auto truth = staged("spectrum", [&] { return model_splittings(model, det, ctx.threads); });
  const auto elbow = fit_elbow(det, truth, false);
  const double e0_freq = sp.chi_g_perp_mhz() * dist.most_probable();
  json analytic = nullptr;
  try {
    const auto a = analytic_susceptibilities(elbow.elbow, elbow.slope_high * 1e-3, e0_freq, sp.chi_g_perp);
    analytic = {a.first, a.second};
  } catch (const DomainError&) {
  }
  const auto data = synthetic_splittings(det, truth, synthetic_splitting_sigma, ctx.config.seed(), 1ull << 40);
  CsvTable pts;
  pts.columns = {"detuning_ghz", "pi_perp_mhz", "pi_perp_err_mhz"};
  for (std::size_t i = 0; i < det.size(); ++i) pts.rows.push_back({det[i], data.pi_perp_mhz[i], data.sigma_mhz[i]});
  b.add_csv("fig2b_data.csv", pts, ctx.header("synthetic splittings with Gaussian noise"));
  ctx.note("fitting synthetic splittings");
  FitOptions fo;
  fo.threads = ctx.threads;
  const auto fit = staged("fit", [&] { return fit_susceptibilities(data, model, fo); });
  auto& s = b.summary();
  s = {{"rho_eff_ratio", dist.ratio()},
       {"chi_g_perp_e0_mhz", e0_freq},
       {"elbow_ghz", elbow.elbow},
       {"slope_high", elbow.slope_high * 1e-3},
       {"slope_low", elbow.slope_low * 1e-3},
       {"analytic_chi_e", analytic},
       {"fit", fit_to_json(fit)}};
  if (cal) s["ks_window"] = cal->ks_distance;
  b.add_json("fig2b_summary.json", s, ctx.header());
  return b;
}

inline Bundle reproduce_fig3(const RunContext& ctx) {
  const auto& p = ctx.config.protocol;
  const auto sw = staged("sensitivity", [&] { return density_sweep(1e-6, 1e4, 81, p); });
  CsvTable t = sensitivity_table(sw.rows);
  t.columns.push_back("eta_conventional");
  for (std::size_t i = 0; i < t.rows.size(); ++i) t.rows[i].push_back(sw.conventional[i]);
  bool below = true;
  for (std::size_t i = 0; i < sw.rows.size(); ++i)
    if (sw.rows[i].rho_nv_ppm <= 100.0 && !(sw.rows[i].eta_total < sw.conventional[i])) below = false;
  Bundle b("fig3");
  b.add_csv("fig3_sweep.csv", t, ctx.header("sensitivity against NV density"));
  b.summary() = {{"slope_low", sw.slope_low},
                 {"slope_high", sw.slope_high},
                 {"conventional_slope_high", sw.conventional_slope_high},
                 {"best_density_ppm", sw.best_density},
                 {"resonant_below_conventional_to_100ppm", below}};
  b.add_json("fig3_summary.json", b.summary(), ctx.header());
  return b;
}

inline Bundle reproduce_table_sens(const RunContext& ctx) {
  const auto& p = ctx.config.protocol;
  const std::vector<double> rho{8.0, 0.01};
  std::vector<SensitivityBreakdown> rows;
  for (double r : rho) rows.push_back(staged("sensitivity", [&] { return sensitivity_breakdown(r, p); }));
  Bundle b("table_sens");
  b.add_csv("table_sens.csv", sensitivity_table(rows), ctx.header("sensitivity budget at 8 ppm and 0.01 ppm"));
  json j = json::array();
  for (const auto& r : rows)
    j.push_back({{"rho_nv_ppm", r.rho_nv_ppm},
                 {"eta_f", r.eta_f},
                 {"eta_pi", r.eta_pi},
                 {"eta_total", r.eta_total},
                 {"count_rate", r.count_rate},
                 {"c_r", r.c_r},
                 {"bias_field_vcm", required_bias_field(r.rho_nv_ppm, p)}});
  b.summary() = {{"rows", j},
                 {"microwave_free_2thz", microwave_free_sensitivity(2.0, 0.01, p)}};
  b.add_json("table_sens.json", b.summary(), ctx.header());
  return b;
}

inline Bundle reproduce(const RunContext& ctx, const std::string& which) {
  if (which == "fig2b") return reproduce_fig2b(ctx);
  if (which == "fig3") return reproduce_fig3(ctx);
  if (which == "table_sens") return reproduce_table_sens(ctx);
  throw ConfigError("reproduce: unknown target '" + which + "' (expected fig2b, fig3 or table_sens)");
}

}  // namespace nvelec
