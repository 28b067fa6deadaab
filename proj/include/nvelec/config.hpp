#pragma once

#include <cstdint>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"

#include "nvelec/errors.hpp"
#include "nvelec/field_distribution.hpp"
#include "nvelec/io.hpp"
#include "nvelec/params.hpp"
#include "nvelec/sensitivity.hpp"
#include "nvelec/spectrum.hpp"
#include "nvelec/theory.hpp"

namespace nvelec {

using json = nlohmann::json;

struct FieldConfig {
  CalibrationMethod method = CalibrationMethod::distribution;
  std::size_t samples = 100000;
  double ratio = 0.0;  // fixed rho_eff / rho_c; 0 calibrates by Monte Carlo
};

struct RunConfig {
  SampleParams sample;
  BroadeningParams broadening;
  std::string preset;  // empty, or a temperature preset name
  ProtocolParams protocol;
  OrbitalInputs orbitals;
  FieldConfig field;
  SpectralGrid grid = susceptibility_grid();
  std::vector<std::uint64_t> seeds{12345};
  std::string output_dir = "out";

  std::uint64_t seed() const { return seeds.front(); }
};

namespace detail {

enum class Bound { any, positive, non_negative, open_unit };

// Reads the keys of one JSON object, naming failures by dotted path, and
// rejects keys it was never asked about.
class Section {
 public:
  Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(label() + ": expected an object");
  }

  bool has(const std::string& key) {
    known_.insert(key);
    return j_.contains(key);
  }

  void number(const std::string& key, double& out, Bound b = Bound::positive) {
    if (!has(key)) return;
    const auto& v = j_.at(key);
    if (!v.is_number()) throw ConfigError(name(key) + ": expected a number");
    const double x = v.get<double>();
    const bool ok = b == Bound::any ? std::isfinite(x)
                    : b == Bound::positive ? x > 0.0 && std::isfinite(x)
                    : b == Bound::non_negative ? x >= 0.0 && std::isfinite(x)
                                               : x > 0.0 && x < 1.0;
    if (!ok) {
      const char* what = b == Bound::any ? "be finite"
                         : b == Bound::positive ? "be positive"
                         : b == Bound::non_negative ? "be non-negative"
                                                    : "lie in (0, 1)";
      throw ConfigError(name(key) + ": must " + what);
    }
    out = x;
  }

  void string(const std::string& key, std::string& out) {
    if (!has(key)) return;
    if (!j_.at(key).is_string()) throw ConfigError(name(key) + ": expected a string");
    out = j_.at(key).get<std::string>();
  }

  const json& object(const std::string& key) {
    known_.insert(key);
    return j_.at(key);
  }

  const json& raw(const std::string& key) {
    known_.insert(key);
    return j_.at(key);
  }

  std::string name(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (!known_.count(it.key())) throw ConfigError(name(it.key()) + ": unknown key");
  }

 private:
  std::string label() const { return path_.empty() ? "config" : path_; }
  const json& j_;
  std::string path_;
  std::set<std::string> known_;
};

inline std::string line_column(const std::string& text, std::size_t byte) {
  std::size_t line = 1, col = 1;
  for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return "line " + std::to_string(line) + ", column " + std::to_string(col);
}

}  // namespace detail

// Parses a JSON configuration. Whitespace-only text gives all defaults.
inline RunConfig parse_config(const std::string& text, const std::string& source = "<config>") {
  RunConfig c;
  if (text.find_first_not_of(" \t\r\n") == std::string::npos) return c;
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    // e.byte is one past the offending character
    throw ConfigError(source + ": parse error at " + detail::line_column(text, e.byte > 0 ? e.byte - 1 : 0) + ": " +
                      e.what());
  }
  using detail::Bound;
  detail::Section top(root, "");
  bool explicit_eps_c = false, explicit_grid = false;
  if (top.has("sample")) {
    detail::Section s(top.object("sample"), "sample");
    double rho = c.sample.rho_c.value_ppm;
    s.number("rho_c", rho);
    c.sample.rho_c = ChargeDensity::ppm(rho);
    s.number("chi_g_perp", c.sample.chi_g_perp);
    s.number("chi_g_par", c.sample.chi_g_par);
    s.number("chi_e_perp", c.sample.chi_e_perp);
    s.number("chi_e_par", c.sample.chi_e_par);
    s.number("delta_zfs", c.sample.delta_zfs_ghz);
    s.number("gamma_e_single", c.sample.gamma_e_single);
    explicit_eps_c = s.has("epsilon_c");
    s.number("epsilon_c", c.sample.epsilon_c, Bound::non_negative);
    s.number("epsilon_r_enh", c.sample.epsilon_r_enh);
    if (s.has("hyperfine_shifts")) {
      const auto& h = s.raw("hyperfine_shifts");
      if (!h.is_array() || h.empty()) throw ConfigError("sample.hyperfine_shifts: expected a non-empty array");
      c.sample.hyperfine_shifts.clear();
      for (const auto& v : h) {
        if (!v.is_number()) throw ConfigError("sample.hyperfine_shifts: expected numbers");
        c.sample.hyperfine_shifts.push_back(v.get<double>());
      }
    }
    s.finish();
  }
  if (top.has("broadening")) {
    detail::Section b(top.object("broadening"), "broadening");
    b.string("preset", c.preset);
    if (!c.preset.empty()) {
      const auto it = temperature_presets().find(c.preset);
      if (it == temperature_presets().end()) throw ConfigError("broadening.preset: unknown preset '" + c.preset + "'");
      c.broadening = it->second.broadening;
      if (!explicit_eps_c) c.sample.epsilon_c = it->second.epsilon_c;
    }
    b.number("kappa_ih_res", c.broadening.kappa_ih_res, Bound::non_negative);
    b.number("kappa_h_res", c.broadening.kappa_h_res, Bound::non_negative);
    b.number("kappa_ih_offres", c.broadening.kappa_ih_offres, Bound::non_negative);
    b.number("kappa_h_offres", c.broadening.kappa_h_offres, Bound::non_negative);
    b.finish();
  }
  if (top.has("protocol")) {
    detail::Section p(top.object("protocol"), "protocol");
    auto& q = c.protocol;
    p.number("p_pi", q.p_pi, Bound::open_unit);
    p.number("p_f", q.p_f, Bound::open_unit);
    p.number("c0", q.c0, Bound::open_unit);
    p.number("chi_eff", q.chi_eff);
    p.number("chi_e_par", q.chi_e_par);
    p.number("chi_e_perp", q.chi_e_perp);
    p.number("kappa0_g", q.kappa0_g);
    p.number("kappaE_g", q.kappaE_g, Bound::non_negative);
    p.number("kappa0_e", q.kappa0_e);
    p.number("kappaE_e", q.kappaE_e, Bound::non_negative);
    p.number("kappa_ref", q.kappa_ref);
    p.number("reference_density", q.reference_density);
    p.number("reference_count_rate", q.reference_count_rate, Bound::non_negative);
    p.number("reference_volume", q.reference_volume);
    p.number("illumination_volume", q.illumination_volume);
    p.finish();
  }
  if (top.has("orbitals")) {
    detail::Section o(top.object("orbitals"), "orbitals");
    auto& q = c.orbitals;
    o.number("lambda_mix", q.lambda_mix);
    if (!(q.lambda_mix <= 1.0)) throw ConfigError("orbitals.lambda_mix: must lie in (0, 1]");
    o.number("x1", q.x1);
    o.number("z_carbon", q.z_carbon, Bound::any);
    o.number("z_nitrogen", q.z_nitrogen, Bound::any);
    o.number("nu0_ev", q.nu0_ev);
    o.number("d_perp", q.d_perp);
    o.number("d_par", q.d_par);
    o.number("d_perp_prime", q.d_perp_prime);
    o.finish();
  }
  if (top.has("field")) {
    detail::Section f(top.object("field"), "field");
    std::string m;
    f.string("calibration", m);
    if (m == "distribution" || m.empty())
      c.field.method = CalibrationMethod::distribution;
    else if (m == "mode")
      c.field.method = CalibrationMethod::mode;
    else
      throw ConfigError("field.calibration: expected 'distribution' or 'mode'");
    double n = static_cast<double>(c.field.samples);
    f.number("samples", n);
    if (n != std::floor(n) || n < 1000) throw ConfigError("field.samples: must be an integer >= 1000");
    c.field.samples = static_cast<std::size_t>(n);
    f.number("ratio", c.field.ratio, Bound::non_negative);
    f.finish();
  }
  if (top.has("spectrum")) {
    detail::Section s(top.object("spectrum"), "spectrum");
    explicit_grid = true;
    s.number("half_width", c.grid.half_width);
    s.number("step", c.grid.step);
    s.finish();
  }
  if (!explicit_grid && !c.preset.empty()) c.grid = preset_grid();
  if (top.has("seeds")) {
    const auto& s = top.raw("seeds");
    if (!s.is_array() || s.empty()) throw ConfigError("seeds: expected a non-empty array of integers");
    c.seeds.clear();
    for (const auto& v : s) {
      if (!v.is_number_unsigned()) throw ConfigError("seeds: expected non-negative integers");
      c.seeds.push_back(v.get<std::uint64_t>());
    }
  }
  top.string("output_dir", c.output_dir);
  top.finish();
  try {
    c.sample.validate();
    c.broadening.validate();
    c.protocol.validate();
    c.orbitals.validate();
    c.grid.validate();
  } catch (const DomainError& e) {
    throw ConfigError(e.what());
  }
  return c;
}

inline RunConfig load_config(const std::string& path) {
  std::string text;
  try {
    text = read_file(path);
  } catch (const DataError& e) {
    throw ConfigError(e.what());
  }
  return parse_config(text, path);
}

// Effective configuration; the input to the config digest.
inline json config_to_json(const RunConfig& c) {
  const auto& s = c.sample;
  const auto& b = c.broadening;
  const auto& p = c.protocol;
  const auto& o = c.orbitals;
  return json{
      {"sample",
       {{"rho_c", s.rho_c.value_ppm},
        {"chi_g_perp", s.chi_g_perp},
        {"chi_g_par", s.chi_g_par},
        {"chi_e_perp", s.chi_e_perp},
        {"chi_e_par", s.chi_e_par},
        {"delta_zfs", s.delta_zfs_ghz},
        {"hyperfine_shifts", s.hyperfine_shifts},
        {"gamma_e_single", s.gamma_e_single},
        {"epsilon_c", s.epsilon_c},
        {"epsilon_r_enh", s.epsilon_r_enh}}},
      {"broadening",
       {{"preset", c.preset},
        {"kappa_ih_res", b.kappa_ih_res},
        {"kappa_h_res", b.kappa_h_res},
        {"kappa_ih_offres", b.kappa_ih_offres},
        {"kappa_h_offres", b.kappa_h_offres}}},
      {"protocol",
       {{"p_pi", p.p_pi},
        {"p_f", p.p_f},
        {"c0", p.c0},
        {"chi_eff", p.chi_eff},
        {"chi_e_par", p.chi_e_par},
        {"chi_e_perp", p.chi_e_perp},
        {"kappa0_g", p.kappa0_g},
        {"kappaE_g", p.kappaE_g},
        {"kappa0_e", p.kappa0_e},
        {"kappaE_e", p.kappaE_e},
        {"kappa_ref", p.kappa_ref},
        {"reference_density", p.reference_density},
        {"reference_count_rate", p.reference_count_rate},
        {"reference_volume", p.reference_volume},
        {"illumination_volume", p.illumination_volume}}},
      {"orbitals",
       {{"lambda_mix", o.lambda_mix},
        {"x1", o.x1},
        {"z_carbon", o.z_carbon},
        {"z_nitrogen", o.z_nitrogen},
        {"nu0_ev", o.nu0_ev},
        {"d_perp", o.d_perp},
        {"d_par", o.d_par},
        {"d_perp_prime", o.d_perp_prime}}},
      {"field",
       {{"calibration", c.field.method == CalibrationMethod::mode ? "mode" : "distribution"},
        {"samples", c.field.samples},
        {"ratio", c.field.ratio}}},
      {"spectrum", {{"half_width", c.grid.half_width}, {"step", c.grid.step}}},
      {"seeds", c.seeds},
      {"output_dir", c.output_dir},
  };
}

// The output location does not change results, so it is left out.
inline std::string config_digest(const RunConfig& c) {
  json j = config_to_json(c);
  j.erase("output_dir");
  return hex64(fnv1a64(j.dump()));
}

}  // namespace nvelec
