#pragma once

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <utility>
#include <vector>

#include "nvelec/errors.hpp"
#include "nvelec/fit.hpp"
#include "nvelec/spectrum.hpp"

namespace nvelec {

inline constexpr const char* toolkit_version = "0.1.0";

// Shortest text that parses back to the same double.
inline std::string format_double(double v) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

inline std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  static const char* d = "0123456789abcdef";
  std::string s(16, '0');
  for (int i = 15; i >= 0; --i, v >>= 4) s[static_cast<std::size_t>(i)] = d[v & 0xf];
  return s;
}

inline std::string read_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

inline void write_file(const std::string& path, const std::string& content) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw DataError("cannot write '" + path + "'");
  f << content;
  if (!f) throw DataError("write failed for '" + path + "'");
}

// Provenance written as '#' comment lines at the top of every output file.
struct FileHeader {
  std::string config_digest;
  std::uint64_t seed = 0;
  std::string description;
};

struct CsvTable {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;

  std::string render(const FileHeader& h) const {
    std::string out = std::string("# nvelec ") + toolkit_version + "\n# config_digest " + h.config_digest +
                      "\n# seed " + std::to_string(h.seed) + "\n";
    if (!h.description.empty()) out += "# " + h.description + "\n";
    for (std::size_t i = 0; i < columns.size(); ++i) out += (i ? "," : "") + columns[i];
    out += "\n";
    for (const auto& r : rows) {
      if (r.size() != columns.size()) throw DomainError("CsvTable: row width differs from header");
      for (std::size_t i = 0; i < r.size(); ++i) out += (i ? "," : "") + format_double(r[i]);
      out += "\n";
    }
    return out;
  }

  // Column index by name; DataError when absent.
  std::size_t column(const std::string& name) const {
    auto it = std::find(columns.begin(), columns.end(), name);
    if (it == columns.end()) throw DataError("missing column '" + name + "'");
    return static_cast<std::size_t>(it - columns.begin());
  }
};

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

// Numeric CSV: '#' comment lines and blank lines skipped, first remaining line
// is the header. Errors carry the 1-based line number.
inline CsvTable parse_csv(const std::string& text, const std::string& source = "<input>") {
  CsvTable t;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  bool header = false;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string s = trim(line);
    if (s.empty() || s[0] == '#') continue;
    std::vector<std::string> cells;
    std::size_t start = 0;
    while (true) {
      const auto p = s.find(',', start);
      cells.push_back(trim(std::string_view(s).substr(start, p == std::string::npos ? std::string::npos : p - start)));
      if (p == std::string::npos) break;
      start = p + 1;
    }
    if (!header) {
      t.columns = cells;
      header = true;
      continue;
    }
    if (cells.size() != t.columns.size())
      throw DataError(source + ":" + std::to_string(lineno) + ": expected " + std::to_string(t.columns.size()) +
                      " fields, found " + std::to_string(cells.size()));
    std::vector<double> row(cells.size());
    for (std::size_t i = 0; i < cells.size(); ++i) {
      const auto& c = cells[i];
      const auto r = std::from_chars(c.data(), c.data() + c.size(), row[i]);
      if (r.ec != std::errc() || r.ptr != c.data() + c.size() || !std::isfinite(row[i]))
        throw DataError(source + ":" + std::to_string(lineno) + ": bad number '" + c + "' in column '" +
                        t.columns[i] + "'");
    }
    t.rows.push_back(std::move(row));
  }
  if (!header) throw DataError(source + ": no header row");
  return t;
}

inline CsvTable read_csv(const std::string& path) { return parse_csv(read_file(path), path); }

struct DetunedSpectrum {
  double detuning_ghz = 0.0;
  Spectrum spectrum;
};

// Spectra grouped by detuning, sorted by detuning and offset. Repeated offsets
// within a group are an error.
inline std::vector<DetunedSpectrum> spectra_from_table(const CsvTable& t, const std::string& source = "<input>") {
  const auto cd = t.column("detuning_ghz"), co = t.column("mw_offset_mhz"), cs = t.column("signal");
  std::map<double, std::vector<std::pair<double, double>>> groups;
  for (const auto& r : t.rows) groups[r[cd]].emplace_back(r[co], r[cs]);
  std::vector<DetunedSpectrum> out;
  for (auto& [d, pts] : groups) {
    std::sort(pts.begin(), pts.end());
    DetunedSpectrum ds;
    ds.detuning_ghz = d;
    for (std::size_t i = 0; i < pts.size(); ++i) {
      if (i > 0 && pts[i].first == pts[i - 1].first)
        throw DataError(source + ": duplicate mw_offset " + format_double(pts[i].first) + " at detuning " +
                        format_double(d));
      ds.spectrum.mw_offset.push_back(pts[i].first);
      ds.spectrum.signal.push_back(pts[i].second);
    }
    out.push_back(std::move(ds));
  }
  return out;
}

inline std::vector<DetunedSpectrum> ingest_spectra(const std::string& path) {
  return spectra_from_table(read_csv(path), path);
}

inline CsvTable spectra_to_table(const std::vector<DetunedSpectrum>& s) {
  CsvTable t;
  t.columns = {"detuning_ghz", "mw_offset_mhz", "signal"};
  for (const auto& d : s)
    for (std::size_t i = 0; i < d.spectrum.size(); ++i)
      t.rows.push_back({d.detuning_ghz, d.spectrum.mw_offset[i], d.spectrum.signal[i]});
  return t;
}

inline SplittingData splitting_data_from_table(const CsvTable& t) {
  const auto cd = t.column("detuning_ghz"), cp = t.column("pi_perp_mhz"), ce = t.column("pi_perp_err_mhz");
  SplittingData d;
  for (const auto& r : t.rows) {
    d.detuning_ghz.push_back(r[cd]);
    d.pi_perp_mhz.push_back(r[cp]);
    d.sigma_mhz.push_back(r[ce]);
  }
  try {
    d.validate();
  } catch (const DomainError& e) {
    throw DataError(e.what());
  }
  return d;
}

inline std::vector<ScanPoint> scan_grid_from_table(const CsvTable& t) {
  const auto cr = t.column("rho_c_ppm"), ck = t.column("kappa_ih_mhz");
  std::vector<ScanPoint> g;
  for (const auto& r : t.rows) {
    if (!(r[cr] > 0.0 && r[ck] > 0.0)) throw DataError("scan grid values must be positive");
    g.push_back({r[cr], r[ck]});
  }
  return g;
}

}  // namespace nvelec
