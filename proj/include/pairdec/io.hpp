/* Copyright 2026 The pairdec Authors. All Rights Reserved.
Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at
    http://www.apache.org/licenses/LICENSE-2.0
Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

// CSV and JSON emission. Numbers are written in shortest round-trip form so
// identical inputs give byte-identical files.

#pragma once

#include "pairdec/observables.hpp"
#include "pairdec/propagation.hpp"
#include "pairdec/version.hpp"

#include <json.hpp>

#include <charconv>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace pairdec {

using Json = nlohmann::json;

inline std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

/// Quotes a CSV field when it contains a separator, quote or line break.
inline std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

inline const char* kUnitsDeclaration =
    "time in s; frequency in Hz; couplings and drive amplitudes given in Hz are converted to rad/s "
    "(x 2 pi) internally; expectation values Tr(O rho_dev) / 2^n";

/// Metadata shared by every emitted file.
inline Json metadata_block(const Json& config) {
  Json m;
  m["code"] = "pairdec";
  m["version"] = kVersion;
  m["units"] = kUnitsDeclaration;
  m["config"] = config;
  return m;
}

/// '#'-prefixed metadata lines for the top of a CSV file.
inline std::string csv_metadata(const Json& config) {
  std::ostringstream os;
  os << "# pairdec " << kVersion << '\n';
  os << "# units: " << kUnitsDeclaration << '\n';
  os << "# config: " << config.dump() << '\n';
  return os.str();
}

/// Table with a header row; columns are equal-length numeric vectors.
struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<double>> columns;

  void add(std::string name, std::vector<double> values) {
    if (!columns.empty() && values.size() != columns.front().size()) {
      throw DomainError("column '" + name + "' has a different length");
    }
    header.push_back(std::move(name));
    columns.push_back(std::move(values));
  }

  std::size_t rows() const { return columns.empty() ? 0 : columns.front().size(); }
};

inline std::string to_csv(const Table& t, const Json& config) {
  std::ostringstream os;
  os << csv_metadata(config);
  for (std::size_t c = 0; c < t.header.size(); ++c) os << (c ? "," : "") << csv_field(t.header[c]);
  os << '\n';
  for (std::size_t r = 0; r < t.rows(); ++r) {
    for (std::size_t c = 0; c < t.columns.size(); ++c) os << (c ? "," : "") << format_number(t.columns[c][r]);
    os << '\n';
  }
  return os.str();
}

inline Table trajectory_table(const Trajectory& traj) {
  Table t;
  t.add("time_s", traj.times);
  for (std::size_t c = 0; c < traj.names.size(); ++c) t.add(traj.names[c], traj.values[c]);
  return t;
}

inline Table spectrum_table(const Spectrum& s) {
  Table t;
  std::vector<double> re, im, disp = s.display();
  for (const auto& a : s.amplitudes) {
    re.push_back(a.real());
    im.push_back(a.imag());
  }
  t.add("frequency_hz", s.freqs);
  t.add("real", std::move(re));
  t.add("imag", std::move(im));
  t.add(s.options.mode == SpectrumMode::Absorption ? "absorption" : "magnitude", std::move(disp));
  return t;
}

inline Json peaks_json(const Spectrum& s, std::size_t limit = 16) {
  Json arr = Json::array();
  for (std::size_t k = 0; k < s.peaks.size() && k < limit; ++k) {
    arr.push_back({{"center_hz", s.peaks[k].center_hz},
                   {"fwhm_hz", s.peaks[k].fwhm_hz},
                   {"height", s.peaks[k].height}});
  }
  return arr;
}

inline Json decay_json(const DecayFit& f) {
  Json j{{"model", decay_model_name(f.model)},
         {"amplitude", f.amplitude},
         {"t2_eff_s", f.t2_eff},
         {"residual", f.residual}};
  if (f.model == DecayModel::ExpCosine) {
    j["frequency_hz"] = f.frequency;
    j["phase_rad"] = f.phase;
  }
  return j;
}

/// Reads a CSV written by to_csv (or any header-first CSV); lines starting
/// with '#' are skipped. Quoted fields are not supported in numeric rows.
inline Table read_csv(std::istream& in) {
  Table t;
  std::string line;
  bool have_header = false;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> fields;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
      const char ch = line[i];
      if (quoted) {
        if (ch == '"' && i + 1 < line.size() && line[i + 1] == '"') {
          cur += '"';
          ++i;
        } else if (ch == '"') {
          quoted = false;
        } else {
          cur += ch;
        }
      } else if (ch == '"') {
        quoted = true;
      } else if (ch == ',') {
        fields.push_back(cur);
        cur.clear();
      } else {
        cur += ch;
      }
    }
    fields.push_back(cur);
    if (!have_header) {
      t.header = fields;
      t.columns.assign(fields.size(), {});
      have_header = true;
      continue;
    }
    if (fields.size() != t.header.size()) {
      throw DomainError("CSV line " + std::to_string(lineno) + " has " + std::to_string(fields.size()) +
                        " fields, expected " + std::to_string(t.header.size()));
    }
    for (std::size_t c = 0; c < fields.size(); ++c) {
      double v = 0.0;
      const auto* b = fields[c].data();
      const auto res = std::from_chars(b, b + fields[c].size(), v);
      if (res.ec != std::errc() || res.ptr != b + fields[c].size()) {
        throw DomainError("CSV line " + std::to_string(lineno) + ": '" + fields[c] + "' is not a number");
      }
      t.columns[c].push_back(v);
    }
  }
  if (!have_header) throw DomainError("CSV has no header row");
  return t;
}

inline void write_text(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open '" + path + "' for writing");
  f << text;
  if (!f) throw std::runtime_error("failed writing '" + path + "'");
}

}  // namespace pairdec
