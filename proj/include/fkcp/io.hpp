#pragma once

// Long-format CSV ingest/export of datasets, band and variogram tables.

#include <cstdio>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "fkcp/conformal.hpp"
#include "fkcp/error.hpp"
#include "fkcp/fdata.hpp"
#include "fkcp/variogram.hpp"

namespace fkcp::io {

/// Shortest decimal text that round-trips the double.
inline std::string fmt(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

inline std::string fmt_fixed(double x, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, x);
  return buf;
}

namespace detail {

inline std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) out.push_back(trim(cell));
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

inline double number(const std::string& s, std::size_t row, const char* what) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size() || !std::isfinite(v)) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ParseError(row, std::string("cannot parse ") + what + " '" + s + "'");
  }
}

}  // namespace detail

inline constexpr const char* dataset_header = "site_id,u,v,t,value";

/// Reads `site_id,u,v,t,value` rows grouped by site. Every site must list the
/// same strictly increasing t values. Row numbers in errors count the header as
/// row 1.
inline Dataset read_dataset_csv(std::istream& in) {
  std::string line;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    ++row;
    if (!detail::trim(line).empty()) break;
  }
  if (detail::trim(line) != dataset_header)
    throw ParseError(row, std::string("expected header '") + dataset_header + "'");

  std::vector<Site> sites;
  std::vector<std::vector<double>> values;
  std::vector<double> grid_pts;
  std::vector<double> current_t;
  std::map<std::string, std::size_t> seen;

  auto close_site = [&](std::size_t at_row) {
    if (sites.empty()) return;
    if (sites.size() == 1) {
      grid_pts = current_t;
    } else if (current_t != grid_pts) {
      throw ParseError(at_row, "site '" + sites.back().id + "' does not share the time grid of the first site");
    }
  };

  while (std::getline(in, line)) {
    ++row;
    if (detail::trim(line).empty()) continue;
    const auto cells = detail::split(line);
    if (cells.size() != 5) throw ParseError(row, "expected 5 fields, got " + std::to_string(cells.size()));
    const std::string& id = cells[0];
    if (id.empty()) throw ParseError(row, "empty site_id");
    const double u = detail::number(cells[1], row, "u");
    const double v = detail::number(cells[2], row, "v");
    const double t = detail::number(cells[3], row, "t");
    const double x = detail::number(cells[4], row, "value");

    if (sites.empty() || sites.back().id != id) {
      close_site(row);
      if (seen.count(id)) throw ParseError(row, "rows of site '" + id + "' are not contiguous");
      seen[id] = sites.size();
      sites.push_back({u, v, id});
      values.emplace_back();
      current_t.clear();
    } else if (sites.back().u != u || sites.back().v != v) {
      throw ParseError(row, "site '" + id + "' changes coordinates");
    }
    if (!current_t.empty() && !(t > current_t.back()))
      throw ParseError(row, "t values of site '" + id + "' are not strictly increasing");
    current_t.push_back(t);
    values.back().push_back(x);
  }
  if (sites.empty()) throw ParseError(row, "no data rows");
  close_site(row);

  GridPtr grid;
  try {
    grid = std::make_shared<const TimeGrid>(grid_pts);
  } catch (const Error& e) {
    throw ParseError(0, e.what());
  }
  std::vector<Curve> curves;
  curves.reserve(values.size());
  for (auto& v : values) curves.emplace_back(grid, std::move(v));
  try {
    return Dataset(grid, std::move(sites), std::move(curves));
  } catch (const Error& e) {
    throw ParseError(0, e.what());
  }
}

inline Dataset read_dataset_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(0, "cannot open '" + path + "'");
  return read_dataset_csv(in);
}

inline void write_dataset_csv(std::ostream& out, const Dataset& data) {
  out << dataset_header << '\n';
  const auto t = data.grid()->points();
  for (std::size_t i = 0; i < data.size(); ++i) {
    const Site& s = data.site(i);
    const std::string prefix = s.id + ',' + fmt(s.u) + ',' + fmt(s.v) + ',';
    for (std::size_t k = 0; k < t.size(); ++k) out << prefix << fmt(t[k]) << ',' << fmt(data.curve(i)[k]) << '\n';
  }
}

/// `t,center,lower,upper,S`; S is left empty for bands without a modulation.
inline void write_band_csv(std::ostream& out, const PredictionBand& band) {
  out << "t,center,lower,upper,S\n";
  const auto t = band.center.grid()->points();
  for (std::size_t k = 0; k < t.size(); ++k) {
    out << fmt(t[k]) << ',' << fmt(band.center[k]) << ',' << fmt(band.lower[k]) << ',' << fmt(band.upper[k]) << ',';
    if (band.modulation) out << fmt((*band.modulation)[k]);
    out << '\n';
  }
}

inline void write_variogram_csv(std::ostream& out, const EmpiricalVariogram& emp) {
  out << "lag,gamma,count\n";
  for (const auto& b : emp.bins) out << fmt(b.lag) << ',' << fmt(b.gamma) << ',' << b.count << '\n';
}

inline void write_curve_csv(std::ostream& out, const Curve& c, const std::string& column) {
  out << "t," << column << '\n';
  const auto t = c.grid()->points();
  for (std::size_t k = 0; k < t.size(); ++k) out << fmt(t[k]) << ',' << fmt(c[k]) << '\n';
}

}  // namespace fkcp::io
