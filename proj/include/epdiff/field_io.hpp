#pragma once

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <ios>
#include <istream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <tuple>
#include <vector>

#include "epdiff/spectral_field.hpp"

namespace epdiff {

/// Writes `content` to a sibling temporary file and renames it over `path`.
inline void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) throw std::runtime_error("cannot open " + tmp.string() + " for writing");
    os << content;
    if (!os) throw std::runtime_error("write failed: " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

inline std::string format_double(double x) {
  std::ostringstream os;
  os << std::setprecision(17) << x;
  return os.str();
}

/// Field CSV: optional '#' comment lines, then the header
/// `xi_1,...,xi_d,component,re,im` and one row per (xi, component), xi in
/// enumeration order and components numbered from 1.
inline void write_field_csv(std::ostream& os, const SpectralField& f, const std::vector<std::string>& comments = {}) {
  for (const auto& c : comments) os << "# " << c << '\n';
  for (int k = 1; k <= f.dim(); ++k) os << "xi_" << k << ',';
  os << "component,re,im\n";
  os << std::setprecision(17);
  for_each_frequency(f.grid(), [&](std::size_t i, const Frequency& xi) {
    for (int c = 0; c < f.ncomp(); ++c) {
      for (int k = 0; k < f.dim(); ++k) os << xi[k] << ',';
      os << (c + 1) << ',' << f(c, i).real() << ',' << f(c, i).imag() << '\n';
    }
  });
}

inline std::string field_csv_string(const SpectralField& f, const std::vector<std::string>& comments = {}) {
  std::ostringstream os;
  write_field_csv(os, f, comments);
  return os.str();
}

/// Reads a field CSV. Dimension comes from the header, the cutoff from the
/// largest |xi|_inf present and the component count from the largest
/// component label. Rows may come in any order; absent rows are zero and
/// duplicates are rejected.
inline SpectralField read_field_csv(std::istream& is) {
  std::string line;
  int dim = -1;
  std::size_t lineno = 0;
  using Key = std::tuple<int, int, int, int>;
  std::map<Key, Complex> rows;
  int cutoff = 0;
  int ncomp = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (dim < 0) {
      dim = static_cast<int>(cells.size()) - 3;
      if (dim < 1 || dim > kMaxDim) throw std::runtime_error("field CSV: bad header '" + line + "'");
      for (int k = 0; k < dim; ++k) {
        if (cells[static_cast<std::size_t>(k)] != "xi_" + std::to_string(k + 1)) {
          throw std::runtime_error("field CSV: bad header '" + line + "'");
        }
      }
      if (cells[static_cast<std::size_t>(dim)] != "component" || cells[static_cast<std::size_t>(dim) + 1] != "re" ||
          cells[static_cast<std::size_t>(dim) + 2] != "im") {
        throw std::runtime_error("field CSV: bad header '" + line + "'");
      }
      continue;
    }
    if (static_cast<int>(cells.size()) != dim + 3) {
      throw std::runtime_error("field CSV line " + std::to_string(lineno) + ": expected " + std::to_string(dim + 3) +
                               " columns");
    }
    try {
      Frequency xi{0, 0, 0};
      for (int k = 0; k < dim; ++k) {
        xi[k] = std::stoi(cells[static_cast<std::size_t>(k)]);
        cutoff = std::max(cutoff, std::abs(xi[k]));
      }
      const int comp = std::stoi(cells[static_cast<std::size_t>(dim)]);
      if (comp < 1) throw std::runtime_error("component labels start at 1");
      ncomp = std::max(ncomp, comp);
      const Complex v(std::stod(cells[static_cast<std::size_t>(dim) + 1]), std::stod(cells[static_cast<std::size_t>(dim) + 2]));
      if (!rows.emplace(Key{xi[0], xi[1], xi[2], comp}, v).second) {
        throw std::runtime_error("duplicate row");
      }
    } catch (const std::exception& e) {
      throw std::runtime_error("field CSV line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  if (dim < 0) throw std::runtime_error("field CSV: missing header");
  if (ncomp == 0) throw std::runtime_error("field CSV: no data rows");
  SpectralField f(dim, cutoff, ncomp);
  for (const auto& [key, v] : rows) {
    const auto& [a, b, c, comp] = key;
    f.at(comp - 1, Frequency{a, b, c}) = v;
  }
  return f;
}

inline SpectralField read_field_csv(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open field file " + path.string());
  return read_field_csv(is);
}

}  // namespace epdiff
