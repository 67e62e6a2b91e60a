#pragma once

// `point,mass` CSV files: points strictly ascending, masses >= 0 summing to
// 1 within 1e-9. Values carry 17 significant digits, so a write/read round
// trip is bit-exact.

#include <cmath>
#include <fstream>
#include <string>
#include <vector>

#include "../errors.hpp"
#include "../measure.hpp"
#include "csv.hpp"

namespace thermo::io {

inline constexpr double kMeasureMassTol = 1e-9;

inline void write_measure(const std::string& path, const AtomicMeasure& m) {
  CsvWriter w(path, "point,mass");
  for (const Atom& a : m.atoms()) w.row(a.point, a.mass);
}

inline AtomicMeasure read_measure(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DomainError(path + ": cannot open");
  std::string line;
  if (!std::getline(in, line) || (line != "point,mass" && line != "point,mass\r"))
    throw DomainError(path + ":1: expected header 'point,mass'");
  std::vector<Atom> atoms;
  double total = 0.0;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const std::string where = path + ":" + std::to_string(lineno);
    const auto comma = line.find(',');
    if (comma == std::string::npos || line.find(',', comma + 1) != std::string::npos)
      throw DomainError(where + ": expected two columns");
    const double x = parse_double(std::string_view(line).substr(0, comma), where);
    const double m = parse_double(std::string_view(line).substr(comma + 1), where);
    if (!std::isfinite(x)) throw DomainError(where + ": point is not finite");
    if (!(m >= 0.0) || !std::isfinite(m)) throw DomainError(where + ": negative or non-finite mass");
    if (!atoms.empty() && !(x > atoms.back().point))
      throw DomainError(where + ": points must be strictly ascending");
    atoms.push_back({x, m});
    total += m;
  }
  if (std::abs(total - 1.0) > kMeasureMassTol)
    throw DomainError(path + ": masses sum to " + fmt(total) + ", not 1");
  return AtomicMeasure(std::move(atoms));
}

}  // namespace thermo::io
