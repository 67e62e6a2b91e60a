#pragma once

#include <charconv>
#include <fstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "../errors.hpp"

namespace thermo::io {

/// %.17g: enough digits to read back the identical double.
inline std::string fmt(double v) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
  return std::string(buf, r.ptr);
}

inline std::string fmt(long long v) { return std::to_string(v); }
inline std::string fmt(int v) { return std::to_string(v); }
inline std::string fmt(std::size_t v) { return std::to_string(v); }
inline std::string fmt(bool v) { return v ? "true" : "false"; }
inline std::string fmt(const std::string& s) { return s; }
inline std::string fmt(const char* s) { return s; }

/// Writes rows with a fixed header; '\n' line ends on every platform.
class CsvWriter {
 public:
  CsvWriter(const std::string& path, std::string_view header) : out_(path, std::ios::binary) {
    if (!out_) throw std::runtime_error("cannot open " + path + " for writing");
    out_ << header << '\n';
  }

  template <class... Ts>
  void row(const Ts&... cols) {
    bool first = true;
    ((out_ << (first ? "" : ",") << fmt(cols), first = false), ...);
    out_ << '\n';
  }

 private:
  std::ofstream out_;
};

inline double parse_double(std::string_view s, const std::string& where) {
  double v = 0.0;
  const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
  if (r.ec != std::errc() || r.ptr != s.data() + s.size())
    throw DomainError(where + ": not a number: '" + std::string(s) + "'");
  return v;
}

}  // namespace thermo::io
