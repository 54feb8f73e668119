#pragma once

// CSV emission: '.' decimal separator, shortest round-trip number text,
// LF line endings, mandatory header.

#include <charconv>
#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <system_error>

namespace kfspec {

inline std::string format_number(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  if (x == 0.0) x = 0.0;  // drop the sign of -0
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

inline std::string format_number(std::int64_t x) { return std::to_string(x); }
inline std::string format_number(std::uint64_t x) { return std::to_string(x); }
inline std::string format_number(int x) { return std::to_string(x); }

class CsvWriter {
 public:
  CsvWriter(std::ostream& os, std::initializer_list<std::string_view> header) : os_(os) {
    bool first = true;
    for (auto h : header) {
      if (!first) os_ << ',';
      os_ << h;
      first = false;
    }
    os_ << '\n';
  }

  CsvWriter(std::ostream& os, std::span<const std::string> header) : os_(os) {
    for (std::size_t i = 0; i < header.size(); ++i) os_ << (i ? "," : "") << header[i];
    os_ << '\n';
  }

  template <class... T>
  void row(const T&... v) {
    bool first = true;
    ((os_ << (first ? "" : ",") << format_number(v), first = false), ...);
    os_ << '\n';
  }

  void row(std::span<const double> v) {
    for (std::size_t i = 0; i < v.size(); ++i) os_ << (i ? "," : "") << format_number(v[i]);
    os_ << '\n';
  }

 private:
  std::ostream& os_;
};

/// "# key=value" metadata line, written before the header.
inline void csv_comment(std::ostream& os, std::string_view key, std::string_view value) {
  os << "# " << key << '=' << value << '\n';
}

}  // namespace kfspec
