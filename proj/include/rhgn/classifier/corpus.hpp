#pragma once

// Text corpus: one observation per line, raw readings then the label,
// comma-separated. Numbers use the shortest round-trip form.

#include <charconv>
#include <istream>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "rhgn/error.hpp"

namespace rhgn::classifier {

inline void write_record(std::ostream& out, std::span<const double> raw, std::string_view label) {
  char buf[64];
  for (double v : raw) {
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    out.write(buf, res.ptr - buf);
    out.put(',');
  }
  out << label << '\n';
}

// Calls fn(span<const double>, string_view label) for each record.
template <typename Fn>
std::size_t for_each_record(std::istream& in, std::size_t width, Fn&& fn) {
  std::string line;
  std::vector<double> values;
  std::size_t count = 0;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line.front() == '#') continue;
    values.clear();
    std::string_view rest(line);
    while (values.size() < width) {
      const auto comma = rest.find(',');
      if (comma == std::string_view::npos)
        throw Error(Errc::ParseError, "line " + std::to_string(lineno) + ": too few fields");
      double v = 0.0;
      const auto field = rest.substr(0, comma);
      auto res = std::from_chars(field.data(), field.data() + field.size(), v);
      if (res.ec != std::errc{} || res.ptr != field.data() + field.size())
        throw Error(Errc::ParseError, "line " + std::to_string(lineno) + ": bad number '" + std::string(field) + "'");
      values.push_back(v);
      rest.remove_prefix(comma + 1);
    }
    if (rest.empty() || rest.find(',') != std::string_view::npos)
      throw Error(Errc::ParseError, "line " + std::to_string(lineno) + ": expected a single trailing label");
    if (rest.back() == '\r') rest.remove_suffix(1);
    fn(std::span<const double>(values), rest);
    ++count;
  }
  return count;
}

}  // namespace rhgn::classifier
