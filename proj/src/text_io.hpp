#pragma once

// Whitespace-token reader shared by the text file formats.

#include <charconv>
#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <span>
#include <string>
#include <string_view>

#include "diarize/core.hpp"

namespace diarize::detail {

class TokenReader {
 public:
  TokenReader(std::istream& is, std::string source) : is_(is), source_(std::move(source)) {}

  std::string next_word(std::string_view what) {
    std::string tok;
    if (!(is_ >> tok)) fail("unexpected end of file while reading " + std::string(what));
    return tok;
  }

  void expect(std::string_view word) {
    const std::string tok = next_word(word);
    if (tok != word) fail("expected '" + std::string(word) + "', found '" + tok + "'");
  }

  std::size_t next_size(std::string_view what) {
    const std::string tok = next_word(what);
    std::size_t v = 0;
    auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (ec != std::errc{} || ptr != tok.data() + tok.size())
      fail("expected a non-negative integer for " + std::string(what) + ", found '" + tok + "'");
    return v;
  }

  /// Parses a double; "nan" and "inf" are accepted and returned as-is.
  double next_double(std::string_view what) {
    const std::string tok = next_word(what);
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (ec != std::errc{} || ptr != tok.data() + tok.size())
      fail("expected a number for " + std::string(what) + ", found '" + tok + "'");
    return v;
  }

  bool at_end() {
    is_ >> std::ws;
    return is_.peek() == std::char_traits<char>::eof();
  }

  [[noreturn]] void fail(const std::string& msg) const { throw ParseError(source_ + ": " + msg); }

 private:
  std::istream& is_;
  std::string source_;
};

/// Shortest representation that round-trips a double.
inline void write_double(std::ostream& os, double v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  os.write(buf, ptr - buf);
}

inline void write_row(std::ostream& os, std::span<const double> row) {
  for (std::size_t i = 0; i < row.size(); ++i) {
    if (i) os << ' ';
    write_double(os, row[i]);
  }
  os << '\n';
}

}  // namespace diarize::detail
