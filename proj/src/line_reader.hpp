// Internal: whitespace-tokenizing line cursor shared by the structured-text
// parsers (scenes, checkpoints, uncertain maps). Not part of the public API.
#ifndef UAMAP_SRC_LINE_READER_HPP_
#define UAMAP_SRC_LINE_READER_HPP_

#include <cerrno>
#include <cstdint>
#include <cstdlib>
#include <sstream>
#include <string>

#include "uamap/scene_io.hpp"
#include "uamap/types.hpp"

namespace uamap::detail {

class LineReader {
 public:
  explicit LineReader(const std::string& text) : in_(text) {}

  // Advances to the next non-blank line; false at end of input.
  bool next_line() {
    std::string raw;
    while (std::getline(in_, raw)) {
      ++line_no_;
      if (raw.find_first_not_of(" \t\r") == std::string::npos) continue;
      if (!raw.empty() && raw.back() == '\r') raw.pop_back();
      line_.clear();
      line_.str(raw);
      return true;
    }
    return false;
  }

  void require_line(const char* what) {
    if (!next_line()) {
      throw ParseError(line_no_ + 1,
                       std::string("unexpected end of input, expected ") + what);
    }
  }

  std::string token(const char* what) {
    std::string t;
    if (!(line_ >> t)) {
      throw ParseError(line_no_, std::string("missing token, expected ") + what);
    }
    return t;
  }

  double number(const char* what) {
    const std::string t = token(what);
    errno = 0;
    char* end = nullptr;
    const double v = std::strtod(t.c_str(), &end);
    if (end != t.c_str() + t.size() || errno == ERANGE) {
      throw ParseError(line_no_, "invalid number '" + t + "' for " + what);
    }
    return v;
  }

  long long integer(const char* what) {
    const std::string t = token(what);
    errno = 0;
    char* end = nullptr;
    const long long v = std::strtoll(t.c_str(), &end, 10);
    if (end != t.c_str() + t.size() || errno == ERANGE) {
      throw ParseError(line_no_, "invalid integer '" + t + "' for " + what);
    }
    return v;
  }

  std::uint64_t unsigned_integer(const char* what) {
    const std::string t = token(what);
    errno = 0;
    char* end = nullptr;
    const unsigned long long v = std::strtoull(t.c_str(), &end, 10);
    if (t.empty() || t[0] == '-' || end != t.c_str() + t.size() ||
        errno == ERANGE) {
      throw ParseError(line_no_,
                       "invalid unsigned integer '" + t + "' for " + what);
    }
    return v;
  }

  void expect_keyword(const char* keyword) {
    const std::string t = token(keyword);
    if (t != keyword) {
      throw ParseError(line_no_, "expected '" + std::string(keyword) +
                                     "', got '" + t + "'");
    }
  }

  void end_of_line() {
    std::string extra;
    if (line_ >> extra) {
      throw ParseError(line_no_, "trailing token '" + extra + "'");
    }
  }

  ElementClass class_token(const char* what) {
    const std::string t = token(what);
    try {
      return class_from_name(t);
    } catch (const std::invalid_argument&) {
      throw ParseError(line_no_, "unknown class name '" + t + "'");
    }
  }

  std::size_t line_no() const { return line_no_; }

 private:
  std::istringstream in_;
  std::istringstream line_;
  std::size_t line_no_ = 0;
};

}  // namespace uamap::detail

#endif  // UAMAP_SRC_LINE_READER_HPP_
