#pragma once

#include <cstdint>
#include <stdexcept>
#include <sstream>
#include <string>

namespace deeposets {

// Base class for all library errors.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Dimension or shape mismatch between tensors, layers, or inputs.
class ShapeError : public Error {
 public:
  using Error::Error;
};

// File reading/writing failures, including corrupt or truncated files.
class IoError : public Error {
 public:
  using Error::Error;
};

// Text parsing failure with a file location attached to the message.
class ParseError : public Error {
 public:
  ParseError(const std::string& file, long line, const std::string& what)
      : Error(file + ":" + std::to_string(line) + ": " + what),
        file_(file),
        line_(line) {}

  const std::string& file() const { return file_; }
  long line() const { return line_; }

 private:
  std::string file_;
  long line_;
};

namespace detail {
inline void format_into(std::ostringstream&) {}

template <typename T, typename... Rest>
void format_into(std::ostringstream& os, const T& v, const Rest&... rest) {
  os << v;
  format_into(os, rest...);
}
}  // namespace detail

// Builds an error message from stream-formattable pieces.
template <typename... Parts>
std::string msg(const Parts&... parts) {
  std::ostringstream os;
  detail::format_into(os, parts...);
  return os.str();
}

}  // namespace deeposets
