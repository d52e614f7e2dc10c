#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace ecgbnn {

// Root of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A value outside its admissible set (e.g. 0 handed to pack, NaN parameters).
class InvalidValueError : public Error {
 public:
  using Error::Error;
};

// Shapes or lengths that do not line up.
class DimensionError : public Error {
 public:
  using Error::Error;
};

// An operation whose output would have no elements.
class EmptyOutputError : public Error {
 public:
  using Error::Error;
};

class InvalidLabelError : public Error {
 public:
  using Error::Error;
};

// Wrong input kind for the model mode, empty datasets and similar misuse.
class InvalidInputError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

// CSV parse failure; carries the 1-based row number of the offending line.
class ParseError : public Error {
 public:
  ParseError(std::size_t row, const std::string& what)
      : Error("row " + std::to_string(row) + ": " + what), row_(row) {}

  std::size_t row() const noexcept { return row_; }

 private:
  std::size_t row_;
};

// Binary file format violations. `kind` distinguishes the failure for callers
// that need to react differently (and for tests).
class FormatError : public Error {
 public:
  enum class Kind { kBadMagic, kBadVersion, kChecksum, kTruncated, kInvalid };

  FormatError(Kind kind, const std::string& what) : Error(what), kind_(kind) {}

  Kind kind() const noexcept { return kind_; }

 private:
  Kind kind_;
};

}  // namespace ecgbnn
