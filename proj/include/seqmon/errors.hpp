#pragma once

#include <stdexcept>
#include <string>

namespace seqmon {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid combination of parameters (dimension mismatch, beta outside (0,1), ...).
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// A window whose estimate is undefined, e.g. a constant column under the correlation functional.
class DegenerateWindowError : public Error {
 public:
  using Error::Error;
};

/// A normalizing matrix failed the positive-definiteness / conditioning check.
class NonInvertibleError : public Error {
 public:
  using Error::Error;
};

/// Malformed, truncated or wrong-version calibration table.
class TableFormatError : public Error {
 public:
  using Error::Error;
};

class MissingCalibrationError : public Error {
 public:
  using Error::Error;
};

class CsvError : public Error {
 public:
  using Error::Error;
};

}  // namespace seqmon
