#pragma once

#include <stdexcept>
#include <string>

namespace bigreg {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

/// Malformed file contents (sidecar, payload length, CSV, transform text).
class FormatError : public Error {
 public:
  using Error::Error;
};

/// Bad arguments that violate an operation's preconditions.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

class DimsMismatch : public InvalidArgument {
 public:
  using InvalidArgument::InvalidArgument;
};

class DimsTooSmall : public InvalidArgument {
 public:
  using InvalidArgument::InvalidArgument;
};

class ConstantVolume : public InvalidArgument {
 public:
  using InvalidArgument::InvalidArgument;
};

/// Point sets that do not determine a rigid transform (collinear, too few).
class DegenerateConfiguration : public Error {
 public:
  using Error::Error;
};

class EmptySurface : public Error {
 public:
  using Error::Error;
};

class EmptyIndex : public Error {
 public:
  using Error::Error;
};

class NoValidModel : public Error {
 public:
  using Error::Error;
};

/// Every cell of a correlation volume is below the overlap floor.
class AllInvalid : public Error {
 public:
  using Error::Error;
};

class SpecInfeasible : public Error {
 public:
  using Error::Error;
};

/// Wraps an error raised inside one pipeline stage; stage() names it
/// ("preprocess", "surface", "s11", "s12", "s2", "resample").
class StageError : public Error {
 public:
  StageError(std::string stage, const std::string& what)
      : Error("[" + stage + "] " + what), stage_(std::move(stage)) {}

  const std::string& stage() const noexcept { return stage_; }

 private:
  std::string stage_;
};

}  // namespace bigreg
