#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace ipgp {

/// Base of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed arguments, mismatched dimensions, unknown names.
class InvalidInput : public Error {
 public:
  using Error::Error;
};

/// Non-finite values or failed factorizations.
class NumericError : public Error {
 public:
  NumericError(const std::string& what, double value)
      : Error(what), value_(value) {}
  explicit NumericError(const std::string& what) : Error(what) {}

  /// The offending quantity (a distance, an eigenvalue estimate, ...).
  double value() const { return value_; }

 private:
  double value_ = 0.0;
};

class IntegrationFailure : public Error {
 public:
  IntegrationFailure(const std::string& what, double last_good_time,
                     long trajectory = -1)
      : Error(what), last_good_time_(last_good_time), trajectory_(trajectory) {}

  double last_good_time() const { return last_good_time_; }
  /// Index of the failing trajectory, -1 when not part of an ensemble.
  long trajectory() const { return trajectory_; }

 private:
  double last_good_time_;
  long trajectory_;
};

/// Problem size beyond the configured dense-algebra cap.
class ResourceError : public Error {
 public:
  using Error::Error;
};

class OptimizationFailure : public Error {
 public:
  using Error::Error;
};

/// An object was used with inputs it was not built for (stale caches, hash
/// mismatches).
class ContractError : public Error {
 public:
  using Error::Error;
};

/// Malformed frame data during real-data ingestion.
class IngestionError : public Error {
 public:
  IngestionError(const std::string& what, std::size_t frame)
      : Error(what), frame_(frame) {}
  std::size_t frame() const { return frame_; }

 private:
  std::size_t frame_;
};

/// Malformed serialized document.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t byte_offset)
      : Error(what), byte_offset_(byte_offset) {}
  std::size_t byte_offset() const { return byte_offset_; }

 private:
  std::size_t byte_offset_;
};

}  // namespace ipgp
