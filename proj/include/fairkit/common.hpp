#pragma once

#include <stdexcept>
#include <string>

namespace fairkit {

inline constexpr const char* kVersion = "0.1.0";

/// Base class for all toolkit errors.
class Error : public std::runtime_error {
public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// Bad inputs: malformed files, invalid configs, violated preconditions.
/// The CLI maps these to exit code 2.
class ValidationError : public Error {
public:
  using Error::Error;
};

/// Failures that occur while computing: divergence, failed replicates.
/// The CLI maps these to exit code 4.
class ComputeError : public Error {
public:
  using Error::Error;
};

/// A (group, label) cell is too small or empty for the requested operation.
class StratificationError : public ValidationError {
public:
  using ValidationError::ValidationError;
};

/// A group lacks the positives (or negatives) a metric or regularizer needs.
class DegenerateGroupError : public ValidationError {
public:
  using ValidationError::ValidationError;
};

/// Training produced a non-finite loss.
class DivergenceError : public ComputeError {
public:
  DivergenceError(const std::string& what, long step) : ComputeError(what), step(step) {}
  long step;
};

/// A g-SMOTE cohort has fewer than m members.
class AugmentationUnavailableError : public ValidationError {
public:
  using ValidationError::ValidationError;
};

}  // namespace fairkit
