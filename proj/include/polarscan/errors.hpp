#pragma once

#include <stdexcept>
#include <string>

namespace polarscan {

// Base class for all library errors so callers can catch everything at once.
struct Error : std::runtime_error {
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Filesystem / OS level failure (missing file, short write, ...).
struct IoError : Error {
  using Error::Error;
};

// Structurally malformed input (bad magic, impossible header fields).
struct FormatError : Error {
  using Error::Error;
};

// File parsed but carries an unsupported format version.
struct VersionError : FormatError {
  using FormatError::FormatError;
};

// Payload shorter than the header promises.
struct TruncatedError : FormatError {
  using FormatError::FormatError;
};

// Stored checksum does not match the recomputed one.
struct ChecksumError : Error {
  using Error::Error;
};

// Scene geometry the surrogate cannot represent (bar breaking the surface).
struct InvalidSceneError : Error {
  using Error::Error;
};

// Tensor operand shapes incompatible with the requested operation.
struct ShapeError : Error {
  using Error::Error;
};

// Alford estimator found no cell above the amplitude filter.
struct InsufficientAmplitudeError : Error {
  using Error::Error;
};

// Training loss became non-finite; carries the location for diagnostics.
struct TrainingDivergedError : Error {
  int epoch;
  int batch;
  double loss;
  TrainingDivergedError(int epoch_, int batch_, double loss_, const std::string& msg)
      : Error(msg), epoch(epoch_), batch(batch_), loss(loss_) {}
};

}  // namespace polarscan
