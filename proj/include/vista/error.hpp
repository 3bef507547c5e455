#pragma once

#include <stdexcept>
#include <string>

namespace vista {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed input: JSON, JSON Lines, RLE strings, config files.
class ParseError : public Error {
 public:
  using Error::Error;
};

// A dataset constraint (synchronization, geometry, grid) does not hold.
class ConstraintError : public Error {
 public:
  using Error::Error;
};

// Operand shapes disagree (mask dimensions, series lengths).
class DimensionError : public Error {
 public:
  using Error::Error;
};

// A metric is undefined for its input (empty series, empty mask, ...).
class MetricError : public Error {
 public:
  using Error::Error;
};

// The tracker process broke the line protocol.
class ProtocolError : public Error {
 public:
  using Error::Error;
};

// The tracker crashed, timed out, or could not be started.
class DriverError : public Error {
 public:
  using Error::Error;
};

// A required input (frame image, detections file) is unavailable.
class MissingInputError : public Error {
 public:
  using Error::Error;
};

}  // namespace vista
