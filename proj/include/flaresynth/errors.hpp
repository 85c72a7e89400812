#pragma once

#include <stdexcept>
#include <string>

namespace flaresynth {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad arguments, configuration or preconditions. The CLI maps these to exit code 2.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

class DimensionMismatch : public InvalidArgument {
 public:
  using InvalidArgument::InvalidArgument;
};

class IoError : public Error {
 public:
  using Error::Error;
};

// A transformed light-source annotation has no pixel above threshold.
class EmptySourceRegion : public Error {
 public:
  EmptySourceRegion() : Error("light-source region is empty") {}
};

// Every flare of an image was dropped by the visibility retries.
class SynthesisSkipped : public Error {
 public:
  using Error::Error;
};

}  // namespace flaresynth
