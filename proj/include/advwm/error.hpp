#pragma once

#include <stdexcept>
#include <string>

namespace advwm {

// Failure reading or writing an image file. what() carries the path.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Remote oracle could not be reached. Safe to retry.
class OracleUnavailable : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Oracle answered, but the payload does not follow the wire format.
class ProtocolError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Requested capability (e.g. activations) is not offered by the oracle.
class UnsupportedCapability : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Reference activation vector has zero norm.
class DegenerateReference : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// The attack cannot start, e.g. the clean image is not classified as the
// requested true class.
class PreconditionError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

}  // namespace advwm
