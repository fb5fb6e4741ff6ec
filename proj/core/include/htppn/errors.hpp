#pragma once

#include <stdexcept>
#include <string>

namespace htppn {

// Base of every domain failure raised by the library. Usage mistakes by the
// caller (bad weights, malformed config text) raise std::invalid_argument.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class SizeLimitExceeded : public Error {
 public:
  using Error::Error;
};

class InfeasibleConfiguration : public Error {
 public:
  using Error::Error;
};

class NotEnabled : public Error {
 public:
  using Error::Error;
};

class NotWellStructured : public Error {
 public:
  explicit NotWellStructured(std::string remnant)
      : Error("net is not well-structured: " + remnant), remnant_(std::move(remnant)) {}

  const std::string& remnant() const { return remnant_; }

 private:
  std::string remnant_;
};

class ProbabilityError : public Error {
 public:
  using Error::Error;
};

class CyclicTiming : public Error {
 public:
  using Error::Error;
};

}  // namespace htppn
