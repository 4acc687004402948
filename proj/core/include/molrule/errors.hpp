#pragma once

#include <stdexcept>
#include <string>

namespace molrule {

// Base class for everything this library throws on purpose.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class SyntaxError : public Error {
 public:
  using Error::Error;
};

class ValenceError : public Error {
 public:
  using Error::Error;
};

class UnsupportedFeature : public Error {
 public:
  using Error::Error;
};

class LengthMismatch : public Error {
 public:
  using Error::Error;
};

class DimensionMismatch : public Error {
 public:
  using Error::Error;
};

class SlotOutOfRange : public Error {
 public:
  using Error::Error;
};

// Malformed persisted artifacts: CSV/JSON schema violations, bad versions.
class FormatError : public Error {
 public:
  using Error::Error;
};

class InvariantViolation : public Error {
 public:
  using Error::Error;
};

class LeakageError : public Error {
 public:
  using Error::Error;
};

class NonFiniteLoss : public Error {
 public:
  using Error::Error;
};

class DegenerateSplit : public Error {
 public:
  using Error::Error;
};

class GenerationError : public Error {
 public:
  using Error::Error;
};

// Expected empty-result outcomes. Callers usually report these and stop
// rather than treating them as failures.
class Signal : public Error {
 public:
  using Error::Error;
};

class EmptyRuleSet : public Signal {
 public:
  using Signal::Signal;
};

class NoCliffs : public Signal {
 public:
  using Signal::Signal;
};

class NoTestRows : public Signal {
 public:
  using Signal::Signal;
};

class NoContexts : public Signal {
 public:
  using Signal::Signal;
};

}  // namespace molrule
