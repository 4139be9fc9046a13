#pragma once

#include <stdexcept>

namespace asdscreen {

// Base class for everything this library throws. The CLI maps any Error to
// exit code 1, except undefined-metric conditions which exit 2 alongside
// audit violations.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Filesystem and I/O failures.
class IoError : public Error {
 public:
  using Error::Error;
};

// Invalid configuration values or unsatisfiable option combinations.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Corpus layout problems: missing labels sidecar, unclassifiable folder,
// empty corpus.
class StructureError : public Error {
 public:
  using Error::Error;
};

// Malformed input files; the message names the offending line where known.
class ParseError : public Error {
 public:
  using Error::Error;
};

// Array/tensor dimension mismatches; the message states expected vs got.
class ShapeError : public Error {
 public:
  using Error::Error;
};

// Values outside their documented domain (labels, pixel intensities, ...).
class ValueError : public Error {
 public:
  using Error::Error;
};

// Non-finite intermediate results in numeric code.
class NumericError : public Error {
 public:
  using Error::Error;
};

// Operations requested against pipeline policy, e.g. augmenting val/test.
class PolicyError : public Error {
 public:
  using Error::Error;
};

// Unknown table columns.
class SchemaError : public Error {
 public:
  using Error::Error;
};

// A metric whose denominator is empty. Raised instead of silently
// reporting zero, which would corrupt model comparisons.
class UndefinedMetricError : public Error {
 public:
  using Error::Error;
};

// Degenerate geometry, e.g. a zero-length limb vector.
class GeometryError : public Error {
 public:
  using Error::Error;
};

// Sealed-container authentication failure; no plaintext is ever released.
class AuthenticationError : public Error {
 public:
  using Error::Error;
};

// Access-log hash chain violation.
class IntegrityError : public Error {
 public:
  using Error::Error;
};

}  // namespace asdscreen
