#pragma once

#include <stdexcept>
#include <string>

namespace pathid {

// Base for every error raised by the library. The CLI maps subclasses onto
// exit codes, so keep the hierarchy flat.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

class ZeroStateError : public Error {
public:
  using Error::Error;
};

class DimensionError : public Error {
public:
  using Error::Error;
};

class BoundError : public Error {
public:
  using Error::Error;
};

class InvalidStateError : public Error {
public:
  using Error::Error;
};

class UnsupportedPumpError : public Error {
public:
  using Error::Error;
};

class ChainError : public Error {
public:
  using Error::Error;
};

class ShapeError : public Error {
public:
  using Error::Error;
};

class ModelError : public Error {
public:
  using Error::Error;
};

class FitError : public Error {
public:
  using Error::Error;
};

class CompletenessError : public Error {
public:
  using Error::Error;
};

class FormatError : public Error {
public:
  using Error::Error;
};

} // namespace pathid

namespace pathid {

class ArgumentError : public Error {
public:
  using Error::Error;
};

} // namespace pathid
