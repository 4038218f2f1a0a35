#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace fil {

// Every failure raised by the library derives from Error so callers at the
// process boundary (CLI, server loop) can catch one type.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ShapeError : public Error {
 public:
  using Error::Error;
};

class ArgumentError : public Error {
 public:
  using Error::Error;
};

class DataError : public Error {
 public:
  using Error::Error;
};

class StateError : public Error {
 public:
  using Error::Error;
};

class GenerationError : public Error {
 public:
  using Error::Error;
};

class OffTrackError : public Error {
 public:
  OffTrackError(const std::string& what, long long seed)
      : Error(what), seed_(seed) {}
  long long seed() const { return seed_; }

 private:
  long long seed_;
};

// Binary decoding failure. offset is the byte position where decoding stopped.
class FormatError : public Error {
 public:
  FormatError(const std::string& what, std::size_t offset)
      : Error(what + " (at byte " + std::to_string(offset) + ")"),
        offset_(offset) {}
  std::size_t offset() const { return offset_; }

 private:
  std::size_t offset_;
};

class ProtocolError : public FormatError {
 public:
  using FormatError::FormatError;
};

class TransportError : public Error {
 public:
  using Error::Error;
};

}  // namespace fil
