#pragma once

#include <stdexcept>
#include <string>

namespace rescnet {

// Every error raised by the library derives from Error so callers can catch
// the whole family; the concrete type tells them which contract was broken.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

class InsufficientDataError : public Error {
 public:
  using Error::Error;
};

class SingularityError : public Error {
 public:
  using Error::Error;
};

class DomainError : public Error {
 public:
  using Error::Error;
};

class DegenerateLabelsError : public Error {
 public:
  using Error::Error;
};

// Raised by the stacked-LDA search when one filter cannot be accepted.
class NonSeparableError : public Error {
 public:
  NonSeparableError(int filter_index, int attempts)
      : Error("stacked-LDA: filter " + std::to_string(filter_index) +
              " not accepted after " + std::to_string(attempts) + " attempts"),
        filter_index_(filter_index),
        attempts_(attempts) {}

  int filter_index() const { return filter_index_; }
  int attempts() const { return attempts_; }

 private:
  int filter_index_;
  int attempts_;
};

// Malformed on-disk data (bad magic, truncated record, inconsistent counts).
class FormatError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  ConfigError(std::string key, const std::string& what)
      : Error("config key '" + key + "': " + what), key_(std::move(key)) {}

  const std::string& key() const { return key_; }

 private:
  std::string key_;
};

class CheckpointError : public Error {
 public:
  using Error::Error;
};

}  // namespace rescnet
