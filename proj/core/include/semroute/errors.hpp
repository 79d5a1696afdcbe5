#pragma once

#include <stdexcept>
#include <string>

namespace semroute {

// Base for every error the library raises. Callers that only care about
// "did it work" catch this; the CLI maps subclasses onto exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidInput : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
  explicit ParseError(const std::string& what) : Error(what) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_ = 0;
};

class MissingEmbedding : public Error {
 public:
  using Error::Error;
};

class MissingDescription : public Error {
 public:
  using Error::Error;
};

class BackendProtocolError : public Error {
 public:
  using Error::Error;
};

class BackendUnavailable : public Error {
 public:
  using Error::Error;
};

// b_max < 1: not even a single event fits next to the subscriptions.
class BatchInfeasible : public Error {
 public:
  using Error::Error;
};

class SubscriptionsExceedWindow : public Error {
 public:
  SubscriptionsExceedWindow(std::size_t cluster, const std::string& what)
      : Error(what), cluster_(cluster) {}

  std::size_t cluster() const noexcept { return cluster_; }

 private:
  std::size_t cluster_;
};

class NoViableBackend : public Error {
 public:
  using Error::Error;
};

class DatasetInvalid : public Error {
 public:
  using Error::Error;
};

}  // namespace semroute
