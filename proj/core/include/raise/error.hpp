#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace raisesql {

// Hard failures. Anything the agent should see and recover from is rendered
// as a tool result instead of thrown.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class MalformedRecord : public Error {
 public:
  explicit MalformedRecord(std::string field)
      : Error("malformed record: missing field \"" + field + "\""), field_(std::move(field)) {}
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

class AttachError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class IngestError : public Error {
 public:
  using Error::Error;
};

class StoreError : public Error {
 public:
  using Error::Error;
};

}  // namespace raisesql
