#pragma once

#include <stdexcept>
#include <string>

namespace imbens {

// Broad failure category; the CLI maps these onto exit codes 2/3/4.
enum class ErrorKind { Usage, Data, Runtime };

// Every library failure carries a structured name ("TargetExceedsAvailable",
// "ShapeMismatch", ...) so callers can branch on it and the CLI can print it.
class Error : public std::runtime_error {
 public:
  Error(std::string name, ErrorKind kind, const std::string& message)
      : std::runtime_error(name + ": " + message), name_(std::move(name)), kind_(kind) {}

  const std::string& name() const noexcept { return name_; }
  ErrorKind kind() const noexcept { return kind_; }

 private:
  std::string name_;
  ErrorKind kind_;
};

[[noreturn]] inline void fail(const std::string& name, ErrorKind kind, const std::string& message) {
  throw Error(name, kind, message);
}

}  // namespace imbens
