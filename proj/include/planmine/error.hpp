#pragma once

#include <stdexcept>
#include <string>

namespace planmine {

/// Broad failure classes. The HTTP layer and the CLI map these onto status
/// and exit codes, so new kinds need a mapping in both places.
enum class ErrorKind {
  io,
  not_found,
  precondition,
  validation,
  conflict,
  gone,
  transport,
  malformed_response,
  degenerate_data,
  usage,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  [[nodiscard]] ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[nodiscard]] const char* to_string(ErrorKind kind) noexcept;

[[noreturn]] inline void fail(ErrorKind kind, const std::string& message) {
  throw Error(kind, message);
}

inline void require(bool condition, const std::string& message) {
  if (!condition) fail(ErrorKind::precondition, message);
}

}  // namespace planmine
