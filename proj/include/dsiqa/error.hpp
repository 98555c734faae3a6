#pragma once

#include <stdexcept>
#include <string>

namespace dsiqa {

// Failure categories shared by the C++ core and the C API status codes.
enum class ErrorKind {
  InvalidArgument,  // precondition or usage violation
  Input,            // unreadable or malformed input data
  Io,               // failure while writing outputs
  Conflict,         // state conflict (duplicate output, conflicting vote)
  NotFound,         // unknown session, token, or id
  Undefined,        // mathematically undefined result (e.g. constant rank vector)
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

}  // namespace dsiqa
