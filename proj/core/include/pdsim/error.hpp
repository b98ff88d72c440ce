#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace pdsim {

/// Broad failure category. The CLI maps these onto exit codes.
enum class ErrorKind {
  invalid_argument,  // bad configuration or precondition (usage)
  format,            // malformed or inconsistent input data
  io,                // filesystem failure
  overflow,          // bounded structure exceeded at run time
  deadlock,          // inter-worker handshake timed out
  internal,          // a debug audit caught a broken invariant
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

class QueueOverflow : public Error {
 public:
  QueueOverflow(std::uint64_t tick, std::size_t capacity)
      : Error(ErrorKind::overflow,
              "spike queue overflow at tick " + std::to_string(tick) +
                  " (capacity " + std::to_string(capacity) + ")"),
        tick_(tick) {}

  std::uint64_t tick() const noexcept { return tick_; }

 private:
  std::uint64_t tick_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) {
  throw Error(kind, what);
}

inline void require(bool cond, const std::string& what) {
  if (!cond) fail(ErrorKind::invalid_argument, what);
}

}  // namespace pdsim
