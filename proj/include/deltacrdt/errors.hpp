#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace dcrdt {

/// Root of every error raised by the library.
class error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class unknown_replica : public error {
 public:
  using error::error;
};

class counter_overflow : public error {
 public:
  using error::error;
};

/// A function was called outside its documented domain (e.g. t(s1, s2) with s1 not below s2).
class precondition_violation : public error {
 public:
  using error::error;
};

/// The G-Counter difference function has no value for two equal states.
class undefined_difference : public error {
 public:
  using error::error;
};

class malformed_interval : public error {
 public:
  using error::error;
};

class bounds_exceeded : public error {
 public:
  using error::error;
};

/// Recorded histories violate the network locale invariants.
class malformed_history : public error {
 public:
  using error::error;
};

class simulation_error : public error {
 public:
  using error::error;
};

class parse_error : public error {
 public:
  parse_error(std::size_t line, std::size_t column, const std::string& what)
      : error("line " + std::to_string(line) + ", column " + std::to_string(column) + ": " + what),
        line_(line),
        column_(column) {}

  std::size_t line() const noexcept { return line_; }
  std::size_t column() const noexcept { return column_; }

 private:
  std::size_t line_;
  std::size_t column_;
};

/// Scenario is syntactically fine but names something invalid.
class semantic_error : public parse_error {
 public:
  using parse_error::parse_error;
};

inline std::uint64_t checked_add(std::uint64_t a, std::uint64_t b) {
  std::uint64_t out = 0;
  if (__builtin_add_overflow(a, b, &out)) {
    throw counter_overflow("counter overflow: " + std::to_string(a) + " + " + std::to_string(b));
  }
  return out;
}

}  // namespace dcrdt
