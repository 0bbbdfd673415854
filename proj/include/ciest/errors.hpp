#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace ciest {

// Malformed or inconsistent user input (dimensions, ranges, schema).
class InputError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A numerical solve that could not be completed (singular system, Newton
// stall).
class SolverError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Raised when a recursion produces a non-finite entry.
class DivergenceError : public std::runtime_error {
 public:
  DivergenceError(std::int64_t t, int agent, std::string quantity)
      : std::runtime_error("divergence at t=" + std::to_string(t) +
                           " agent=" + std::to_string(agent) +
                           " quantity=" + quantity),
        t_(t),
        agent_(agent),
        quantity_(std::move(quantity)) {}

  std::int64_t t() const { return t_; }
  int agent() const { return agent_; }
  const std::string& quantity() const { return quantity_; }

 private:
  std::int64_t t_;
  int agent_;
  std::string quantity_;
};

}  // namespace ciest
