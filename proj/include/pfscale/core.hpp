#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>

namespace pfscale {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Index = Eigen::Index;

/// Thrown when an argument violates an operation's precondition.
class InvalidInput : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A simulation produced a non-finite value. Filter drivers attach the grid
/// step index at which it was detected so trials can be reported instead of
/// dropped; single-step operations throw without one.
class DivergenceError : public std::runtime_error {
 public:
  explicit DivergenceError(const std::string& what) : std::runtime_error(what) {}
  DivergenceError(const std::string& what, std::size_t step)
      : std::runtime_error(what + " (step " + std::to_string(step) + ")"), step_(step) {}

  std::optional<std::size_t> step() const noexcept { return step_; }

 private:
  std::optional<std::size_t> step_;
};

inline void require(bool condition, const char* message) {
  if (!condition) throw InvalidInput(message);
}

/// Per-particle loops run either on the calling thread or across the OpenMP
/// team. Each iteration must only touch its own column.
enum class Exec { Serial, Parallel };

template <class Body>
void for_each_particle(Exec exec, Index n, Body&& body) {
  if (exec == Exec::Parallel) {
#pragma omp parallel for schedule(static)
    for (Index i = 0; i < n; ++i) body(i);
  } else {
    for (Index i = 0; i < n; ++i) body(i);
  }
}

}  // namespace pfscale
