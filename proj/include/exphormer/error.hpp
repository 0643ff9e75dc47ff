#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace exphormer {

// Domain failures (as opposed to caller misuse, which throws
// std::invalid_argument / std::out_of_range directly).
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// generate_verified() drew max_retries candidates and none passed.
class RetriesExhausted : public Error {
 public:
  RetriesExhausted(std::size_t attempts, double best_bound, double threshold);

  std::size_t attempts() const noexcept { return attempts_; }
  double best_bound() const noexcept { return best_bound_; }
  double threshold() const noexcept { return threshold_; }

 private:
  std::size_t attempts_;
  double best_bound_;
  double threshold_;
};

// A random walk failed to reach the target distance (bipartite graph or
// step cap exceeded).
class NoConvergence : public Error {
 public:
  NoConvergence(const std::string& what, std::size_t steps_taken)
      : Error(what), steps_taken_(steps_taken) {}

  std::size_t steps_taken() const noexcept { return steps_taken_; }

 private:
  std::size_t steps_taken_;
};

// Dense work requested beyond the configured size budget.
class BudgetExceeded : public Error {
 public:
  using Error::Error;
};

// Malformed text input. line() is 1-based; 0 means "before any line".
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line);

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

// Embeddings or cotangents handed to the attention layer contain NaN/inf.
// Derives from invalid_argument: it is a bad input to the layer.
class NonFiniteInput : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Training produced a non-finite loss or non-finite activations.
class TrainingDiverged : public Error {
 public:
  explicit TrainingDiverged(std::size_t step);

  std::size_t step() const noexcept { return step_; }

 private:
  std::size_t step_;
};

}  // namespace exphormer
