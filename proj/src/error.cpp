#include "exphormer/error.hpp"

#include <sstream>

namespace exphormer {

namespace {

std::string retries_message(std::size_t attempts, double best, double threshold) {
  std::ostringstream os;
  os.precision(6);
  os << "no near-Ramanujan candidate after " << attempts
     << " draws (best bound " << best << ", threshold " << threshold << ")";
  return os.str();
}

}  // namespace

RetriesExhausted::RetriesExhausted(std::size_t attempts, double best_bound, double threshold)
    : Error(retries_message(attempts, best_bound, threshold)),
      attempts_(attempts),
      best_bound_(best_bound),
      threshold_(threshold) {}

ParseError::ParseError(const std::string& what, std::size_t line)
    : Error("line " + std::to_string(line) + ": " + what), line_(line) {}

TrainingDiverged::TrainingDiverged(std::size_t step)
    : Error("non-finite loss at step " + std::to_string(step)), step_(step) {}

}  // namespace exphormer
