#include "sbd/errors.hpp"

#include <utility>

namespace sbd {

FormatError::FormatError(std::string field, const std::string& message)
    : Error(field + ": " + message), field_(std::move(field)) {}

SolverError::SolverError(int iteration, const std::string& message)
    : Error("iteration " + std::to_string(iteration) + ": " + message),
      iteration_(iteration) {}

}  // namespace sbd
