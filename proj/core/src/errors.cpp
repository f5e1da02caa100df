#include "plap/errors.hpp"

namespace plap {

SolverError::SolverError(const std::string& message, std::vector<IterationRecord> history)
    : Error(message), history_(std::move(history)) {}

}  // namespace plap
