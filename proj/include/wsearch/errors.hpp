#pragma once

#include <stdexcept>
#include <string>

namespace wsearch {

// Bad user input: malformed config, infeasible request, mismatched artifacts.
// The CLI maps these to exit code 2.
struct InputError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Malformed on-disk data (truncated record, bad magic, out-of-range label).
struct FormatError : InputError {
    using InputError::InputError;
};

// Tensor shape disagreement between operands.
struct ShapeError : InputError {
    using InputError::InputError;
};

// Non-finite values where finite ones are required.
struct NumericError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Training diverged; carries the epoch where the loss went non-finite.
class TrainingError : public std::runtime_error {
public:
    TrainingError(const std::string& msg, int epoch)
        : std::runtime_error(msg + " (epoch " + std::to_string(epoch) + ")"), epoch_(epoch) {}
    int epoch() const { return epoch_; }

private:
    int epoch_;
};

// Failure inside the evolutionary loop; carries the individual id.
class SearchError : public std::runtime_error {
public:
    SearchError(const std::string& msg, int individual_id)
        : std::runtime_error(msg + " (individual " + std::to_string(individual_id) + ")"),
          individual_id_(individual_id) {}
    int individual_id() const { return individual_id_; }

private:
    int individual_id_;
};

}  // namespace wsearch
