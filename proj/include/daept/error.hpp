#pragma once

#include <stdexcept>
#include <string>

namespace daept {

// Dimension mismatches, invalid hyperparameters, misuse of the API.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed input files and preprocessing violations.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Non-finite values or degenerate folds during training.
class TrainingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace daept
