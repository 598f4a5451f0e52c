#pragma once

#include <string>

#include "daept/matrix.hpp"

namespace daept {

enum class LossKind { MSE, BinaryCrossEntropy };

std::string to_string(LossKind k);

struct LossResult {
  double value = 0.0;
  Matrix gradient;  // d value / d predicted
};

inline constexpr double kBceClamp = 1e-12;

// Mean over all entries. BCE clamps predictions to [1e-12, 1 - 1e-12] and
// rejects anything outside [0, 1] as a missing sigmoid.
LossResult loss(LossKind kind, const Matrix& predicted, const Matrix& target);

// Value only; same definition as loss().
double loss_value(LossKind kind, const Matrix& predicted, const Matrix& target);

}  // namespace daept
