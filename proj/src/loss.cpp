#include "daept/loss.hpp"

#include <algorithm>
#include <cmath>

#include "daept/error.hpp"

namespace daept {

namespace {

void check_shapes(const Matrix& predicted, const Matrix& target) {
  if (predicted.rows() != target.rows() || predicted.cols() != target.cols()) {
    throw ConfigError("loss: predicted and target shapes differ");
  }
  if (predicted.empty()) throw ConfigError("loss: empty input");
}

void check_probabilities(const Matrix& predicted, const Matrix& target) {
  for (double p : predicted.values()) {
    if (!(p >= 0.0 && p <= 1.0)) {
      throw ConfigError("binary cross-entropy: prediction outside [0, 1]");
    }
  }
  for (double t : target.values()) {
    if (t != 0.0 && t != 1.0) throw ConfigError("binary cross-entropy: target not in {0, 1}");
  }
}

}  // namespace

std::string to_string(LossKind k) { return k == LossKind::MSE ? "mse" : "bce"; }

LossResult loss(LossKind kind, const Matrix& predicted, const Matrix& target) {
  check_shapes(predicted, target);
  const double n = static_cast<double>(predicted.size());
  LossResult r{0.0, Matrix(predicted.rows(), predicted.cols())};
  auto pv = predicted.values();
  auto tv = target.values();
  auto gv = r.gradient.values();

  if (kind == LossKind::MSE) {
    for (std::size_t i = 0; i < pv.size(); ++i) {
      const double d = pv[i] - tv[i];
      r.value += d * d;
      gv[i] = 2.0 * d / n;
    }
  } else {
    check_probabilities(predicted, target);
    for (std::size_t i = 0; i < pv.size(); ++i) {
      const double p = std::clamp(pv[i], kBceClamp, 1.0 - kBceClamp);
      r.value -= tv[i] * std::log(p) + (1.0 - tv[i]) * std::log(1.0 - p);
      gv[i] = (p - tv[i]) / (p * (1.0 - p)) / n;
    }
  }
  r.value /= n;
  return r;
}

double loss_value(LossKind kind, const Matrix& predicted, const Matrix& target) {
  return loss(kind, predicted, target).value;
}

}  // namespace daept
