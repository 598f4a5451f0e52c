#pragma once

#include <cstdint>
#include <vector>

#include "daept/network.hpp"

namespace daept {

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// First/second moment estimates for the trainable parameter set. The shape
/// set is fixed by the first step; later steps must present the same one.
class AdamState {
 public:
  explicit AdamState(AdamConfig config = {}) : config_(config) {}

  const AdamConfig& config() const { return config_; }
  std::uint64_t step_count() const { return t_; }

  void step(Network& net, const Gradients& grads);

 private:
  AdamConfig config_;
  std::uint64_t t_ = 0;
  std::vector<std::vector<Matrix>> m_;
  std::vector<std::vector<Matrix>> v_;
};

inline void adam_step(AdamState& state, Network& net, const Gradients& grads) {
  state.step(net, grads);
}

}  // namespace daept
