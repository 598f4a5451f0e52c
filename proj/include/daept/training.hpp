#pragma once

#include <cstddef>

#include "daept/adam.hpp"
#include "daept/loss.hpp"
#include "daept/network.hpp"

namespace daept {

struct EpochLoss {
  double mean_loss = 0.0;  // batch losses weighted by batch size
  std::size_t batches = 0;
};

/// One pass of shuffled mini-batch training. The trailing short batch is kept.
/// `epoch_rng` drives both the shuffle and the dropout masks.
EpochLoss train_epoch(Network& net, AdamState& adam, const Matrix& inputs,
                      const Matrix& targets, LossKind loss_kind, std::size_t batch_size,
                      RngStream epoch_rng, std::size_t epoch_index);

}  // namespace daept
