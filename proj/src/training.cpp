#include "daept/training.hpp"

#include <cmath>
#include <string>

#include "daept/error.hpp"

namespace daept {

EpochLoss train_epoch(Network& net, AdamState& adam, const Matrix& inputs,
                      const Matrix& targets, LossKind loss_kind, std::size_t batch_size,
                      RngStream epoch_rng, std::size_t epoch_index) {
  if (batch_size == 0) throw ConfigError("train_epoch: batch size must be positive");
  if (inputs.rows() != targets.rows()) throw ConfigError("train_epoch: row count mismatch");
  if (inputs.rows() == 0) throw ConfigError("train_epoch: no samples");

  RngStream order_rng = epoch_rng.derive(0);
  RngStream mask_rng = epoch_rng.derive(1);
  const std::vector<std::size_t> order = permutation(inputs.rows(), order_rng);

  EpochLoss result;
  double weighted = 0.0;
  for (std::size_t start = 0; start < order.size(); start += batch_size) {
    const std::size_t stop = std::min(order.size(), start + batch_size);
    const std::span<const std::size_t> idx(order.data() + start, stop - start);
    const Matrix x = select_rows(inputs, idx);
    const Matrix y = select_rows(targets, idx);

    ForwardResult fwd = forward(net, x, Mode::Train, mask_rng);
    const LossResult l = loss(loss_kind, fwd.output, y);
    if (!std::isfinite(l.value)) {
      throw TrainingError("non-finite loss at epoch " + std::to_string(epoch_index + 1) +
                          ", batch " + std::to_string(result.batches + 1));
    }
    const Gradients g = backward(net, fwd.tape, l.gradient);
    adam.step(net, g);

    weighted += l.value * static_cast<double>(idx.size());
    ++result.batches;
  }
  result.mean_loss = weighted / static_cast<double>(order.size());
  return result;
}

}  // namespace daept
