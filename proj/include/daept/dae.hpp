#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <vector>

#include "daept/adam.hpp"
#include "daept/loss.hpp"
#include "daept/network.hpp"

namespace daept {

struct DAEConfig {
  std::size_t input_dim = 0;
  std::size_t code_dim = 128;
  double corruption_rate = 0.10;
  std::size_t epochs = 100;
  std::size_t batch_size = 500;
  LossKind reconstruction_loss = LossKind::MSE;
  AdamConfig adam;

  void validate() const;
};

struct EpochHistory {
  double train_loss = 0.0;
  double val_loss = 0.0;
};

enum class TransferStrategy { EncoderOnly, CompleteAE };

std::string to_string(TransferStrategy s);
TransferStrategy parse_strategy(const std::string& s);

/// Encoder/decoder parameters of a trained denoising autoencoder plus its loss
/// history. Corruption is not part of the artifact.
struct TrainedDAE {
  Dense encoder;
  Dense decoder;
  DAEConfig config;
  std::vector<EpochHistory> history;

  // Dropout -> encoder -> decoder, as used during pretraining.
  Network network() const;
};

// Dropout(corruption) -> Dense(d -> code, ReLU) -> Dense(code -> d, Linear).
Network build_dae(const DAEConfig& config, RngStream& rng);

using DaeEpochHook = std::function<void(std::size_t epoch, const Network& net)>;

/// Trains `net` (as produced by build_dae) to reconstruct clean inputs from
/// corrupted ones. Validation loss is computed in Eval mode, i.e. without
/// corruption. `on_epoch` sees the parameters at the end of every epoch.
TrainedDAE train_dae(Network net, const Matrix& x_train, const Matrix& x_val,
                     const DAEConfig& config, RngStream& rng,
                     const DaeEpochHook& on_epoch = {});

/// Layers handed to the classifier. The dropout layer is never exported.
std::vector<Layer> export_layers(const TrainedDAE& dae, TransferStrategy strategy);

void save_dae(const std::filesystem::path& model_path,
              const std::filesystem::path& history_path, const TrainedDAE& dae);
TrainedDAE load_dae(const std::filesystem::path& model_path,
                    const std::filesystem::path& history_path);

void write_dae_history(const std::filesystem::path& path,
                       const std::vector<EpochHistory>& history);
std::vector<EpochHistory> read_dae_history(const std::filesystem::path& path);

}  // namespace daept
