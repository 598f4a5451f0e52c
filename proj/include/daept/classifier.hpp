#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "daept/adam.hpp"
#include "daept/dae.hpp"
#include "daept/evaluation.hpp"
#include "daept/network.hpp"

namespace daept {

enum class TrainApproach { FixedWeights, FineTune };

std::string to_string(TrainApproach a);
TrainApproach parse_approach(const std::string& s);

struct ClassifierConfig {
  std::size_t fc1_dim = 64;
  std::size_t fc2_dim = 16;
  std::size_t epochs = 300;
  std::size_t batch_size = 500;
  double decision_threshold = 0.5;
  double batchnorm_epsilon = 1e-5;
  double batchnorm_momentum = 0.99;
  AdamConfig adam;

  void validate() const;
};

/// Imported DAE layers followed by BatchNorm -> Dense(fc1, ReLU) ->
/// Dense(fc2, ReLU) -> Dense(1, Sigmoid). Imported layers are frozen under
/// FixedWeights; everything after them is Glorot-initialised and trainable.
Network assemble(const TrainedDAE& dae, TransferStrategy strategy, TrainApproach approach,
                 const ClassifierConfig& config, RngStream& rng, std::size_t feature_dim);

// Number of leading layers that came from the autoencoder.
std::size_t imported_layer_count(TransferStrategy strategy);

struct FoldData {
  Matrix x_train;
  std::vector<int> y_train;
  Matrix x_val;
  std::vector<int> y_val;
};

struct ClassifierRun {
  std::vector<EpochCheckpoint> epochs;  // metrics only
  EpochCheckpoint best;                 // carries the parameter snapshot
};

using ClassifierEpochHook = std::function<void(const EpochCheckpoint&, const Network&)>;

ClassifierRun train_classifier(Network net, const FoldData& data,
                               const ClassifierConfig& config, RngStream& rng,
                               const ClassifierEpochHook& on_epoch = {});

// n x 1 probabilities, clamped into (0, 1).
Matrix predict(const Network& net, const Matrix& x);
// Label 1 iff probability >= threshold.
std::vector<int> classify(const Matrix& probabilities, double threshold);

// Eval-mode BCE loss plus thresholded metrics.
MetricsRecord evaluate(const Network& net, const Matrix& x, std::span<const int> labels,
                       double threshold);

Matrix label_column(std::span<const int> labels);

// epoch,split,loss,accuracy,precision,recall,f1
void write_metrics_csv(const std::filesystem::path& path,
                       std::span<const EpochCheckpoint> epochs);
std::vector<EpochCheckpoint> read_metrics_csv(const std::filesystem::path& path);

}  // namespace daept
