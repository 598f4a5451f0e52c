#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "daept/network.hpp"
#include "daept/rng.hpp"

namespace daept {

struct Fold {
  std::vector<std::size_t> train;
  std::vector<std::size_t> validation;
};

struct FoldSplit {
  std::size_t k = 0;
  std::vector<Fold> folds;
};

/// Per class: shuffle the indices, then deal them round-robin into k folds.
/// Index lists inside each fold are sorted ascending.
FoldSplit stratified_kfold(std::span<const int> labels, std::size_t k, RngStream& rng);

struct Confusion {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t tn = 0;
  std::size_t fn = 0;

  std::size_t total() const { return tp + fp + tn + fn; }
};

Confusion confusion(std::span<const int> predicted, std::span<const int> truth);

struct MetricsRecord {
  double loss = 0.0;
  double accuracy = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;

  friend bool operator==(const MetricsRecord&, const MetricsRecord&) = default;
};

// Ratios with a zero denominator are reported as 0. Leaves `loss` at 0.
MetricsRecord metrics(const Confusion& c);

struct EpochCheckpoint {
  std::size_t epoch = 0;  // 1-based
  MetricsRecord train;
  MetricsRecord validation;
  std::optional<Network> snapshot;
};

// True when `a` ranks above `b`: higher validation F1, then lower validation
// loss, then earlier epoch.
bool ranks_above(const EpochCheckpoint& a, const EpochCheckpoint& b);

const EpochCheckpoint& select_best(std::span<const EpochCheckpoint> checkpoints);

enum class Metric { Loss, Accuracy, Precision, Recall, F1 };
inline constexpr Metric kAllMetrics[] = {Metric::Loss, Metric::Accuracy, Metric::Precision,
                                         Metric::Recall, Metric::F1};

std::string to_string(Metric m);
double get(const MetricsRecord& r, Metric m);

struct Summary {
  double mean = 0.0;
  double sd = 0.0;        // sample standard deviation (divisor n - 1)
  double variance = 0.0;  // sample variance
};

Summary summarize(std::span<const double> values);

struct CVReport {
  std::string configuration;
  std::vector<MetricsRecord> folds;
  Summary loss, accuracy, precision, recall, f1;

  const Summary& summary(Metric m) const;
};

CVReport aggregate(std::string configuration, std::vector<MetricsRecord> folds);

// "98.04% ± 1.09" for ratio metrics, "0.117 ± 0.50" for the loss.
std::string format_cell(Metric m, const Summary& s);

}  // namespace daept
