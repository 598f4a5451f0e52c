#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "daept/classifier.hpp"
#include "daept/dae.hpp"
#include "daept/dataset.hpp"
#include "daept/evaluation.hpp"

namespace daept {

/// Everything a grid run depends on. Defaults follow the published setup:
/// code 128, corruption 0.10, 100 DAE epochs, 300 classifier epochs, batch
/// 500, 5 folds.
struct RunConfig {
  DAEConfig dae;
  ClassifierConfig classifier;
  std::size_t k = 5;
  std::uint64_t seed = 42;
  std::vector<std::string> classes;  // empty: every cohort in the dataset
  std::vector<TransferStrategy> strategies{TransferStrategy::EncoderOnly,
                                           TransferStrategy::CompleteAE};
  std::vector<TrainApproach> approaches{TrainApproach::FixedWeights, TrainApproach::FineTune};
  int jobs = 1;
};

// key=value lines; readable back through --config.
void write_config_snapshot(const std::filesystem::path& path, const RunConfig& config);
RunConfig read_config_snapshot(const std::filesystem::path& path);

std::string cell_name(TransferStrategy s, TrainApproach a);

// Row label used in the report, e.g. "thyroid: Complete AE".
std::string row_label(const std::string& cls, TransferStrategy s);

struct FoldResult {
  std::size_t failed_cells = 0;
  std::vector<std::string> errors;
};

/// Deterministic per-(class, fold) random streams. Classifier streams are
/// keyed by strategy only so the two approaches start from the same network
/// and see the same batches.
struct SeedPlan {
  std::uint64_t master;
  RngStream split(const std::string& cls) const;
  RngStream dae(const std::string& cls, std::size_t fold) const;
  RngStream classifier(const std::string& cls, std::size_t fold, TransferStrategy s) const;
};

FoldData make_fold_data(const LabeledDataset& ds, const Fold& fold);

struct GridOutcome {
  std::size_t cells = 0;
  std::size_t failed_cells = 0;
  std::vector<std::string> errors;
};

/// Runs every (class, fold): DAE pretraining, then each (strategy, approach)
/// classifier. Writes the run directory and renders the report from it.
GridOutcome run_grid(const RunConfig& config, const LabeledDataset& dataset,
                     const std::filesystem::path& outdir);

struct RenderedReport {
  std::string table;        // report.tsv
  std::string records_csv;  // records.csv: best epoch per fold
  std::string summary_csv;  // summary.csv: mean, sd, variance per metric
  std::map<std::string, std::string> curves;  // file name under curves/ -> content
  std::vector<std::string> missing;           // artifacts that were expected but absent
};

/// Pure view over a run directory.
RenderedReport render_report(const std::filesystem::path& run_dir);
void write_report(const std::filesystem::path& run_dir, const RenderedReport& report);

}  // namespace daept
