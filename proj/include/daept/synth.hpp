#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "daept/dataset.hpp"

namespace daept {

struct CohortSpec {
  std::string name;
  std::size_t samples = 0;
  std::vector<double> class_mean;  // one entry per signal gene
};

/// Gaussian class-conditional cohorts shaped like the expression tables the
/// pipeline consumes. Each cohort file carries `features` signal genes,
/// `constant_columns` genes that never vary, and lacks its own block of
/// `omitted_per_cohort` genes that the other cohorts do have.
struct SynthSpec {
  std::vector<CohortSpec> cohorts;
  std::size_t features = 50;
  double noise_stdev = 1.0;
  double missing_rate = 0.0;
  std::size_t constant_columns = 0;
  std::size_t omitted_per_cohort = 0;
  std::uint64_t seed = 0;

  void validate(std::size_t min_samples = 5) const;
  // Genes written across all files.
  std::size_t total_genes() const;
};

struct DeskOptions {
  std::uint64_t seed = 7;
  std::size_t samples_per_cohort = 200;
  std::size_t features = 50;
  // Only the first `informative` genes carry class signal; 0 means all.
  std::size_t informative = 0;
  // Per-gene standard deviation of the class means, in units of the noise.
  double separation = 3.0;
  double noise_stdev = 1.0;
  double missing_rate = 0.02;
  std::size_t constant_columns = 5;
  std::size_t omitted_per_cohort = 3;
  std::vector<std::string> names{"thyroid", "skin", "stomach"};
};

SynthSpec desk_spec(const DeskOptions& options = {});

// Values are rounded to 4 decimals so the in-memory tables equal what the
// written files parse back to.
std::vector<ExpressionTable> generate(const SynthSpec& spec);

// Writes <dir>/<cohort>.tsv for each table, values with 4 decimals.
std::vector<std::filesystem::path> write_cohorts(const std::filesystem::path& dir,
                                                 const std::vector<ExpressionTable>& tables);

}  // namespace daept
