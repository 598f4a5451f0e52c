#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "daept/matrix.hpp"

namespace daept {

/// One cohort file: samples x genes with a missing-value mask.
struct ExpressionTable {
  std::string cohort;
  std::vector<std::string> sample_ids;
  std::vector<std::string> gene_names;
  Matrix values;              // missing slots hold 0
  std::vector<bool> missing;  // row-major, same shape as values

  std::size_t samples() const { return sample_ids.size(); }
  std::size_t genes() const { return gene_names.size(); }
  bool is_missing(std::size_t r, std::size_t c) const { return missing[r * genes() + c]; }
  std::size_t missing_count() const;

  friend bool operator==(const ExpressionTable&, const ExpressionTable&) = default;
};

struct ParseOptions {
  char delimiter = 0;  // 0: tab if the header contains one, else comma
  std::vector<std::string> na_tokens{"NA", "NaN", ""};
  bool allow_duplicate_samples = false;
};

ExpressionTable parse_table(std::istream& in, std::string cohort,
                            const ParseOptions& options = {},
                            const std::string& source = "<input>");
ExpressionTable read_table(const std::filesystem::path& path, std::string cohort,
                           const ParseOptions& options = {});

enum class NumberFormat {
  RoundTrip,    // 17 significant digits
  FourDecimals  // fixed, 4 places
};

void write_table(std::ostream& out, const ExpressionTable& table, char delimiter = '\t',
                 NumberFormat format = NumberFormat::RoundTrip);
void save_table(const std::filesystem::path& path, const ExpressionTable& table,
                char delimiter = '\t', NumberFormat format = NumberFormat::RoundTrip);

// Removes genes whose observed values are all equal, including genes with no
// observed value at all. Survivor order is preserved.
ExpressionTable drop_constant_features(const ExpressionTable& table);

// Fills masked slots with the mean of the observed values in the column.
ExpressionTable impute_column_mean(const ExpressionTable& table);

struct LabeledDataset {
  Matrix features;
  std::vector<int> labels;
  std::vector<std::string> gene_names;
  std::vector<std::string> sample_ids;
  std::vector<std::string> provenance;  // cohort of each sample
  std::string positive_class;

  std::size_t samples() const { return features.rows(); }
  std::size_t features_count() const { return features.cols(); }
};

/// Keeps the genes shared by every table (in the first table's order),
/// stacks the rows in table order and labels one cohort against the rest.
LabeledDataset intersect_and_merge(std::span<const ExpressionTable> tables,
                                   const std::string& positive_class);

// Same features, labels recomputed for another cohort.
LabeledDataset relabel(LabeledDataset dataset, const std::string& positive_class);

// Cohort names in first-appearance order.
std::vector<std::string> cohorts(const LabeledDataset& dataset);

struct CohortSummary {
  std::string name;
  std::size_t samples = 0;
  std::size_t raw_genes = 0;
  std::size_t constant_removed = 0;
  std::size_t imputed_cells = 0;
};

struct PreprocessResult {
  LabeledDataset dataset;
  std::vector<CohortSummary> cohorts;
};

// Per cohort: drop constants, impute; then intersect, merge and label.
PreprocessResult preprocess(std::vector<ExpressionTable> tables,
                            const std::string& positive_class);

// <dir>/merged.tsv (features) and <dir>/labels.csv (sampleId,cohort,label).
void save_dataset(const std::filesystem::path& dir, const LabeledDataset& dataset);
LabeledDataset load_dataset(const std::filesystem::path& dir);

}  // namespace daept
