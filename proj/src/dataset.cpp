#include "daept/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "daept/error.hpp"
#include "daept/serialize.hpp"

namespace daept {

namespace {

std::vector<std::string> split_line(const std::string& line, char delim) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    const std::size_t pos = line.find(delim, start);
    std::string cell = line.substr(start, pos == std::string::npos ? std::string::npos : pos - start);
    const auto first = cell.find_first_not_of(" \t\r");
    const auto last = cell.find_last_not_of(" \t\r");
    cell = first == std::string::npos ? std::string() : cell.substr(first, last - first + 1);
    out.push_back(std::move(cell));
    if (pos == std::string::npos) break;
    start = pos + 1;
  }
  return out;
}

std::string format_value(double v, NumberFormat format) {
  if (format == NumberFormat::RoundTrip) return format_real(v);
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  return buf;
}

}  // namespace

std::size_t ExpressionTable::missing_count() const {
  return static_cast<std::size_t>(std::count(missing.begin(), missing.end(), true));
}

ExpressionTable parse_table(std::istream& in, std::string cohort, const ParseOptions& options,
                            const std::string& source) {
  auto fail = [&](std::size_t line, const std::string& what) -> DataError {
    return DataError(source + ":" + std::to_string(line) + ": " + what);
  };

  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) break;
  }
  if (line.empty()) throw fail(line_no, "missing header line");

  const char delim =
      options.delimiter ? options.delimiter : (line.find('\t') != std::string::npos ? '\t' : ',');
  const std::vector<std::string> header = split_line(line, delim);
  if (header.size() < 2) throw fail(line_no, "header has no gene columns");

  // Sample ids sit under a `sampleId` header if there is one, else in the first
  // column. Anything left of it (a dumped row index) is ignored.
  std::size_t id_col = 0;
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (header[c] == "sampleId") {
      id_col = c;
      break;
    }
  }
  if (header.size() < id_col + 2) throw fail(line_no, "header has no gene columns");

  ExpressionTable t;
  t.cohort = std::move(cohort);
  t.gene_names.assign(header.begin() + static_cast<std::ptrdiff_t>(id_col) + 1, header.end());
  {
    std::unordered_set<std::string> seen;
    for (std::size_t c = 0; c < t.gene_names.size(); ++c) {
      const std::string col = std::to_string(id_col + c + 2);
      if (t.gene_names[c].empty()) throw fail(line_no, "column " + col + ": empty gene name");
      if (!seen.insert(t.gene_names[c]).second) {
        throw fail(line_no, "column " + col + ": duplicate gene name '" +
                                t.gene_names[c] + "'");
      }
    }
  }
  const std::unordered_set<std::string> na(options.na_tokens.begin(), options.na_tokens.end());
  const std::size_t genes = t.gene_names.size();

  std::vector<double> values;
  std::unordered_set<std::string> seen_samples;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const std::vector<std::string> cells = split_line(line, delim);
    if (cells.size() != header.size()) {
      throw fail(line_no, "row has " + std::to_string(cells.size()) + " fields, header has " +
                              std::to_string(header.size()));
    }
    const std::string& id = cells[id_col];
    const std::string id_pos = "column " + std::to_string(id_col + 1);
    if (id.empty()) throw fail(line_no, id_pos + ": empty sample id");
    if (!options.allow_duplicate_samples && !seen_samples.insert(id).second) {
      throw fail(line_no, id_pos + ": duplicate sample id '" + id + "'");
    }
    t.sample_ids.push_back(id);
    for (std::size_t c = id_col + 1; c < cells.size(); ++c) {
      const std::string& cell = cells[c];
      if (na.contains(cell)) {
        values.push_back(0.0);
        t.missing.push_back(true);
        continue;
      }
      double v = 0.0;
      const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
      if (ec != std::errc() || ptr != cell.data() + cell.size() || !std::isfinite(v)) {
        throw fail(line_no, "column " + std::to_string(c + 1) + " (" + t.gene_names[c - id_col - 1] +
                                "): not a number or NA token: '" + cell + "'");
      }
      values.push_back(v);
      t.missing.push_back(false);
    }
  }
  if (t.sample_ids.empty()) throw fail(line_no, "no data rows");
  t.values = Matrix(t.sample_ids.size(), genes, std::move(values));
  return t;
}

ExpressionTable read_table(const std::filesystem::path& path, std::string cohort,
                           const ParseOptions& options) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  return parse_table(in, std::move(cohort), options, path.string());
}

void write_table(std::ostream& out, const ExpressionTable& t, char delimiter,
                 NumberFormat format) {
  out << "sampleId";
  for (const std::string& g : t.gene_names) out << delimiter << g;
  out << '\n';
  for (std::size_t r = 0; r < t.samples(); ++r) {
    out << t.sample_ids[r];
    for (std::size_t c = 0; c < t.genes(); ++c) {
      out << delimiter << (t.is_missing(r, c) ? "NA" : format_value(t.values(r, c), format));
    }
    out << '\n';
  }
}

void save_table(const std::filesystem::path& path, const ExpressionTable& table,
                char delimiter, NumberFormat format) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  write_table(out, table, delimiter, format);
  if (!out) throw DataError("write failed for " + path.string());
}

namespace {

ExpressionTable keep_columns(const ExpressionTable& t, const std::vector<std::size_t>& keep) {
  ExpressionTable out;
  out.cohort = t.cohort;
  out.sample_ids = t.sample_ids;
  out.values = Matrix(t.samples(), keep.size());
  out.missing.assign(t.samples() * keep.size(), false);
  for (std::size_t k = 0; k < keep.size(); ++k) out.gene_names.push_back(t.gene_names[keep[k]]);
  for (std::size_t r = 0; r < t.samples(); ++r) {
    for (std::size_t k = 0; k < keep.size(); ++k) {
      out.values(r, k) = t.values(r, keep[k]);
      out.missing[r * keep.size() + k] = t.is_missing(r, keep[k]);
    }
  }
  return out;
}

}  // namespace

ExpressionTable drop_constant_features(const ExpressionTable& t) {
  std::vector<std::size_t> keep;
  for (std::size_t c = 0; c < t.genes(); ++c) {
    bool seen = false;
    bool varies = false;
    double first = 0.0;
    for (std::size_t r = 0; r < t.samples() && !varies; ++r) {
      if (t.is_missing(r, c)) continue;
      if (!seen) {
        first = t.values(r, c);
        seen = true;
      } else if (t.values(r, c) != first) {
        varies = true;
      }
    }
    if (varies) keep.push_back(c);
  }
  return keep_columns(t, keep);
}

ExpressionTable impute_column_mean(const ExpressionTable& t) {
  std::vector<std::size_t> observed;
  const Matrix means = column_means_masked(t.values, t.missing, &observed);
  for (std::size_t c = 0; c < t.genes(); ++c) {
    if (observed[c] == 0) {
      throw DataError(t.cohort + ": gene '" + t.gene_names[c] +
                      "' has no observed values; constant features must be dropped first");
    }
  }
  ExpressionTable out = t;
  for (std::size_t r = 0; r < t.samples(); ++r) {
    for (std::size_t c = 0; c < t.genes(); ++c) {
      if (t.is_missing(r, c)) out.values(r, c) = means(0, c);
    }
  }
  out.missing.assign(out.missing.size(), false);
  return out;
}

LabeledDataset intersect_and_merge(std::span<const ExpressionTable> tables,
                                   const std::string& positive_class) {
  if (tables.empty()) throw ConfigError("merge: no tables");
  bool known = false;
  for (const ExpressionTable& t : tables) {
    if (t.cohort == positive_class) known = true;
    if (t.missing_count() != 0) {
      throw DataError("merge: cohort '" + t.cohort + "' still has missing values");
    }
  }
  if (!known) throw ConfigError("merge: unknown positive class '" + positive_class + "'");

  std::vector<std::string> shared;
  for (const std::string& g : tables.front().gene_names) {
    bool everywhere = true;
    for (const ExpressionTable& t : tables.subspan(1)) {
      if (std::find(t.gene_names.begin(), t.gene_names.end(), g) == t.gene_names.end()) {
        everywhere = false;
        break;
      }
    }
    if (everywhere) shared.push_back(g);
  }
  if (shared.empty()) throw DataError("merge: cohorts share no genes");

  std::size_t total = 0;
  for (const ExpressionTable& t : tables) total += t.samples();

  LabeledDataset ds;
  ds.gene_names = shared;
  ds.positive_class = positive_class;
  ds.features = Matrix(total, shared.size());
  std::size_t row = 0;
  for (const ExpressionTable& t : tables) {
    std::unordered_map<std::string, std::size_t> col;
    for (std::size_t c = 0; c < t.genes(); ++c) col.emplace(t.gene_names[c], c);
    std::vector<std::size_t> source(shared.size());
    for (std::size_t k = 0; k < shared.size(); ++k) source[k] = col.at(shared[k]);
    for (std::size_t r = 0; r < t.samples(); ++r, ++row) {
      for (std::size_t k = 0; k < shared.size(); ++k) ds.features(row, k) = t.values(r, source[k]);
      ds.sample_ids.push_back(t.sample_ids[r]);
      ds.provenance.push_back(t.cohort);
      ds.labels.push_back(t.cohort == positive_class ? 1 : 0);
    }
  }
  return ds;
}

LabeledDataset relabel(LabeledDataset dataset, const std::string& positive_class) {
  if (std::find(dataset.provenance.begin(), dataset.provenance.end(), positive_class) ==
      dataset.provenance.end()) {
    throw ConfigError("relabel: unknown positive class '" + positive_class + "'");
  }
  dataset.positive_class = positive_class;
  for (std::size_t i = 0; i < dataset.labels.size(); ++i) {
    dataset.labels[i] = dataset.provenance[i] == positive_class ? 1 : 0;
  }
  return dataset;
}

std::vector<std::string> cohorts(const LabeledDataset& dataset) {
  std::vector<std::string> out;
  for (const std::string& c : dataset.provenance) {
    if (std::find(out.begin(), out.end(), c) == out.end()) out.push_back(c);
  }
  return out;
}

PreprocessResult preprocess(std::vector<ExpressionTable> tables,
                            const std::string& positive_class) {
  PreprocessResult result;
  std::vector<ExpressionTable> cleaned;
  cleaned.reserve(tables.size());
  for (ExpressionTable& t : tables) {
    CohortSummary s{t.cohort, t.samples(), t.genes(), 0, 0};
    ExpressionTable kept = drop_constant_features(t);
    s.constant_removed = t.genes() - kept.genes();
    s.imputed_cells = kept.missing_count();
    cleaned.push_back(impute_column_mean(kept));
    result.cohorts.push_back(s);
  }
  result.dataset = intersect_and_merge(cleaned, positive_class);
  return result;
}

void save_dataset(const std::filesystem::path& dir, const LabeledDataset& ds) {
  std::filesystem::create_directories(dir);
  ExpressionTable t;
  t.cohort = "merged";
  t.sample_ids = ds.sample_ids;
  t.gene_names = ds.gene_names;
  t.values = ds.features;
  t.missing.assign(ds.features.size(), false);
  save_table(dir / "merged.tsv", t);

  std::ofstream out(dir / "labels.csv");
  if (!out) throw DataError("cannot write " + (dir / "labels.csv").string());
  out << "sampleId,cohort,label\n";
  for (std::size_t i = 0; i < ds.samples(); ++i) {
    out << ds.sample_ids[i] << ',' << ds.provenance[i] << ',' << ds.labels[i] << '\n';
  }
}

LabeledDataset load_dataset(const std::filesystem::path& dir) {
  ParseOptions opts;
  opts.allow_duplicate_samples = true;
  ExpressionTable t = read_table(dir / "merged.tsv", "merged", opts);
  if (t.missing_count() != 0) throw DataError((dir / "merged.tsv").string() + ": missing values");

  LabeledDataset ds;
  ds.features = std::move(t.values);
  ds.gene_names = std::move(t.gene_names);
  ds.sample_ids = std::move(t.sample_ids);

  const auto labels_path = dir / "labels.csv";
  std::ifstream in(labels_path);
  if (!in) throw DataError("cannot open " + labels_path.string());
  std::string line;
  std::getline(in, line);
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "sampleId,cohort,label") throw DataError(labels_path.string() + ": bad header");
  std::size_t line_no = 1;
  std::set<std::string> positives;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto cells = split_line(line, ',');
    const std::size_t row = ds.provenance.size();
    if (cells.size() != 3 || (cells[2] != "0" && cells[2] != "1")) {
      throw DataError(labels_path.string() + ":" + std::to_string(line_no) + ": malformed row");
    }
    if (row >= ds.sample_ids.size() || cells[0] != ds.sample_ids[row]) {
      throw DataError(labels_path.string() + ":" + std::to_string(line_no) +
                      ": sample id does not match merged.tsv row " + std::to_string(row + 1));
    }
    ds.provenance.push_back(cells[1]);
    ds.labels.push_back(cells[2] == "1" ? 1 : 0);
    if (cells[2] == "1") positives.insert(cells[1]);
  }
  if (ds.provenance.size() != ds.sample_ids.size()) {
    throw DataError(labels_path.string() + ": row count differs from merged.tsv");
  }
  if (positives.size() != 1) {
    throw DataError(labels_path.string() + ": label 1 must mark exactly one cohort");
  }
  ds.positive_class = *positives.begin();
  for (std::size_t i = 0; i < ds.labels.size(); ++i) {
    if ((ds.provenance[i] == ds.positive_class) != (ds.labels[i] == 1)) {
      throw DataError(labels_path.string() + ": labels are not one-vs-rest by cohort");
    }
  }
  return ds;
}

}  // namespace daept
