#include "daept/synth.hpp"

#include <cmath>
#include <cstdio>

#include "daept/error.hpp"
#include "daept/rng.hpp"

namespace daept {

namespace {

double round4(double v) { return std::round(v * 1e4) / 1e4; }

std::string gene_name(std::size_t index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "G%05zu_%zu", index + 1, 100000 + index * 37);
  return buf;
}

}  // namespace

void SynthSpec::validate(std::size_t min_samples) const {
  if (cohorts.size() < 2) throw ConfigError("synth: need at least two cohorts");
  if (features == 0) throw ConfigError("synth: feature count must be positive");
  if (!(noise_stdev >= 0.0)) throw ConfigError("synth: noise stdev must be >= 0");
  if (!(missing_rate >= 0.0 && missing_rate < 1.0)) {
    throw ConfigError("synth: missing rate must be in [0, 1)");
  }
  for (const CohortSpec& c : cohorts) {
    if (c.name.empty()) throw ConfigError("synth: cohort without a name");
    if (c.samples < min_samples) {
      throw ConfigError("synth: cohort '" + c.name + "' needs at least " +
                        std::to_string(min_samples) + " samples");
    }
    if (c.class_mean.size() != features) {
      throw ConfigError("synth: cohort '" + c.name + "' mean vector has the wrong length");
    }
  }
}

std::size_t SynthSpec::total_genes() const {
  return features + constant_columns + omitted_per_cohort * cohorts.size();
}

SynthSpec desk_spec(const DeskOptions& o) {
  SynthSpec spec;
  spec.features = o.features;
  spec.noise_stdev = o.noise_stdev;
  spec.missing_rate = o.missing_rate;
  spec.constant_columns = o.constant_columns;
  spec.omitted_per_cohort = o.omitted_per_cohort;
  spec.seed = o.seed;

  const std::size_t informative = o.informative == 0 ? o.features : o.informative;
  RngStream rng = RngStream(o.seed, 0).derive(stream_key({0x6d65616e73ull}));
  for (const std::string& name : o.names) {
    CohortSpec c{name, o.samples_per_cohort, std::vector<double>(o.features, 0.0)};
    for (std::size_t j = 0; j < informative && j < o.features; ++j) {
      c.class_mean[j] = o.separation * o.noise_stdev * rng.normal();
    }
    spec.cohorts.push_back(std::move(c));
  }
  return spec;
}

std::vector<ExpressionTable> generate(const SynthSpec& spec) {
  spec.validate();
  const std::size_t n_genes = spec.total_genes();
  const std::size_t first_constant = spec.features;
  const std::size_t first_omitted = spec.features + spec.constant_columns;

  RngStream root(spec.seed, stream_key({0x73796e7468ull}));
  RngStream layout_rng = root.derive(0);
  // Global gene order: a fixed shuffle so signal, constant and omitted genes
  // are interleaved in the files.
  const std::vector<std::size_t> order = permutation(n_genes, layout_rng);

  std::vector<ExpressionTable> tables;
  for (std::size_t ci = 0; ci < spec.cohorts.size(); ++ci) {
    const CohortSpec& cohort = spec.cohorts[ci];
    RngStream rng = root.derive(1 + ci);
    RngStream value_rng = rng.derive(0);
    RngStream missing_rng = rng.derive(1);
    RngStream constant_rng = rng.derive(2);

    std::vector<double> constants(spec.constant_columns);
    for (double& v : constants) v = round4(constant_rng.normal());

    // Gene ids (in the original numbering) present in this cohort.
    const std::size_t own_begin = first_omitted + ci * spec.omitted_per_cohort;
    const std::size_t own_end = own_begin + spec.omitted_per_cohort;
    std::vector<std::size_t> present;
    for (std::size_t g : order) {
      if (g >= own_begin && g < own_end) continue;
      present.push_back(g);
    }

    ExpressionTable t;
    t.cohort = cohort.name;
    for (std::size_t g : present) t.gene_names.push_back(gene_name(g));
    for (std::size_t s = 0; s < cohort.samples; ++s) {
      char buf[64];
      std::snprintf(buf, sizeof buf, "SYN-%s-%04zu", cohort.name.c_str(), s + 1);
      t.sample_ids.push_back(buf);
    }
    t.values = Matrix(cohort.samples, present.size());
    t.missing.assign(cohort.samples * present.size(), false);

    for (std::size_t s = 0; s < cohort.samples; ++s) {
      for (std::size_t k = 0; k < present.size(); ++k) {
        const std::size_t g = present[k];
        double v = 0.0;
        if (g < first_constant) {
          v = cohort.class_mean[g] + spec.noise_stdev * value_rng.normal();
        } else if (g < first_omitted) {
          v = constants[g - first_constant];
        } else {
          v = spec.noise_stdev * value_rng.normal();
        }
        t.values(s, k) = round4(v);
        if (g < first_constant && spec.missing_rate > 0.0 &&
            missing_rng.uniform() < spec.missing_rate) {
          t.missing[s * present.size() + k] = true;
        }
      }
    }

    // Every signal gene keeps at least two observed values so masking alone
    // never turns it into a constant column.
    for (std::size_t k = 0; k < present.size(); ++k) {
      if (present[k] >= first_constant) continue;
      std::size_t observed = 0;
      for (std::size_t s = 0; s < cohort.samples; ++s) observed += t.is_missing(s, k) ? 0 : 1;
      for (std::size_t s = 0; s < cohort.samples && observed < 2; ++s) {
        if (t.is_missing(s, k)) {
          t.missing[s * present.size() + k] = false;
          ++observed;
        }
      }
    }
    for (std::size_t i = 0; i < t.missing.size(); ++i) {
      if (t.missing[i]) t.values.values()[i] = 0.0;
    }
    tables.push_back(std::move(t));
  }
  return tables;
}

std::vector<std::filesystem::path> write_cohorts(const std::filesystem::path& dir,
                                                 const std::vector<ExpressionTable>& tables) {
  std::filesystem::create_directories(dir);
  std::vector<std::filesystem::path> paths;
  for (const ExpressionTable& t : tables) {
    const auto path = dir / (t.cohort + ".tsv");
    save_table(path, t, '\t', NumberFormat::FourDecimals);
    paths.push_back(path);
  }
  return paths;
}

}  // namespace daept
