// Command-line front end: synth, preprocess, pretrain, train, run, report.

#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "daept/classifier.hpp"
#include "daept/dae.hpp"
#include "daept/dataset.hpp"
#include "daept/error.hpp"
#include "daept/experiment.hpp"
#include "daept/serialize.hpp"
#include "daept/synth.hpp"

namespace fs = std::filesystem;
using namespace daept;

namespace {

enum ExitCode { kOk = 0, kUsage = 1, kData = 2, kTraining = 3 };

struct Hyper {
  std::size_t code_dim = 128;
  double corruption = 0.10;
  std::size_t epochs_dae = 100;
  std::size_t epochs_clf = 300;
  std::size_t batch_size = 500;
  std::size_t fc1 = 64;
  std::size_t fc2 = 16;
  double threshold = 0.5;
  double learning_rate = 1e-3;
  std::size_t folds = 5;
  std::uint64_t seed = 42;
};

void add_dae_flags(CLI::App* cmd, Hyper& h) {
  cmd->add_option("--code-dim", h.code_dim, "Autoencoder code width")
      ->capture_default_str()->check(CLI::PositiveNumber);
  cmd->add_option("--corruption", h.corruption, "Input dropout rate during pretraining")
      ->capture_default_str()->check(CLI::Range(0.0, 0.999999));
  cmd->add_option("--epochs-dae", h.epochs_dae, "Autoencoder epochs")
      ->capture_default_str()->check(CLI::PositiveNumber);
}

void add_clf_flags(CLI::App* cmd, Hyper& h) {
  cmd->add_option("--epochs-clf", h.epochs_clf, "Classifier epochs")
      ->capture_default_str()->check(CLI::PositiveNumber);
  cmd->add_option("--fc1", h.fc1, "First hidden layer width")
      ->capture_default_str()->check(CLI::PositiveNumber);
  cmd->add_option("--fc2", h.fc2, "Second hidden layer width")
      ->capture_default_str()->check(CLI::PositiveNumber);
  cmd->add_option("--threshold", h.threshold, "Decision threshold")
      ->capture_default_str()->check(CLI::Range(1e-9, 1.0 - 1e-9));
}

void add_common_flags(CLI::App* cmd, Hyper& h) {
  cmd->add_option("--batch-size", h.batch_size, "Mini-batch size")
      ->capture_default_str()->check(CLI::PositiveNumber);
  cmd->add_option("--learning-rate", h.learning_rate, "Adam learning rate")
      ->capture_default_str()->check(CLI::PositiveNumber);
  cmd->add_option("--folds", h.folds, "Cross-validation folds")
      ->capture_default_str()->check(CLI::Range(2, 1000));
  cmd->add_option("--seed", h.seed, "Master seed")->capture_default_str();
  cmd->add_option("--config", "key=value file; flags given on the command line take precedence")
      ->check(CLI::ExistingFile);
}

RunConfig to_run_config(const Hyper& h) {
  RunConfig c;
  c.seed = h.seed;
  c.k = h.folds;
  c.dae.code_dim = h.code_dim;
  c.dae.corruption_rate = h.corruption;
  c.dae.epochs = h.epochs_dae;
  c.dae.batch_size = h.batch_size;
  c.dae.adam.learning_rate = h.learning_rate;
  c.classifier.epochs = h.epochs_clf;
  c.classifier.batch_size = h.batch_size;
  c.classifier.fc1_dim = h.fc1;
  c.classifier.fc2_dim = h.fc2;
  c.classifier.decision_threshold = h.threshold;
  c.classifier.adam.learning_rate = h.learning_rate;
  return c;
}

Fold pick_fold(const LabeledDataset& ds, const RunConfig& c, const std::string& cls,
               std::size_t fold) {
  if (fold < 1 || fold > c.k) throw ConfigError("--fold must be between 1 and --folds");
  RngStream split_rng = SeedPlan{c.seed}.split(cls);
  return stratified_kfold(ds.labels, c.k, split_rng).folds[fold - 1];
}

std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t\r");
  const auto e = s.find_last_not_of(" \t\r");
  return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
}

// Rewrites argv so that every key=value line of a --config file becomes a flag of the selected
// subcommand, placed ahead of the explicit flags. Keys the subcommand does not know are ignored so
// a run snapshot can seed pretrain/train as well. Lists are written as [a,b].
std::vector<std::string> expand_config(const CLI::App& app, const std::vector<std::string>& args) {
  if (args.size() < 2) return args;
  const CLI::App* sub = nullptr;
  try {
    sub = app.get_subcommand(args[1]);
  } catch (const CLI::OptionNotFound&) {
    return args;
  }
  std::string file;
  std::vector<std::string> rest;
  std::vector<std::string> given;
  for (std::size_t i = 2; i < args.size(); ++i) {
    const std::string& a = args[i];
    if (a == "--config" && i + 1 < args.size()) {
      file = args[++i];
      continue;
    }
    if (a.rfind("--config=", 0) == 0) {
      file = a.substr(9);
      continue;
    }
    if (a.rfind("--", 0) == 0) given.push_back(a.substr(2, a.find('=') - 2));
    rest.push_back(a);
  }
  if (file.empty()) return args;
  std::ifstream in(file);
  if (!in) throw ConfigError("cannot open config file " + file);
  std::vector<std::string> out{args[0], args[1]};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    line = trim(line);
    if (line.empty() || line[0] == '#' || line[0] == ';') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(file + ":" + std::to_string(line_no) + ": expected key=value");
    }
    const std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (sub->get_option_no_throw("--" + key) == nullptr) continue;
    if (std::find(given.begin(), given.end(), key) != given.end()) continue;
    if (value.size() >= 2 && value.front() == '[' && value.back() == ']') {
      value = value.substr(1, value.size() - 2);
      std::size_t pos = 0;
      while (pos <= value.size()) {
        const auto comma = std::min(value.find(',', pos), value.size());
        const std::string item = trim(value.substr(pos, comma - pos));
        if (!item.empty()) {
          out.push_back("--" + key);
          out.push_back(item);
        }
        pos = comma + 1;
      }
    } else {
      out.push_back("--" + key);
      out.push_back(value);
    }
  }
  out.insert(out.end(), rest.begin(), rest.end());
  return out;
}

void print_metrics(const char* label, const MetricsRecord& r) {
  std::printf("%s loss=%.4f accuracy=%.4f precision=%.4f recall=%.4f f1=%.4f\n", label, r.loss,
              r.accuracy, r.precision, r.recall, r.f1);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Denoising-autoencoder weight initialisation for binary expression classifiers"};
  app.require_subcommand(1);

  // synth
  auto* synth = app.add_subcommand("synth", "Generate synthetic cohort files");
  DeskOptions desk;
  fs::path synth_out;
  synth->add_option("--outdir", synth_out, "Output directory")->required();
  synth->add_option("--seed", desk.seed, "Generator seed")->capture_default_str();
  synth->add_option("--samples", desk.samples_per_cohort, "Samples per cohort")
      ->capture_default_str()->check(CLI::Range(5, 10000000));
  synth->add_option("--features", desk.features, "Signal genes shared by all cohorts")
      ->capture_default_str()->check(CLI::PositiveNumber);
  synth->add_option("--informative", desk.informative, "Genes carrying class signal (0: all)")
      ->capture_default_str();
  synth->add_option("--separation", desk.separation, "Class-mean spread in noise units")
      ->capture_default_str()->check(CLI::NonNegativeNumber);
  synth->add_option("--noise", desk.noise_stdev, "Within-class noise stdev")
      ->capture_default_str()->check(CLI::NonNegativeNumber);
  synth->add_option("--missing-rate", desk.missing_rate, "Fraction of masked cells")
      ->capture_default_str()->check(CLI::Range(0.0, 0.999999));
  synth->add_option("--constant-columns", desk.constant_columns, "Injected constant genes")
      ->capture_default_str();
  synth->add_option("--omitted", desk.omitted_per_cohort, "Genes missing from each cohort")
      ->capture_default_str();
  synth->add_option("--names", desk.names, "Cohort names")->capture_default_str();

  // preprocess
  auto* prep = app.add_subcommand("preprocess", "Clean, impute, intersect and merge cohorts");
  std::vector<fs::path> prep_inputs;
  fs::path prep_out;
  std::string prep_class;
  std::string prep_delim = "auto";
  prep->add_option("inputs", prep_inputs, "Cohort files (cohort name = file stem)")
      ->required()->check(CLI::ExistingFile);
  prep->add_option("--outdir", prep_out, "Output directory")->required();
  prep->add_option("--class", prep_class, "Positive cohort (default: first input)");
  prep->add_option("--delimiter", prep_delim, "auto|tab|comma")
      ->check(CLI::IsMember({"auto", "tab", "comma"}));

  // pretrain
  auto* pretrain = app.add_subcommand("pretrain", "Train the denoising autoencoder on one fold");
  Hyper pre_h;
  fs::path pre_data, pre_out;
  std::string pre_class;
  std::size_t pre_fold = 1;
  pretrain->add_option("--data", pre_data, "Preprocessed dataset directory")->required();
  pretrain->add_option("--outdir", pre_out, "Output directory")->required();
  pretrain->add_option("--class", pre_class, "Positive cohort used for stratification");
  pretrain->add_option("--fold", pre_fold, "Fold whose training part is used (1-based)")
      ->capture_default_str();
  add_dae_flags(pretrain, pre_h);
  add_common_flags(pretrain, pre_h);

  // train
  auto* train = app.add_subcommand("train", "Train one classifier from a pretrained autoencoder");
  Hyper tr_h;
  fs::path tr_data, tr_dae, tr_out;
  std::string tr_class, tr_strategy = "complete", tr_approach = "finetune";
  std::size_t tr_fold = 1;
  train->add_option("--data", tr_data, "Preprocessed dataset directory")->required();
  train->add_option("--dae", tr_dae, "Autoencoder snapshot (dae.daept)")
      ->required()->check(CLI::ExistingFile);
  train->add_option("--outdir", tr_out, "Output directory")->required();
  train->add_option("--class", tr_class, "Positive cohort");
  train->add_option("--fold", tr_fold, "Validation fold (1-based)")->capture_default_str();
  train->add_option("--strategy", tr_strategy, "encoder|complete")
      ->capture_default_str()->check(CLI::IsMember({"encoder", "complete"}));
  train->add_option("--approach", tr_approach, "fixed|finetune")
      ->capture_default_str()->check(CLI::IsMember({"fixed", "finetune"}));
  add_clf_flags(train, tr_h);
  add_common_flags(train, tr_h);

  // run
  auto* run = app.add_subcommand("run", "Run the full cross-validated experiment grid");
  Hyper run_h;
  fs::path run_data, run_out;
  std::vector<std::string> run_classes;
  std::vector<std::string> run_strategies{"both"}, run_approaches{"both"};
  int run_jobs = 1;
  run->add_option("--data", run_data, "Preprocessed dataset directory")->required();
  run->add_option("--outdir", run_out, "Run directory")->required();
  run->add_option("--class", run_classes, "Target cohorts (default: all)");
  run->add_option("--strategy", run_strategies, "encoder|complete|both")
      ->capture_default_str()->check(CLI::IsMember({"encoder", "complete", "both"}));
  run->add_option("--approach", run_approaches, "fixed|finetune|both")
      ->capture_default_str()->check(CLI::IsMember({"fixed", "finetune", "both"}));
  run->add_option("--jobs", run_jobs, "Parallel (class, fold) workers")
      ->capture_default_str()->check(CLI::Range(1, 1024));
  add_dae_flags(run, run_h);
  add_clf_flags(run, run_h);
  add_common_flags(run, run_h);

  // report
  auto* report = app.add_subcommand("report", "Re-render report and curves from a run directory");
  fs::path report_dir;
  report->add_option("rundir", report_dir, "Run directory")->required()->check(CLI::ExistingDirectory);

  try {
    std::vector<std::string> args(argv, argv + argc);
    args = expand_config(app, args);
    std::reverse(args.begin(), args.end());
    args.pop_back();
    app.parse(args);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*synth) {
      const SynthSpec spec = desk_spec(desk);
      const auto tables = generate(spec);
      for (const auto& p : write_cohorts(synth_out, tables)) std::cout << p.string() << '\n';
      return kOk;
    }

    if (*prep) {
      if (prep_inputs.size() < 2) {
        std::cerr << "preprocess: at least two cohort files are required\n" << prep->help();
        return kUsage;
      }
      ParseOptions opts;
      if (prep_delim == "tab") opts.delimiter = '\t';
      if (prep_delim == "comma") opts.delimiter = ',';
      std::vector<ExpressionTable> tables;
      for (const auto& p : prep_inputs) tables.push_back(read_table(p, p.stem().string(), opts));
      const std::string positive = prep_class.empty() ? tables.front().cohort : prep_class;
      const PreprocessResult result = preprocess(std::move(tables), positive);
      save_dataset(prep_out, result.dataset);
      for (const CohortSummary& c : result.cohorts) {
        std::printf("%s: %zu samples, %zu genes, %zu constant removed, %zu values imputed\n",
                    c.name.c_str(), c.samples, c.raw_genes, c.constant_removed, c.imputed_cells);
      }
      const LabeledDataset& ds = result.dataset;
      std::printf("merged: %zu samples x %zu features\n", ds.samples(), ds.features_count());
      for (const std::string& c : cohorts(ds)) {
        std::size_t n = 0;
        for (const auto& p : ds.provenance) n += p == c ? 1 : 0;
        std::printf("  %s: %zu samples (%.1f%%)\n", c.c_str(), n,
                    100.0 * static_cast<double>(n) / static_cast<double>(ds.samples()));
      }
      std::printf("positive class: %s\n", ds.positive_class.c_str());
      return kOk;
    }

    if (*pretrain) {
      RunConfig c = to_run_config(pre_h);
      LabeledDataset ds = load_dataset(pre_data);
      if (!pre_class.empty()) ds = relabel(std::move(ds), pre_class);
      c.dae.input_dim = ds.features_count();
      const Fold fold = pick_fold(ds, c, ds.positive_class, pre_fold);
      const FoldData data = make_fold_data(ds, fold);
      RngStream dae_rng = SeedPlan{c.seed}.dae(ds.positive_class, pre_fold - 1);
      RngStream init_rng = dae_rng.derive(0);
      RngStream train_rng = dae_rng.derive(1);
      const TrainedDAE dae =
          train_dae(build_dae(c.dae, init_rng), data.x_train, data.x_val, c.dae, train_rng);
      fs::create_directories(pre_out);
      save_dae(pre_out / "dae.daept", pre_out / "dae_history.csv", dae);
      std::printf("epoch 1: train %.6f val %.6f\n", dae.history.front().train_loss,
                  dae.history.front().val_loss);
      std::printf("epoch %zu: train %.6f val %.6f\n", dae.history.size(),
                  dae.history.back().train_loss, dae.history.back().val_loss);
      return kOk;
    }

    if (*train) {
      RunConfig c = to_run_config(tr_h);
      LabeledDataset ds = load_dataset(tr_data);
      if (!tr_class.empty()) ds = relabel(std::move(ds), tr_class);
      const fs::path history = tr_dae.parent_path() / "dae_history.csv";
      const TrainedDAE dae = load_dae(tr_dae, fs::exists(history) ? history : fs::path());
      const Fold fold = pick_fold(ds, c, ds.positive_class, tr_fold);
      const FoldData data = make_fold_data(ds, fold);
      const TransferStrategy s = parse_strategy(tr_strategy);
      const TrainApproach a = parse_approach(tr_approach);
      RngStream clf_rng = SeedPlan{c.seed}.classifier(ds.positive_class, tr_fold - 1, s);
      RngStream init_rng = clf_rng.derive(0);
      RngStream train_rng = clf_rng.derive(1);
      Network net = assemble(dae, s, a, c.classifier, init_rng, ds.features_count());
      const ClassifierRun result = train_classifier(std::move(net), data, c.classifier, train_rng);
      fs::create_directories(tr_out);
      write_metrics_csv(tr_out / "metrics.csv", result.epochs);
      save_network(tr_out / "best.daept", *result.best.snapshot,
                   {{"kind", "classifier"},
                    {"class", ds.positive_class},
                    {"fold", std::to_string(tr_fold)},
                    {"strategy", to_string(s)},
                    {"approach", to_string(a)},
                    {"epoch", std::to_string(result.best.epoch)},
                    {"threshold", format_real(c.classifier.decision_threshold)}});
      std::printf("best epoch %zu\n", result.best.epoch);
      print_metrics("train     ", result.best.train);
      print_metrics("validation", result.best.validation);
      return kOk;
    }

    if (*run) {
      RunConfig c = to_run_config(run_h);
      c.jobs = run_jobs;
      c.classes = run_classes;
      auto expand = [](const std::vector<std::string>& v, const char* a, const char* b) {
        std::vector<std::string> out;
        for (const auto& x : v) {
          if (x == "both") {
            out.push_back(a);
            out.push_back(b);
          } else {
            out.push_back(x);
          }
        }
        std::vector<std::string> dedup;
        for (const auto& x : out) {
          if (std::find(dedup.begin(), dedup.end(), x) == dedup.end()) dedup.push_back(x);
        }
        return dedup;
      };
      c.strategies.clear();
      for (const auto& s : expand(run_strategies, "encoder", "complete")) c.strategies.push_back(parse_strategy(s));
      c.approaches.clear();
      for (const auto& a : expand(run_approaches, "fixed", "finetune")) c.approaches.push_back(parse_approach(a));

      const LabeledDataset ds = load_dataset(run_data);
      const GridOutcome outcome = run_grid(c, ds, run_out);
      std::cout << render_report(run_out).table;
      for (const auto& e : outcome.errors) std::cerr << "failed: " << e << '\n';
      if (outcome.failed_cells > 0) {
        std::cerr << outcome.failed_cells << " of " << outcome.cells << " cells failed\n";
        return kTraining;
      }
      return kOk;
    }

    if (*report) {
      const RenderedReport r = render_report(report_dir);
      write_report(report_dir, r);
      std::cout << r.table;
      for (const auto& m : r.missing) std::cerr << "missing: " << m << '\n';
      return r.missing.empty() ? kOk : kData;
    }
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kData;
  } catch (const TrainingError& e) {
    std::cerr << "training failed: " << e.what() << '\n';
    return kTraining;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kData;
  }
  return kOk;
}
