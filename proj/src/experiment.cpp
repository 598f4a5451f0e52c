#include "daept/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

#include "daept/error.hpp"
#include "daept/kernels.hpp"
#include "daept/serialize.hpp"

namespace daept {

namespace fs = std::filesystem;

namespace {

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

template <typename T, typename F>
std::string join_list(const std::vector<T>& items, F to_str) {
  std::string out = "[";
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i) out += ',';
    out += to_str(items[i]);
  }
  return out + "]";
}

std::vector<std::string> split_list(std::string v) {
  if (!v.empty() && v.front() == '[') v.erase(0, 1);
  if (!v.empty() && v.back() == ']') v.pop_back();
  std::vector<std::string> out;
  std::istringstream in(v);
  std::string item;
  while (std::getline(in, item, ',')) {
    item.erase(std::remove(item.begin(), item.end(), '"'), item.end());
    item.erase(std::remove(item.begin(), item.end(), ' '), item.end());
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::string strategy_label(TransferStrategy s) {
  return s == TransferStrategy::EncoderOnly ? "Encoding Layers" : "Complete AE";
}

std::string approach_letter(TrainApproach a) {
  return a == TrainApproach::FixedWeights ? "A" : "B";
}

fs::path class_dir(const fs::path& root, const std::string& cls) { return root / "folds" / cls; }

fs::path fold_dir(const fs::path& root, const std::string& cls, std::size_t fold) {
  return class_dir(root, cls) / ("fold" + std::to_string(fold + 1));
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << text;
}

// epoch, then mean/sd/var for each named series across folds.
std::string curve_csv(const std::vector<std::string>& names,
                      const std::vector<std::vector<std::vector<double>>>& series) {
  // series[name][fold][epoch]
  std::ostringstream out;
  out << "epoch";
  for (const std::string& n : names) out << ',' << n << "_mean," << n << "_sd," << n << "_var";
  out << '\n';
  std::size_t epochs = 0;
  for (const auto& per_fold : series) {
    for (const auto& s : per_fold) epochs = std::max(epochs, s.size());
  }
  for (std::size_t e = 0; e < epochs; ++e) {
    out << (e + 1);
    for (const auto& per_fold : series) {
      std::vector<double> values;
      for (const auto& s : per_fold) {
        if (e < s.size()) values.push_back(s[e]);
      }
      const Summary sm = summarize(values);
      out << ',' << format_real(sm.mean) << ',' << format_real(sm.sd) << ','
          << format_real(sm.variance);
    }
    out << '\n';
  }
  return out.str();
}

}  // namespace

std::string cell_name(TransferStrategy s, TrainApproach a) {
  return to_string(s) + "-" + to_string(a);
}

std::string row_label(const std::string& cls, TransferStrategy s) {
  return cls + ": " + strategy_label(s);
}

void write_config_snapshot(const fs::path& path, const RunConfig& c) {
  std::ostringstream out;
  out << "# daept run configuration v1\n";
  out << "seed=" << c.seed << '\n';
  out << "folds=" << c.k << '\n';
  out << "code-dim=" << c.dae.code_dim << '\n';
  out << "corruption=" << format_real(c.dae.corruption_rate) << '\n';
  out << "epochs-dae=" << c.dae.epochs << '\n';
  out << "epochs-clf=" << c.classifier.epochs << '\n';
  out << "batch-size=" << c.classifier.batch_size << '\n';
  out << "fc1=" << c.classifier.fc1_dim << '\n';
  out << "fc2=" << c.classifier.fc2_dim << '\n';
  out << "threshold=" << format_real(c.classifier.decision_threshold) << '\n';
  out << "learning-rate=" << format_real(c.classifier.adam.learning_rate) << '\n';
  out << "class=" << join_list(c.classes, [](const std::string& s) { return s; }) << '\n';
  out << "strategy="
      << join_list(c.strategies, [](TransferStrategy s) { return to_string(s); }) << '\n';
  out << "approach="
      << join_list(c.approaches, [](TrainApproach a) { return to_string(a); }) << '\n';
  write_text(path, out.str());
}

RunConfig read_config_snapshot(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  std::map<std::string, std::string> kv;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw DataError(path.string() + ": malformed line '" + line + "'");
    kv[line.substr(0, eq)] = line.substr(eq + 1);
  }
  RunConfig c;
  try {
    c.seed = std::stoull(kv.at("seed"));
    c.k = std::stoul(kv.at("folds"));
    c.dae.code_dim = std::stoul(kv.at("code-dim"));
    c.dae.corruption_rate = std::stod(kv.at("corruption"));
    c.dae.epochs = std::stoul(kv.at("epochs-dae"));
    c.classifier.epochs = std::stoul(kv.at("epochs-clf"));
    c.classifier.batch_size = std::stoul(kv.at("batch-size"));
    c.dae.batch_size = c.classifier.batch_size;
    c.classifier.fc1_dim = std::stoul(kv.at("fc1"));
    c.classifier.fc2_dim = std::stoul(kv.at("fc2"));
    c.classifier.decision_threshold = std::stod(kv.at("threshold"));
    c.classifier.adam.learning_rate = std::stod(kv.at("learning-rate"));
    c.dae.adam.learning_rate = c.classifier.adam.learning_rate;
    c.classes = split_list(kv.at("class"));
    c.strategies.clear();
    for (const auto& s : split_list(kv.at("strategy"))) c.strategies.push_back(parse_strategy(s));
    c.approaches.clear();
    for (const auto& a : split_list(kv.at("approach"))) c.approaches.push_back(parse_approach(a));
  } catch (const std::out_of_range& e) {
    throw DataError(path.string() + ": missing key (" + e.what() + ")");
  } catch (const std::invalid_argument& e) {
    throw DataError(path.string() + ": malformed value (" + e.what() + ")");
  }
  return c;
}

RngStream SeedPlan::split(const std::string& cls) const {
  return RngStream(master, 0).derive(fnv1a(cls)).derive(1);
}

RngStream SeedPlan::dae(const std::string& cls, std::size_t fold) const {
  return RngStream(master, 0).derive(fnv1a(cls)).derive(2).derive(fold);
}

RngStream SeedPlan::classifier(const std::string& cls, std::size_t fold,
                               TransferStrategy s) const {
  return RngStream(master, 0)
      .derive(fnv1a(cls))
      .derive(3)
      .derive(fold)
      .derive(s == TransferStrategy::EncoderOnly ? 0 : 1);
}

FoldData make_fold_data(const LabeledDataset& ds, const Fold& fold) {
  FoldData d;
  d.x_train = select_rows(ds.features, fold.train);
  d.x_val = select_rows(ds.features, fold.validation);
  for (std::size_t i : fold.train) d.y_train.push_back(ds.labels[i]);
  for (std::size_t i : fold.validation) d.y_val.push_back(ds.labels[i]);
  return d;
}

GridOutcome run_grid(const RunConfig& config_in, const LabeledDataset& dataset,
                     const fs::path& outdir) {
  RunConfig config = config_in;
  if (config.classes.empty()) config.classes = cohorts(dataset);
  config.dae.input_dim = dataset.features_count();
  config.dae.validate();
  config.classifier.validate();
  if (config.strategies.empty() || config.approaches.empty()) {
    throw ConfigError("run: no strategies or approaches selected");
  }

  std::vector<LabeledDataset> labeled;
  for (const std::string& cls : config.classes) labeled.push_back(relabel(dataset, cls));

  fs::create_directories(outdir / "folds");
  write_config_snapshot(outdir / "config.snapshot", config);

  const SeedPlan plan{config.seed};
  std::vector<FoldSplit> splits;
  for (std::size_t ci = 0; ci < config.classes.size(); ++ci) {
    RngStream split_rng = plan.split(config.classes[ci]);
    splits.push_back(stratified_kfold(labeled[ci].labels, config.k, split_rng));
    fs::create_directories(class_dir(outdir, config.classes[ci]));
    std::ostringstream split_csv;
    split_csv << "sampleIndex,sampleId,fold\n";
    std::vector<std::size_t> fold_of(dataset.samples());
    for (std::size_t f = 0; f < config.k; ++f) {
      for (std::size_t i : splits[ci].folds[f].validation) fold_of[i] = f + 1;
    }
    for (std::size_t i = 0; i < dataset.samples(); ++i) {
      split_csv << i << ',' << dataset.sample_ids[i] << ',' << fold_of[i] << '\n';
    }
    write_text(class_dir(outdir, config.classes[ci]) / "split.csv", split_csv.str());
  }

  struct Unit {
    std::size_t class_index;
    std::size_t fold;
  };
  std::vector<Unit> units;
  for (std::size_t ci = 0; ci < config.classes.size(); ++ci) {
    for (std::size_t f = 0; f < config.k; ++f) units.push_back({ci, f});
  }

  std::mutex error_mutex;
  std::vector<std::string> errors;
  std::vector<std::vector<bool>> cell_failed(config.classes.size(),
                                             std::vector<bool>(config.strategies.size() *
                                                               config.approaches.size()));
  auto record_failure = [&](std::size_t ci, std::size_t cell, const std::string& msg) {
    std::lock_guard lock(error_mutex);
    cell_failed[ci][cell] = true;
    errors.push_back(msg);
  };

  auto run_unit = [&](const Unit& u) {
    const std::string& cls = config.classes[u.class_index];
    const fs::path dir = fold_dir(outdir, cls, u.fold);
    fs::remove_all(dir);
    fs::create_directories(dir);
    const FoldData data = make_fold_data(labeled[u.class_index], splits[u.class_index].folds[u.fold]);
    const std::string where = cls + " fold " + std::to_string(u.fold + 1);

    TrainedDAE dae;
    try {
      RngStream dae_rng = plan.dae(cls, u.fold);
      RngStream init_rng = dae_rng.derive(0);
      RngStream train_rng = dae_rng.derive(1);
      dae = train_dae(build_dae(config.dae, init_rng), data.x_train, data.x_val, config.dae,
                      train_rng);
      save_dae(dir / "dae.daept", dir / "dae_history.csv", dae);
    } catch (const std::exception& e) {
      for (std::size_t cell = 0; cell < config.strategies.size() * config.approaches.size(); ++cell) {
        record_failure(u.class_index, cell, where + ": autoencoder: " + e.what());
      }
      write_text(dir / "error.txt", std::string("autoencoder: ") + e.what() + "\n");
      return;
    }

    std::size_t cell = 0;
    for (TransferStrategy s : config.strategies) {
      for (TrainApproach a : config.approaches) {
        const fs::path cdir = dir / cell_name(s, a);
        fs::create_directories(cdir);
        try {
          RngStream clf_rng = plan.classifier(cls, u.fold, s);
          RngStream init_rng = clf_rng.derive(0);
          RngStream train_rng = clf_rng.derive(1);
          Network net = assemble(dae, s, a, config.classifier, init_rng,
                                 dataset.features_count());
          const ClassifierRun run = train_classifier(std::move(net), data, config.classifier,
                                                     train_rng);
          write_metrics_csv(cdir / "metrics.csv", run.epochs);
          save_network(cdir / "best.daept", *run.best.snapshot,
                       {{"kind", "classifier"},
                        {"class", cls},
                        {"fold", std::to_string(u.fold + 1)},
                        {"strategy", to_string(s)},
                        {"approach", to_string(a)},
                        {"epoch", std::to_string(run.best.epoch)},
                        {"threshold", format_real(config.classifier.decision_threshold)}});
        } catch (const std::exception& e) {
          record_failure(u.class_index, cell, where + ": " + cell_name(s, a) + ": " + e.what());
          write_text(cdir / "error.txt", std::string(e.what()) + "\n");
        }
        ++cell;
      }
    }
  };

  const int jobs = std::max(1, config.jobs);
  if (jobs == 1) {
    for (const Unit& u : units) run_unit(u);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> workers;
    for (int w = 0; w < jobs; ++w) {
      workers.emplace_back([&] {
        kernels::set_thread_count(1);
        for (std::size_t i = next++; i < units.size(); i = next++) run_unit(units[i]);
      });
    }
    for (auto& t : workers) t.join();
  }

  GridOutcome outcome;
  outcome.cells = config.classes.size() * config.strategies.size() * config.approaches.size();
  for (const auto& per_class : cell_failed) {
    outcome.failed_cells += static_cast<std::size_t>(std::count(per_class.begin(), per_class.end(), true));
  }
  std::sort(errors.begin(), errors.end());
  outcome.errors = std::move(errors);

  write_report(outdir, render_report(outdir));
  return outcome;
}

RenderedReport render_report(const fs::path& run_dir) {
  const RunConfig config = read_config_snapshot(run_dir / "config.snapshot");
  RenderedReport report;

  std::ostringstream table, records, summary;
  table << "top_layers";
  for (TrainApproach a : config.approaches) {
    for (Metric m : kAllMetrics) table << '\t' << approach_letter(a) << '_' << to_string(m);
  }
  table << '\n';
  records << "class,strategy,approach,fold,epoch,loss,accuracy,precision,recall,f1\n";
  summary << "class,strategy,approach,metric,mean,sd,variance,folds\n";

  for (const std::string& cls : config.classes) {
    // Autoencoder curves.
    std::vector<std::vector<std::vector<double>>> dae_series(2);
    for (std::size_t f = 0; f < config.k; ++f) {
      const fs::path hist = fold_dir(run_dir, cls, f) / "dae_history.csv";
      if (!fs::exists(hist)) {
        report.missing.push_back(hist.lexically_relative(run_dir).string());
        continue;
      }
      std::vector<double> tr, va;
      for (const EpochHistory& h : read_dae_history(hist)) {
        tr.push_back(h.train_loss);
        va.push_back(h.val_loss);
      }
      dae_series[0].push_back(std::move(tr));
      dae_series[1].push_back(std::move(va));
    }
    if (!dae_series[0].empty()) {
      report.curves[cls + "_dae.csv"] = curve_csv({"train_loss", "val_loss"}, dae_series);
    }

    for (TransferStrategy s : config.strategies) {
      table << row_label(cls, s);
      for (TrainApproach a : config.approaches) {
        std::vector<MetricsRecord> fold_records;
        std::vector<std::vector<std::vector<double>>> series(3);
        for (std::size_t f = 0; f < config.k; ++f) {
          const fs::path metrics_path = fold_dir(run_dir, cls, f) / cell_name(s, a) / "metrics.csv";
          if (!fs::exists(metrics_path)) {
            report.missing.push_back(metrics_path.lexically_relative(run_dir).string());
            continue;
          }
          const std::vector<EpochCheckpoint> epochs = read_metrics_csv(metrics_path);
          if (epochs.empty()) {
            report.missing.push_back(metrics_path.lexically_relative(run_dir).string());
            continue;
          }
          const EpochCheckpoint& best = select_best(epochs);
          fold_records.push_back(best.validation);
          const MetricsRecord& r = best.validation;
          records << cls << ',' << to_string(s) << ',' << to_string(a) << ',' << (f + 1) << ','
                  << best.epoch << ',' << format_real(r.loss) << ',' << format_real(r.accuracy)
                  << ',' << format_real(r.precision) << ',' << format_real(r.recall) << ','
                  << format_real(r.f1) << '\n';
          std::vector<double> tr, va, vf1;
          for (const EpochCheckpoint& cp : epochs) {
            tr.push_back(cp.train.loss);
            va.push_back(cp.validation.loss);
            vf1.push_back(cp.validation.f1);
          }
          series[0].push_back(std::move(tr));
          series[1].push_back(std::move(va));
          series[2].push_back(std::move(vf1));
        }
        if (!series[0].empty()) {
          report.curves[cls + "_" + cell_name(s, a) + ".csv"] =
              curve_csv({"train_loss", "val_loss", "val_f1"}, series);
        }
        if (fold_records.size() == config.k) {
          const CVReport cv = aggregate(cls + "/" + cell_name(s, a), fold_records);
          for (Metric m : kAllMetrics) {
            table << '\t' << format_cell(m, cv.summary(m));
            const Summary& sm = cv.summary(m);
            summary << cls << ',' << to_string(s) << ',' << to_string(a) << ',' << to_string(m)
                    << ',' << format_real(sm.mean) << ',' << format_real(sm.sd) << ','
                    << format_real(sm.variance) << ',' << config.k << '\n';
          }
        } else {
          for (std::size_t i = 0; i < std::size(kAllMetrics); ++i) table << "\tMISSING";
        }
      }
      table << '\n';
    }
  }
  report.table = table.str();
  report.records_csv = records.str();
  report.summary_csv = summary.str();
  return report;
}

void write_report(const fs::path& run_dir, const RenderedReport& report) {
  fs::create_directories(run_dir / "curves");
  write_text(run_dir / "report.tsv", report.table);
  write_text(run_dir / "records.csv", report.records_csv);
  write_text(run_dir / "summary.csv", report.summary_csv);
  for (const auto& [name, content] : report.curves) write_text(run_dir / "curves" / name, content);
}

}  // namespace daept
