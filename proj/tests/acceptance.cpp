// Acceptance suite: one PASS/FAIL line per criterion with its runtime.

#include <sys/wait.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <regex>
#include <sstream>
#include <string>
#include <vector>

#include "daept/classifier.hpp"
#include "daept/dae.hpp"
#include "daept/dataset.hpp"
#include "daept/evaluation.hpp"
#include "daept/experiment.hpp"
#include "daept/kernels.hpp"
#include "daept/serialize.hpp"
#include "daept/synth.hpp"
#include "oracles.hpp"

namespace fs = std::filesystem;
using namespace daept;

namespace {

const fs::path kWork = fs::path(DAEPT_TEST_WORKDIR) / "acceptance_work";

struct Outcome {
  bool pass = false;
  std::string detail;
};

int g_failures = 0;

void criterion(const std::string& name, double limit_s, const std::function<Outcome()>& body) {
  const auto t0 = std::chrono::steady_clock::now();
  Outcome o;
  try {
    o = body();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  bool pass = o.pass;
  std::string limit;
  if (limit_s > 0) {
    char buf[64];
    std::snprintf(buf, sizeof buf, ", limit %.0fs", limit_s);
    limit = buf;
    if (s >= limit_s) pass = false;
  }
  if (!pass) ++g_failures;
  std::printf("[%s] %s (%.2fs%s) %s\n", pass ? "PASS" : "FAIL", name.c_str(), s, limit.c_str(),
              o.detail.c_str());
  std::fflush(stdout);
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int cli(const std::string& args) {
  const std::string cmd = std::string("\"") + DAEPT_CLI + "\" " + args + " > \"" +
                          (kWork / "cli.log").string() + "\" 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

LabeledDataset desk_dataset(const DeskOptions& o) {
  return preprocess(generate(desk_spec(o)), o.names.front()).dataset;
}

// summary.csv -> (class, strategy, approach, metric) -> mean
std::map<std::string, double> summary_means(const fs::path& run_dir) {
  std::map<std::string, double> out;
  std::ifstream in(run_dir / "summary.csv");
  std::string line;
  std::getline(in, line);
  while (std::getline(in, line)) {
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) f.push_back(cell);
    if (f.size() < 5) continue;
    out[f[0] + "/" + f[1] + "/" + f[2] + "/" + f[3]] = std::stod(f[4]);
  }
  return out;
}

std::string fmt(const char* f, double v) {
  char buf[128];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

RunConfig grid_config(std::uint64_t seed) {
  RunConfig c;
  c.seed = seed;
  c.dae.epochs = 50;
  c.classifier.epochs = 100;
  c.k = 5;
  c.jobs = 1;
  return c;
}

// Harder desk spec: class-mean spread equal to the noise on three genes.
DeskOptions hard_options(std::uint64_t seed) {
  DeskOptions o;
  o.seed = seed;
  o.separation = 1.0;
  o.informative = 3;
  return o;
}

}  // namespace

int main() {
  fs::remove_all(kWork);
  fs::create_directories(kWork);
  kernels::set_thread_count(1);

  const DeskOptions desk;
  const LabeledDataset desk_ds = desk_dataset(desk);
  const fs::path grid_dir = kWork / "grid";

  criterion("report table from user-supplied cohort files", 0, [&] {
    // Cohort files in the published layout (row index column, sampleId, genes)
    // go through the command-line pipeline.
    const auto tables = generate(desk_spec(desk));
    fs::create_directories(kWork / "cohorts");
    for (const auto& t : tables) {
      std::ostringstream body;
      write_table(body, t, '\t', NumberFormat::FourDecimals);
      std::istringstream lines(body.str());
      std::ofstream out(kWork / "cohorts" / (t.cohort + ".tsv"));
      std::string line;
      for (long row = -1; std::getline(lines, line); ++row) {
        out << (row < 0 ? std::string() : std::to_string(row)) << '\t' << line << '\n';
      }
    }
    const std::string c = (kWork / "cohorts").string();
    if (cli("preprocess " + c + "/thyroid.tsv " + c + "/skin.tsv " + c + "/stomach.tsv --outdir " +
            (kWork / "cli_data").string()) != 0) {
      return Outcome{false, "preprocess failed: " + slurp(kWork / "cli.log")};
    }
    if (cli("run --data " + (kWork / "cli_data").string() + " --outdir " +
            (kWork / "cli_run").string() + " --epochs-dae 5 --epochs-clf 10") != 0) {
      return Outcome{false, "run failed: " + slurp(kWork / "cli.log")};
    }
    std::istringstream report(slurp(kWork / "cli_run/report.tsv"));
    std::string line;
    std::getline(report, line);
    const bool header_ok =
        line ==
        "top_layers\tA_loss\tA_accuracy\tA_precision\tA_recall\tA_f1\tB_loss\tB_accuracy\t"
        "B_precision\tB_recall\tB_f1";
    const std::regex loss_cell(R"(\d+\.\d{3} ± \d+\.\d{2})");
    const std::regex pct_cell(R"(\d+\.\d{2}% ± \d+\.\d{2})");
    const std::vector<std::string> rows{"thyroid: Encoding Layers", "thyroid: Complete AE",
                                        "skin: Encoding Layers",    "skin: Complete AE",
                                        "stomach: Encoding Layers", "stomach: Complete AE"};
    std::size_t good = 0;
    for (const std::string& label : rows) {
      if (!std::getline(report, line)) break;
      std::vector<std::string> f;
      std::stringstream ss(line);
      std::string cell;
      while (std::getline(ss, cell, '\t')) f.push_back(cell);
      bool ok = f.size() == 11 && f[0] == label;
      for (std::size_t i = 1; ok && i < 11; ++i) {
        ok = std::regex_match(f[i], (i == 1 || i == 6) ? loss_cell : pct_cell);
      }
      good += ok;
    }
    return Outcome{header_ok && good == 6,
                   std::to_string(good) + "/6 rows with 10 mean ± sd cells" +
                       (header_ok ? "" : ", bad header")};
  });

  criterion("preprocessing conservation", 5, [&] {
    RngStream rng(2024, 0);
    std::vector<std::vector<std::size_t>> cases{{509, 472, 415}};
    for (int i = 0; i < 9; ++i) cases.push_back({5 + rng.below(300), 5 + rng.below(300), 5 + rng.below(300)});
    std::string detail;
    bool ok = true;
    for (const auto& sizes : cases) {
      SynthSpec spec;
      spec.features = 20;
      spec.missing_rate = 0.05;
      spec.constant_columns = 3;
      spec.omitted_per_cohort = 2;
      spec.seed = rng.next_u64();
      for (std::size_t c = 0; c < 3; ++c) {
        spec.cohorts.push_back({"c" + std::to_string(c), sizes[c], std::vector<double>(20, double(c))});
      }
      const PreprocessResult p = preprocess(generate(spec), "c0");
      const std::size_t expected = sizes[0] + sizes[1] + sizes[2];
      ok = ok && p.dataset.samples() == expected && p.dataset.features_count() == 20;
      if (detail.empty()) {
        detail = std::to_string(sizes[0]) + "+" + std::to_string(sizes[1]) + "+" +
                 std::to_string(sizes[2]) + "=" + std::to_string(p.dataset.samples());
      }
    }
    return Outcome{ok, detail + ", 10 cohort triples"};
  });

  criterion("gradient oracle on 50 random networks", 60, [&] {
    RngStream rng(77, 0);
    double worst = 0;
    std::size_t checked = 0, regenerated = 0;
    bool ok = true;
    for (int n = 0; n < 50; ++n) {
      for (;;) {
        const std::size_t in = 2 + rng.below(5);
        const Network net = oracle::random_network(rng, in);
        const Matrix x = rand_normal(rng, 5 + rng.below(6), in, 0, 1);
        const Matrix w = rand_normal(rng, x.rows(), net.output_dim(), 0, 1);
        const oracle::GradCheck g = oracle::check_gradients(net, x, rng.derive(n), w);
        // Keep away from ReLU kinks and near-zero batch variance, where a
        // finite difference is not a derivative estimate.
        if (g.relu_margin < 1e-3 || g.bn_min_var < 1e-2) {
          ++regenerated;
          continue;
        }
        ok = ok && g.shapes_ok && g.frozen_ok;
        worst = std::max(worst, g.max_rel);
        checked += g.checked;
        break;
      }
    }
    return Outcome{ok && worst < 1e-4, "max rel err " + fmt("%.2e", worst) + " over " +
                                           std::to_string(checked) + " parameters (" +
                                           std::to_string(regenerated) + " redrawn)"};
  });

  criterion("metric oracle on 1000 random vectors", 5, [&] {
    RngStream rng(3, 0);
    std::size_t mismatches = 0;
    for (int i = 0; i < 1000; ++i) {
      const std::size_t n = 1 + rng.below(500);
      const double rate = rng.uniform(), base = rng.uniform();
      std::vector<int> p(n), t(n);
      for (std::size_t j = 0; j < n; ++j) {
        p[j] = rng.uniform() < rate;
        t[j] = rng.uniform() < base;
      }
      const MetricsRecord m = metrics(confusion(p, t));
      const oracle::Counts o = oracle::brute_force_metrics(p, t);
      mismatches += !(m.accuracy == o.accuracy && m.precision == o.precision &&
                      m.recall == o.recall && m.f1 == o.f1);
    }
    return Outcome{mismatches == 0, std::to_string(mismatches) + " mismatches"};
  });

  criterion("stratification over 200 label vectors", 5, [&] {
    RngStream rng(4, 0);
    const std::size_t k = 5;
    double worst = 0;
    for (int i = 0; i < 200; ++i) {
      const std::size_t pos = k + rng.below(200), neg = k + rng.below(200);
      std::vector<int> y(pos + neg, 0);
      const std::vector<std::size_t> order = permutation(pos + neg, rng);
      for (std::size_t j = 0; j < pos; ++j) y[order[j]] = 1;
      RngStream split = rng.derive(std::uint64_t(i));
      const FoldSplit s = stratified_kfold(y, k, split);
      for (const Fold& f : s.folds) {
        std::size_t p = 0;
        for (std::size_t idx : f.validation) p += std::size_t(y[idx]);
        const std::size_t q = f.validation.size() - p;
        worst = std::max(worst, std::fabs(double(p) - double(pos) / double(k)));
        worst = std::max(worst, std::fabs(double(q) - double(neg) / double(k)));
      }
    }
    return Outcome{worst < 1.0, "max per-class deviation " + fmt("%.3f", worst)};
  });

  const std::string first_class = desk.names.front();
  const SeedPlan plan{42};
  RngStream split_rng = plan.split(first_class);
  const FoldSplit desk_split = stratified_kfold(desk_ds.labels, 5, split_rng);
  const FoldData fold1 = make_fold_data(desk_ds, desk_split.folds[0]);

  criterion("imported weights untouched under fixed weights", 30, [&] {
    DAEConfig dc;
    dc.input_dim = desk_ds.features_count();
    dc.epochs = 10;
    RngStream dae_rng(11, 0);
    RngStream dae_init = dae_rng.derive(0), dae_train = dae_rng.derive(1);
    const TrainedDAE dae = train_dae(build_dae(dc, dae_init), fold1.x_train, fold1.x_val, dc, dae_train);
    ClassifierConfig cc;
    cc.epochs = 50;
    std::size_t checks = 0, bad = 0;
    for (TransferStrategy s : {TransferStrategy::EncoderOnly, TransferStrategy::CompleteAE}) {
      RngStream init(12, 0), train(12, 1);
      const Network start = assemble(dae, s, TrainApproach::FixedWeights, cc, init, desk_ds.features_count());
      const std::size_t imported = imported_layer_count(s);
      auto compare = [&](const Network& n) {
        for (std::size_t i = 0; i < imported; ++i) {
          const auto pa = start.layer(i).parameters();
          const auto pb = n.layer(i).parameters();
          for (std::size_t k = 0; k < pa.size(); ++k) {
            ++checks;
            if (pa[k]->size() != pb[k]->size() ||
                std::memcmp(pa[k]->values().data(), pb[k]->values().data(),
                            pa[k]->size() * sizeof(double)) != 0) {
              ++bad;
            }
          }
        }
      };
      const ClassifierRun run = train_classifier(start, fold1, cc, train,
                                                 [&](const EpochCheckpoint&, const Network& n) { compare(n); });
      compare(*run.best.snapshot);
    }
    return Outcome{bad == 0 && checks > 0,
                   std::to_string(checks) + " parameter comparisons, " + std::to_string(bad) + " differ"};
  });

  criterion("autoencoder reconstruction improves and validation loss is reproducible", 60, [&] {
    DAEConfig dc;
    dc.input_dim = desk_ds.features_count();
    RngStream dae_rng = plan.dae(first_class, 0);
    RngStream dae_init = dae_rng.derive(0), dae_train = dae_rng.derive(1);
    std::size_t recomputed = 0;
    long double worst_rel = 0;
    std::vector<long double> oracle_val;
    bool repeat_ok = true;
    const TrainedDAE dae = train_dae(
        build_dae(dc, dae_init), fold1.x_train, fold1.x_val, dc, dae_train,
        [&](std::size_t, const Network& n) {
          // Independent evaluation: relu(x W1 + b1) W2 + b2 in long double.
          const Dense& enc = std::get<Dense>(n.layer(1).kind);
          const Dense& dec = std::get<Dense>(n.layer(2).kind);
          const Matrix& x = fold1.x_val;
          const std::size_t d = x.cols(), h = enc.bias.cols();
          long double sum = 0;
          std::vector<long double> code(h);
          for (std::size_t r = 0; r < x.rows(); ++r) {
            for (std::size_t j = 0; j < h; ++j) {
              long double a = enc.bias(0, j);
              for (std::size_t i = 0; i < d; ++i) a += (long double)x(r, i) * enc.weights(i, j);
              code[j] = a > 0 ? a : 0;
            }
            for (std::size_t j = 0; j < d; ++j) {
              long double a = dec.bias(0, j);
              for (std::size_t i = 0; i < h; ++i) a += code[i] * dec.weights(i, j);
              sum += (a - x(r, j)) * (a - x(r, j));
            }
          }
          oracle_val.push_back(sum / (long double)(x.rows() * d));
          repeat_ok = repeat_ok && infer(n, x) == infer(n, x);
        });
    for (std::size_t e = 0; e < dae.history.size(); ++e) {
      const long double rel = std::fabs(oracle_val[e] - dae.history[e].val_loss) / oracle_val[e];
      worst_rel = std::max(worst_rel, rel);
      ++recomputed;
    }
    const double first = dae.history.front().train_loss, last = dae.history.back().train_loss;
    const bool ok = dae.history.size() == 100 && last <= 0.5 * first && repeat_ok && worst_rel < 1e-10;
    return Outcome{ok, "train mse " + fmt("%.4f", first) + " -> " + fmt("%.4f", last) +
                           ", validation oracle max rel err " + fmt("%.1e", double(worst_rel)) +
                           " over " + std::to_string(recomputed) + " epochs"};
  });

  std::map<std::string, double> grid_means;
  criterion("fine-tuned classifiers on separable cohorts", 600, [&] {
    const GridOutcome grid = run_grid(grid_config(42), desk_ds, grid_dir);
    if (grid.failed_cells != 0) return Outcome{false, grid.errors.front()};
    grid_means = summary_means(grid_dir);
    double worst_cell = 1, worst_oracle = 1;
    for (const std::string& cls : desk.names) {
      for (TransferStrategy s : {TransferStrategy::EncoderOnly, TransferStrategy::CompleteAE}) {
        const std::string key = cls + "/" + to_string(s) + "/" + to_string(TrainApproach::FineTune) +
                                "/" + to_string(Metric::F1);
        if (!grid_means.count(key)) return Outcome{false, "summary lacks " + key};
        worst_cell = std::min(worst_cell, grid_means[key]);
      }
      const LabeledDataset ds = relabel(desk_ds, cls);
      RngStream srng = plan.split(cls);
      const FoldSplit split = stratified_kfold(ds.labels, 5, srng);
      double mean = 0;
      for (const Fold& f : split.folds) {
        const FoldData d = make_fold_data(ds, f);
        mean += oracle::f1_of(oracle::logistic_regression(d.x_train, d.y_train, d.x_val), d.y_val) / 5;
      }
      worst_oracle = std::min(worst_oracle, mean);
    }
    return Outcome{worst_cell >= 0.95 && worst_oracle >= 0.99,
                   "lowest fine-tune mean F1 " + fmt("%.4f", worst_cell) + ", logistic oracle " +
                       fmt("%.4f", worst_oracle)};
  });

  criterion("fine-tuning does not trail fixed weights on overlapping cohorts", 0, [&] {
    std::size_t wins = 0, total = 0;
    std::string detail;
    for (std::uint64_t seed : {1, 2, 3}) {
      const DeskOptions o = hard_options(seed);
      const fs::path dir = kWork / ("hard" + std::to_string(seed));
      const GridOutcome g = run_grid(grid_config(seed), desk_dataset(o), dir);
      if (g.failed_cells != 0) return Outcome{false, g.errors.front()};
      auto means = summary_means(dir);
      std::size_t seed_wins = 0;
      for (const std::string& cls : o.names) {
        for (TransferStrategy s : {TransferStrategy::EncoderOnly, TransferStrategy::CompleteAE}) {
          const std::string base = cls + "/" + to_string(s) + "/";
          const double a = means.at(base + to_string(TrainApproach::FixedWeights) + "/" + to_string(Metric::F1));
          const double b = means.at(base + to_string(TrainApproach::FineTune) + "/" + to_string(Metric::F1));
          seed_wins += b >= a;
          ++total;
        }
      }
      wins += seed_wins;
      detail += (detail.empty() ? "" : ", ") + std::string("seed ") + std::to_string(seed) + ": " +
                std::to_string(seed_wins) + "/6";
    }
    return Outcome{wins >= 15, std::to_string(wins) + "/" + std::to_string(total) + " (" + detail + ")"};
  });

  criterion("same seed gives an identical report across job counts", 0, [&] {
    const std::string data = (kWork / "cli_data").string();
    const std::string flags = " --seed 9 --epochs-dae 5 --epochs-clf 10 --folds 3";
    if (cli("run --data " + data + " --outdir " + (kWork / "det1").string() + flags + " --jobs 1") != 0 ||
        cli("run --data " + data + " --outdir " + (kWork / "det3").string() + flags + " --jobs 3") != 0) {
      return Outcome{false, "run failed: " + slurp(kWork / "cli.log")};
    }
    const std::string a = slurp(kWork / "det1/report.tsv"), b = slurp(kWork / "det3/report.tsv");
    const bool same_summary = slurp(kWork / "det1/summary.csv") == slurp(kWork / "det3/summary.csv");
    return Outcome{!a.empty() && a == b && same_summary,
                   std::to_string(a.size()) + " bytes, jobs 1 vs jobs 3"};
  });

  criterion("artifact round trips", 0, [&] {
    // Every saved best model reproduces its recorded validation metrics.
    std::size_t models = 0, mismatched = 0;
    for (const std::string& cls : desk.names) {
      const LabeledDataset ds = relabel(desk_ds, cls);
      RngStream srng = plan.split(cls);
      const FoldSplit split = stratified_kfold(ds.labels, 5, srng);
      for (std::size_t f = 0; f < 5; ++f) {
        const FoldData d = make_fold_data(ds, split.folds[f]);
        for (TransferStrategy s : {TransferStrategy::EncoderOnly, TransferStrategy::CompleteAE}) {
          for (TrainApproach a : {TrainApproach::FixedWeights, TrainApproach::FineTune}) {
            const fs::path cdir = grid_dir / "folds" / cls / ("fold" + std::to_string(f + 1)) / cell_name(s, a);
            const NetworkFile nf = load_network(cdir / "best.daept");
            const auto rows = read_metrics_csv(cdir / "metrics.csv");
            const std::size_t epoch = std::stoul(nf.meta.at("epoch"));
            const MetricsRecord m = evaluate(nf.network, d.x_val, d.y_val, std::stod(nf.meta.at("threshold")));
            ++models;
            mismatched += !(epoch >= 1 && epoch <= rows.size() && rows[epoch - 1].validation == m);
          }
        }
      }
    }
    // Dataset directory and table text round trips.
    save_dataset(kWork / "roundtrip", desk_ds);
    const LabeledDataset back = load_dataset(kWork / "roundtrip");
    const bool dataset_ok =
        back.features.rows() == desk_ds.features.rows() && back.features.cols() == desk_ds.features.cols() &&
        std::memcmp(back.features.values().data(), desk_ds.features.values().data(),
                    desk_ds.features.size() * sizeof(double)) == 0 &&
        back.labels == desk_ds.labels && back.sample_ids == desk_ds.sample_ids &&
        back.gene_names == desk_ds.gene_names && back.provenance == desk_ds.provenance;
    const ExpressionTable t = generate(desk_spec(desk)).front();
    std::ostringstream first;
    write_table(first, t);
    std::istringstream in(first.str());
    const ExpressionTable parsed = parse_table(in, t.cohort);
    std::ostringstream second;
    write_table(second, parsed);
    const bool table_ok = parsed == t && first.str() == second.str();
    return Outcome{models == 60 && mismatched == 0 && dataset_ok && table_ok,
                   std::to_string(models - mismatched) + "/" + std::to_string(models) +
                       " models reproduce their metrics, dataset " + (dataset_ok ? "exact" : "differs") +
                       ", table " + (table_ok ? "exact" : "differs")};
  });

  return g_failures == 0 ? 0 : 1;
}
