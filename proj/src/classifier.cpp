#include "daept/classifier.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "daept/error.hpp"
#include "daept/loss.hpp"
#include "daept/serialize.hpp"
#include "daept/training.hpp"

namespace daept {

std::string to_string(TrainApproach a) {
  return a == TrainApproach::FixedWeights ? "fixed" : "finetune";
}

TrainApproach parse_approach(const std::string& s) {
  if (s == "fixed") return TrainApproach::FixedWeights;
  if (s == "finetune") return TrainApproach::FineTune;
  throw ConfigError("unknown training approach '" + s + "' (fixed|finetune)");
}

void ClassifierConfig::validate() const {
  if (fc1_dim == 0 || fc2_dim == 0) throw ConfigError("classifier: layer widths must be >= 1");
  if (epochs == 0) throw ConfigError("classifier: epochs must be >= 1");
  if (batch_size == 0) throw ConfigError("classifier: batch size must be >= 1");
  if (!(decision_threshold > 0.0 && decision_threshold < 1.0)) {
    throw ConfigError("classifier: decision threshold must be in (0, 1)");
  }
}

std::size_t imported_layer_count(TransferStrategy strategy) {
  return strategy == TransferStrategy::EncoderOnly ? 1 : 2;
}

Network assemble(const TrainedDAE& dae, TransferStrategy strategy, TrainApproach approach,
                 const ClassifierConfig& config, RngStream& rng, std::size_t feature_dim) {
  config.validate();
  if (dae.config.input_dim != feature_dim || dae.encoder.weights.rows() != feature_dim) {
    throw ConfigError("assemble: autoencoder expects " +
                      std::to_string(dae.encoder.weights.rows()) +
                      " features, dataset has " + std::to_string(feature_dim));
  }
  std::vector<Layer> layers = export_layers(dae, strategy);
  for (Layer& l : layers) l.trainable = approach == TrainApproach::FineTune;

  const std::size_t width = layers.back().out_dim();
  RngStream fc1_rng = rng.derive(0);
  RngStream fc2_rng = rng.derive(1);
  RngStream out_rng = rng.derive(2);
  layers.push_back(make_batchnorm(width, config.batchnorm_epsilon, config.batchnorm_momentum));
  layers.push_back(make_dense(width, config.fc1_dim, Activation::ReLU, fc1_rng));
  layers.push_back(make_dense(config.fc1_dim, config.fc2_dim, Activation::ReLU, fc2_rng));
  layers.push_back(make_dense(config.fc2_dim, 1, Activation::Sigmoid, out_rng));
  return Network(feature_dim, std::move(layers));
}

Matrix label_column(std::span<const int> labels) {
  Matrix m(labels.size(), 1);
  for (std::size_t i = 0; i < labels.size(); ++i) m(i, 0) = labels[i];
  return m;
}

Matrix predict(const Network& net, const Matrix& x) {
  if (net.output_dim() != 1) throw ConfigError("predict: network must end in one unit");
  Matrix p = infer(net, x);
  for (double& v : p.values()) v = std::clamp(v, kBceClamp, 1.0 - kBceClamp);
  return p;
}

std::vector<int> classify(const Matrix& probabilities, double threshold) {
  std::vector<int> labels(probabilities.size());
  auto pv = probabilities.values();
  for (std::size_t i = 0; i < pv.size(); ++i) labels[i] = pv[i] >= threshold ? 1 : 0;
  return labels;
}

MetricsRecord evaluate(const Network& net, const Matrix& x, std::span<const int> labels,
                       double threshold) {
  if (x.rows() != labels.size()) throw ConfigError("evaluate: label count mismatch");
  const Matrix p = predict(net, x);
  MetricsRecord r = metrics(confusion(classify(p, threshold), labels));
  r.loss = loss_value(LossKind::BinaryCrossEntropy, p, label_column(labels));
  return r;
}

ClassifierRun train_classifier(Network net, const FoldData& data,
                               const ClassifierConfig& config, RngStream& rng,
                               const ClassifierEpochHook& on_epoch) {
  config.validate();
  if (data.x_train.rows() != data.y_train.size() || data.x_val.rows() != data.y_val.size()) {
    throw ConfigError("train_classifier: feature/label row counts differ");
  }
  const auto positives = std::count(data.y_train.begin(), data.y_train.end(), 1);
  for (int y : data.y_train) {
    if (y != 0 && y != 1) throw ConfigError("train_classifier: labels must be 0 or 1");
  }
  if (positives == 0 || positives == static_cast<long>(data.y_train.size())) {
    throw TrainingError("train_classifier: training fold contains a single class");
  }

  const Matrix targets = label_column(data.y_train);
  AdamState adam(config.adam);
  ClassifierRun run;
  run.epochs.reserve(config.epochs);

  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    train_epoch(net, adam, data.x_train, targets, LossKind::BinaryCrossEntropy,
                config.batch_size, rng.derive(epoch), epoch);
    EpochCheckpoint cp;
    cp.epoch = epoch + 1;
    cp.train = evaluate(net, data.x_train, data.y_train, config.decision_threshold);
    cp.validation = evaluate(net, data.x_val, data.y_val, config.decision_threshold);
    if (on_epoch) on_epoch(cp, net);
    if (epoch == 0 || ranks_above(cp, run.best)) {
      run.best = cp;
      run.best.snapshot = net;
    }
    run.epochs.push_back(std::move(cp));
  }
  return run;
}

void write_metrics_csv(const std::filesystem::path& path,
                       std::span<const EpochCheckpoint> epochs) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out << "epoch,split,loss,accuracy,precision,recall,f1\n";
  auto row = [&](std::size_t epoch, const char* split, const MetricsRecord& r) {
    out << epoch << ',' << split << ',' << format_real(r.loss) << ','
        << format_real(r.accuracy) << ',' << format_real(r.precision) << ','
        << format_real(r.recall) << ',' << format_real(r.f1) << '\n';
  };
  for (const EpochCheckpoint& cp : epochs) {
    row(cp.epoch, "train", cp.train);
    row(cp.epoch, "validation", cp.validation);
  }
}

std::vector<EpochCheckpoint> read_metrics_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  std::string line;
  std::getline(in, line);
  if (line != "epoch,split,loss,accuracy,precision,recall,f1") {
    throw DataError(path.string() + ": bad header");
  }
  std::map<std::size_t, EpochCheckpoint> by_epoch;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::istringstream row(line);
    std::string cell;
    while (std::getline(row, cell, ',')) cells.push_back(cell);
    if (cells.size() != 7) {
      throw DataError(path.string() + ":" + std::to_string(line_no) + ": expected 7 fields");
    }
    try {
      const std::size_t epoch = std::stoul(cells[0]);
      MetricsRecord r{std::stod(cells[2]), std::stod(cells[3]), std::stod(cells[4]),
                      std::stod(cells[5]), std::stod(cells[6])};
      EpochCheckpoint& cp = by_epoch[epoch];
      cp.epoch = epoch;
      if (cells[1] == "train") {
        cp.train = r;
      } else if (cells[1] == "validation") {
        cp.validation = r;
      } else {
        throw DataError("unknown split '" + cells[1] + "'");
      }
    } catch (const std::exception& e) {
      throw DataError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  std::vector<EpochCheckpoint> out;
  for (auto& [epoch, cp] : by_epoch) out.push_back(std::move(cp));
  return out;
}

}  // namespace daept
