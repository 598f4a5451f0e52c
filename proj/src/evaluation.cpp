#include "daept/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>

#include "daept/error.hpp"

namespace daept {

FoldSplit stratified_kfold(std::span<const int> labels, std::size_t k, RngStream& rng) {
  if (k < 2) throw ConfigError("stratified_kfold: k must be >= 2");

  std::map<int, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < labels.size(); ++i) by_class[labels[i]].push_back(i);

  FoldSplit split{k, std::vector<Fold>(k)};
  std::uint64_t class_no = 0;
  for (auto& [label, indices] : by_class) {
    if (indices.size() < k) {
      throw ConfigError("stratified_kfold: class " + std::to_string(label) + " has " +
                        std::to_string(indices.size()) + " samples, fewer than k=" +
                        std::to_string(k));
    }
    RngStream class_rng = rng.derive(class_no++);
    shuffle(indices, class_rng);
    for (std::size_t i = 0; i < indices.size(); ++i) {
      split.folds[i % k].validation.push_back(indices[i]);
    }
  }

  std::vector<std::size_t> fold_of(labels.size());
  for (std::size_t f = 0; f < k; ++f) {
    std::sort(split.folds[f].validation.begin(), split.folds[f].validation.end());
    for (std::size_t i : split.folds[f].validation) fold_of[i] = f;
  }
  for (std::size_t i = 0; i < labels.size(); ++i) {
    for (std::size_t f = 0; f < k; ++f) {
      if (fold_of[i] != f) split.folds[f].train.push_back(i);
    }
  }
  return split;
}

Confusion confusion(std::span<const int> predicted, std::span<const int> truth) {
  if (predicted.size() != truth.size()) {
    throw ConfigError("confusion: " + std::to_string(predicted.size()) + " predictions for " +
                      std::to_string(truth.size()) + " labels");
  }
  Confusion c;
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    const int p = predicted[i];
    const int t = truth[i];
    if ((p != 0 && p != 1) || (t != 0 && t != 1)) throw ConfigError("confusion: label not in {0, 1}");
    if (p == 1 && t == 1) ++c.tp;
    else if (p == 1) ++c.fp;
    else if (t == 0) ++c.tn;
    else ++c.fn;
  }
  return c;
}

MetricsRecord metrics(const Confusion& c) {
  auto ratio = [](std::size_t num, std::size_t den) {
    return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
  };
  MetricsRecord r;
  r.accuracy = ratio(c.tp + c.tn, c.total());
  r.precision = ratio(c.tp, c.tp + c.fp);
  r.recall = ratio(c.tp, c.tp + c.fn);
  const double denom = r.precision + r.recall;
  r.f1 = denom == 0.0 ? 0.0 : 2.0 * r.precision * r.recall / denom;
  return r;
}

bool ranks_above(const EpochCheckpoint& a, const EpochCheckpoint& b) {
  if (a.validation.f1 != b.validation.f1) return a.validation.f1 > b.validation.f1;
  if (a.validation.loss != b.validation.loss) return a.validation.loss < b.validation.loss;
  return a.epoch < b.epoch;
}

const EpochCheckpoint& select_best(std::span<const EpochCheckpoint> checkpoints) {
  if (checkpoints.empty()) throw ConfigError("select_best: no checkpoints");
  const EpochCheckpoint* best = &checkpoints.front();
  for (const EpochCheckpoint& c : checkpoints.subspan(1)) {
    if (ranks_above(c, *best)) best = &c;
  }
  return *best;
}

std::string to_string(Metric m) {
  switch (m) {
    case Metric::Loss:
      return "loss";
    case Metric::Accuracy:
      return "accuracy";
    case Metric::Precision:
      return "precision";
    case Metric::Recall:
      return "recall";
    case Metric::F1:
      return "f1";
  }
  return "";
}

double get(const MetricsRecord& r, Metric m) {
  switch (m) {
    case Metric::Loss:
      return r.loss;
    case Metric::Accuracy:
      return r.accuracy;
    case Metric::Precision:
      return r.precision;
    case Metric::Recall:
      return r.recall;
    case Metric::F1:
      return r.f1;
  }
  return 0.0;
}

Summary summarize(std::span<const double> values) {
  if (values.empty()) throw ConfigError("summarize: no values");
  Summary s;
  for (double v : values) s.mean += v;
  s.mean /= static_cast<double>(values.size());
  if (values.size() > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - s.mean) * (v - s.mean);
    s.variance = ss / static_cast<double>(values.size() - 1);
    s.sd = std::sqrt(s.variance);
  }
  return s;
}

const Summary& CVReport::summary(Metric m) const {
  switch (m) {
    case Metric::Loss:
      return loss;
    case Metric::Accuracy:
      return accuracy;
    case Metric::Precision:
      return precision;
    case Metric::Recall:
      return recall;
    case Metric::F1:
      return f1;
  }
  return f1;
}

CVReport aggregate(std::string configuration, std::vector<MetricsRecord> folds) {
  CVReport report;
  report.configuration = std::move(configuration);
  report.folds = std::move(folds);
  auto column = [&](Metric m) {
    std::vector<double> v;
    for (const MetricsRecord& r : report.folds) v.push_back(get(r, m));
    return summarize(v);
  };
  report.loss = column(Metric::Loss);
  report.accuracy = column(Metric::Accuracy);
  report.precision = column(Metric::Precision);
  report.recall = column(Metric::Recall);
  report.f1 = column(Metric::F1);
  return report;
}

std::string format_cell(Metric m, const Summary& s) {
  char buf[64];
  if (m == Metric::Loss) {
    std::snprintf(buf, sizeof buf, "%.3f ± %.2f", s.mean, s.sd);
  } else {
    std::snprintf(buf, sizeof buf, "%.2f%% ± %.2f", 100.0 * s.mean, 100.0 * s.sd);
  }
  return buf;
}

}  // namespace daept
