#include "passlab/validation.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

#include <fmt/format.h>

#include "passlab/errors.hpp"
#include "passlab/rng.hpp"

namespace passlab {

namespace {

ClassMetrics class_metrics(std::size_t tp, std::size_t fp, std::size_t fn) {
  ClassMetrics m;
  m.support = tp + fn;
  m.precision = tp + fp > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fp) : 0.0;
  m.recall = tp + fn > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fn) : 0.0;
  m.f1 = m.precision + m.recall > 0.0 ? 2.0 * m.precision * m.recall / (m.precision + m.recall) : 0.0;
  return m;
}

}  // namespace

MetricsReport classification_metrics(std::span<const int> labels, std::span<const double> probabilities,
                                     double threshold) {
  if (labels.empty()) throw std::invalid_argument("classification_metrics: empty input");
  if (labels.size() != probabilities.size()) throw std::invalid_argument("classification_metrics: length mismatch");
  MetricsReport r;
  r.threshold = threshold;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] != 0 && labels[i] != 1) throw std::invalid_argument("classification_metrics: labels must be 0/1");
    const bool predicted = probabilities[i] >= threshold;
    if (labels[i] == 1) {
      predicted ? ++r.tp : ++r.fn;
    } else {
      predicted ? ++r.fp : ++r.tn;
    }
  }
  r.accuracy = static_cast<double>(r.tp + r.tn) / static_cast<double>(r.total());
  r.positive = class_metrics(r.tp, r.fp, r.fn);
  r.negative = class_metrics(r.tn, r.fn, r.fp);
  r.macro.precision = (r.positive.precision + r.negative.precision) / 2.0;
  r.macro.recall = (r.positive.recall + r.negative.recall) / 2.0;
  r.macro.f1 = (r.positive.f1 + r.negative.f1) / 2.0;
  r.macro.support = r.total();
  return r;
}

std::string format_metrics_table(std::span<const MetricsRow> rows, MetricAveraging averaging) {
  std::string out = fmt::format("{:<6}{:>10}{:>11}{:>8}{:>10}\n", "", "Accuracy", "Precision", "Recall", "F1 Score");
  for (const auto& row : rows) {
    const ClassMetrics& c = averaging == MetricAveraging::positive   ? row.report.positive
                            : averaging == MetricAveraging::negative ? row.report.negative
                                                                     : row.report.macro;
    out += fmt::format("{:<6}{:>10.3f}{:>11.2f}{:>8.2f}{:>10.2f}\n", row.label, row.report.accuracy, c.precision,
                       c.recall, c.f1);
  }
  return out;
}

std::vector<int> stratified_folds(std::span<const int> labels, int k, std::uint64_t seed) {
  if (k < 2) throw std::invalid_argument("stratified_folds: k must be >= 2");
  std::array<std::vector<std::size_t>, 2> by_class;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] != 0 && labels[i] != 1) throw std::invalid_argument("stratified_folds: labels must be 0/1");
    by_class[labels[i]].push_back(i);
  }
  for (const auto& members : by_class) {
    if (members.size() < 2) {
      throw std::invalid_argument("stratified_folds: each class needs at least 2 rows so every training fold sees it");
    }
  }
  Rng rng(seed);
  std::vector<int> fold(labels.size(), 0);
  // The second class continues the deal where the first stopped, which
  // keeps fold sizes within one row of each other overall.
  std::size_t dealt = 0;
  for (auto& members : by_class) {
    rng.shuffle(members);
    for (std::size_t idx : members) fold[idx] = static_cast<int>(dealt++ % static_cast<std::size_t>(k));
  }
  return fold;
}

DenseMatrix to_matrix(const FeatureTable& table) {
  DenseMatrix x(table.rows.size(), table.width());
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    std::copy(table.rows[i].values.begin(), table.rows[i].values.end(), x.row(i).begin());
  }
  return x;
}

GbdtModel train_on_table(const FeatureTable& table, const ColumnMedians& medians, const GbdtHyperParams& hp,
                         TrainingTrace* trace) {
  FeatureTable imputed = table;
  apply_imputation(imputed, medians);
  const auto y = imputed.labels();
  GbdtModel model = train_gbdt(to_matrix(imputed), y, hp, imputed.columns, trace);
  model.medians = medians.values;
  return model;
}

namespace {

struct FoldData {
  FeatureTable train;
  FeatureTable valid;
  std::vector<std::size_t> valid_rows;  // indices into the full table
};

FeatureTable subset(const FeatureTable& table, const std::vector<std::size_t>& rows) {
  FeatureTable out;
  out.columns = table.columns;
  for (auto r : rows) out.rows.push_back(table.rows[r]);
  return out;
}

}  // namespace

GridSearchResult grid_search_cv(const FeatureTable& table, std::span<const GbdtHyperParams> grid, int k,
                                std::uint64_t seed, double threshold) {
  if (grid.empty()) throw std::invalid_argument("grid_search_cv: empty grid");
  if (k < 2) throw std::invalid_argument("grid_search_cv: k must be >= 2");
  const auto labels = table.labels();
  std::vector<int> fold;
  try {
    fold = stratified_folds(labels, k, seed);
  } catch (const std::invalid_argument& e) {
    throw DataError(std::string("grid_search_cv: ") + e.what());
  }

  // Fold tables do not depend on the hyperparameters; impute once.
  std::vector<FoldData> folds(static_cast<std::size_t>(k));
  for (int f = 0; f < k; ++f) {
    std::vector<std::size_t> train_rows, valid_rows;
    for (std::size_t i = 0; i < labels.size(); ++i) (fold[i] == f ? valid_rows : train_rows).push_back(i);
    FoldData& fd = folds[static_cast<std::size_t>(f)];
    fd.train = subset(table, train_rows);
    fd.valid = subset(table, valid_rows);
    fd.valid_rows = valid_rows;
    const ColumnMedians med = compute_medians(fd.train);
    apply_imputation(fd.train, med);
    apply_imputation(fd.valid, med);
  }

  GridSearchResult out;
  for (const auto& hp : grid) {
    CvResult cv;
    cv.hyper = hp;
    std::vector<double> pooled(labels.size(), 0.0);
    for (const auto& fd : folds) {
      const auto ytrain = fd.train.labels();
      const GbdtModel model = train_gbdt(to_matrix(fd.train), ytrain, hp, fd.train.columns);
      std::vector<double> probs;
      for (const auto& row : fd.valid.rows) probs.push_back(sigmoid(model.margin(row.values)));
      const auto yvalid = fd.valid.labels();
      cv.fold_accuracy.push_back(classification_metrics(yvalid, probs, threshold).accuracy);
      for (std::size_t i = 0; i < probs.size(); ++i) pooled[fd.valid_rows[i]] = probs[i];
    }
    cv.mean_accuracy = std::accumulate(cv.fold_accuracy.begin(), cv.fold_accuracy.end(), 0.0) / k;
    cv.pooled = classification_metrics(labels, pooled, threshold);
    out.results.push_back(std::move(cv));
  }
  for (std::size_t i = 1; i < out.results.size(); ++i) {
    if (out.results[i].mean_accuracy > out.results[out.best_index].mean_accuracy) out.best_index = i;
  }
  out.best = out.results[out.best_index].hyper;
  return out;
}

std::vector<GbdtHyperParams> HyperGrid::expand() const {
  std::vector<GbdtHyperParams> out;
  for (int depth : max_depth) {
    for (double lr : learning_rate) {
      for (int trees : n_trees) {
        for (double mcw : min_child_weight) {
          for (double lambda : l2_lambda) {
            for (double g : gamma) {
              for (double ss : subsample) {
                GbdtHyperParams hp{trees, depth, lr, mcw, lambda, g, ss, seed};
                hp.validate();
                out.push_back(hp);
              }
            }
          }
        }
      }
    }
  }
  if (out.empty()) throw std::invalid_argument("hyperparameter grid is empty");
  return out;
}

double reference_ranking_accuracy(RankingVariable v) {
  switch (v) {
    case RankingVariable::fast_space_vel: return 0.512;
    case RankingVariable::dist_ball: return 0.559;
    case RankingVariable::time_to_player: return 0.538;
    case RankingVariable::time_to_passline: return 0.521;
  }
  return 0.0;
}

RankingReport compare_ranking_variables(std::span<const PassCandidates> passes, int n,
                                        std::span<const GbdtHyperParams> grid, int k, std::uint64_t seed) {
  RankingReport report;
  report.n = n;
  for (auto v : kRankingVariables) {
    RankingRow row;
    row.variable = v;
    row.reference = reference_ranking_accuracy(v);
    const Dataset first = build_dataset(passes, n, v, InfRanking::first);
    const auto gs = grid_search_cv(first.table, grid, k, seed);
    row.accuracy = gs.results[gs.best_index].mean_accuracy;
    row.best = gs.best;
    if (v == RankingVariable::time_to_player || v == RankingVariable::time_to_passline) {
      const Dataset last = build_dataset(passes, n, v, InfRanking::last);
      const auto gs_last = grid_search_cv(last.table, grid, k, seed);
      row.accuracy_inf_last = gs_last.results[gs_last.best_index].mean_accuracy;
    } else {
      row.accuracy_inf_last = row.accuracy;  // no infinite values to place
    }
    report.rows.push_back(row);
  }
  for (std::size_t i = 1; i < report.rows.size(); ++i) {
    if (report.rows[i].accuracy > report.rows[report.best_row].accuracy) report.best_row = i;
  }
  return report;
}

RankingReport compare_ranking_variables(std::span<const Match> matches, int n, const FeatureParams& params,
                                        std::span<const GbdtHyperParams> grid, int k, std::uint64_t seed) {
  const auto passes = extract_candidates(matches, params);
  return compare_ranking_variables(passes, n, grid, k, seed);
}

std::string RankingReport::format() const {
  std::string out = fmt::format("top-{} candidates by ranking variable (mean CV accuracy)\n", n);
  out += fmt::format("{:<18}{:>10}{:>14}{:>11}\n", "ranking_variable", "accuracy", "acc_inf_last", "reference");
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& r = rows[i];
    out += fmt::format("{:<18}{:>10.3f}{:>14.3f}{:>11.3f}{}\n", to_string(r.variable), r.accuracy,
                       r.accuracy_inf_last, r.reference, i == best_row ? "  *" : "");
  }
  return out;
}

}  // namespace passlab
