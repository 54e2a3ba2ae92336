#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "passlab/features.hpp"
#include "passlab/gbdt.hpp"

namespace passlab {

struct ClassMetrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::size_t support = 0;
};

/// Confusion-matrix metrics at a probability threshold. Class 1 is a
/// successful pass. Undefined ratios (no predicted or no actual members)
/// are reported as 0.
struct MetricsReport {
  double threshold = 0.5;
  double accuracy = 0.0;
  ClassMetrics positive;  // success class
  ClassMetrics negative;  // failure class
  ClassMetrics macro;
  std::size_t tp = 0, fp = 0, fn = 0, tn = 0;

  std::size_t total() const { return tp + fp + fn + tn; }
};

/// Throws std::invalid_argument for empty or mismatched input or labels
/// other than 0/1.
MetricsReport classification_metrics(std::span<const int> labels, std::span<const double> probabilities,
                                     double threshold = 0.5);

/// Which per-class figures fill the precision/recall/F1 columns.
enum class MetricAveraging { positive, negative, macro };

struct MetricsRow {
  std::string label;  // e.g. "n=1"
  MetricsReport report;
};

/// Fixed-width table: a header line "Accuracy Precision Recall F1 Score"
/// then one line per row, accuracy to three decimals, the rest to two.
std::string format_metrics_table(std::span<const MetricsRow> rows, MetricAveraging averaging);

/// Fold id in [0, k) per row. Each class is shuffled separately and dealt
/// round-robin, so every fold holds each class to within one sample.
/// Throws std::invalid_argument when k < 2 or a class has fewer than 2 rows.
std::vector<int> stratified_folds(std::span<const int> labels, int k, std::uint64_t seed);

struct CvResult {
  GbdtHyperParams hyper;
  std::vector<double> fold_accuracy;
  double mean_accuracy = 0.0;
  /// Metrics of the pooled out-of-fold predictions.
  MetricsReport pooled;
};

struct GridSearchResult {
  std::size_t best_index = 0;
  GbdtHyperParams best;
  std::vector<CvResult> results;  // grid order
};

/// Stratified k-fold CV of every grid entry on `table`. Imputation medians
/// are recomputed from the raw values of each training fold. The best
/// configuration maximizes mean fold accuracy; ties keep the earlier entry.
GridSearchResult grid_search_cv(const FeatureTable& table, std::span<const GbdtHyperParams> grid, int k,
                                std::uint64_t seed, double threshold = 0.5);

/// Cartesian product of per-parameter value lists.
struct HyperGrid {
  std::vector<int> n_trees{50, 100, 200};
  std::vector<int> max_depth{3, 5};
  std::vector<double> learning_rate{0.1, 0.3};
  std::vector<double> min_child_weight{1.0};
  std::vector<double> l2_lambda{1.0};
  std::vector<double> gamma{0.0};
  std::vector<double> subsample{1.0};
  std::uint64_t seed = 0;

  std::vector<GbdtHyperParams> expand() const;
};

/// Imputes with `medians`, trains on every row and keeps the medians in
/// the model for inference.
GbdtModel train_on_table(const FeatureTable& table, const ColumnMedians& medians, const GbdtHyperParams& hp,
                         TrainingTrace* trace = nullptr);

DenseMatrix to_matrix(const FeatureTable& table);

struct RankingRow {
  RankingVariable variable;
  double accuracy = 0.0;           // unreachable candidates ranked first
  double accuracy_inf_last = 0.0;  // unreachable candidates ranked last
  GbdtHyperParams best;
  double reference = 0.0;          // published accuracy for n = 3
};

struct RankingReport {
  int n = 3;
  std::vector<RankingRow> rows;  // kRankingVariables order
  std::size_t best_row = 0;      // argmax of `accuracy`, earliest on ties

  std::string format() const;
};

/// Published ranking-variable accuracies at n = 3, shown alongside results.
double reference_ranking_accuracy(RankingVariable v);

RankingReport compare_ranking_variables(std::span<const PassCandidates> passes, int n,
                                        std::span<const GbdtHyperParams> grid, int k, std::uint64_t seed);
RankingReport compare_ranking_variables(std::span<const Match> matches, int n, const FeatureParams& params,
                                        std::span<const GbdtHyperParams> grid, int k, std::uint64_t seed);

}  // namespace passlab
