#pragma once

#include <array>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "passlab/features.hpp"
#include "passlab/gbdt.hpp"

namespace passlab {

/// Attributions in margin (log-odds) units.
struct ShapExplanation {
  std::vector<double> phi;
  double base_value = 0.0;  // phi_0
  double margin = 0.0;      // model margin of the explained row
};

/// Path-dependent TreeSHAP summed over the ensemble. The row is resolved
/// through the model medians first. Throws std::invalid_argument when a
/// node lacks a positive cover or the row width is wrong.
ShapExplanation tree_shap(const GbdtModel& model, std::span<const double> row);

/// TreeSHAP for a single tree over `n_features` inputs (no medians).
std::vector<double> tree_shap(const RegressionTree& tree, std::span<const double> row, std::size_t n_features);

/// Exact Shapley values by enumerating every coalition. Absent features are
/// marginalized by cover-weighted descent, the same value function as
/// tree_shap. Throws std::invalid_argument for more than 12 features.
std::vector<double> brute_force_shapley(const GbdtModel& model, std::span<const double> row);

inline constexpr std::size_t kMaxBruteForceFeatures = 12;

inline constexpr std::array<double, 5> kSummaryQuantiles{0.0, 0.25, 0.5, 0.75, 1.0};

struct FeatureImportance {
  std::string name;
  double mean_abs = 0.0;
  int rank = 0;  // 1 = most important
  std::array<double, kSummaryQuantiles.size()> quantiles{};  // of signed phi
};

struct ImportanceSummary {
  std::size_t n_rows = 0;
  std::vector<FeatureImportance> features;  // column order

  /// Column indices sorted by rank.
  std::vector<std::size_t> by_rank() const;
};

/// Mean |phi| per column over all rows of `table`, ranked descending with
/// ties going to the earlier column. Throws std::invalid_argument for an
/// empty table or mismatched columns.
ImportanceSummary shap_summary(const GbdtModel& model, const FeatureTable& table);

std::vector<ShapExplanation> explain_rows(const GbdtModel& model, const FeatureTable& table);

/// Columns: feature,variable,slot,mean_abs_shap,rank,q0,q25,q50,q75,q100.
/// `variable` and `slot` split a "<variable>_<n>" column name so a report
/// can group attributions across candidate ranks.
void write_shap_summary_csv(std::ostream& out, const ImportanceSummary& summary);
/// One line per row: event_id,base_value,margin, then one phi per column.
void write_shap_rows_csv(std::ostream& out, const FeatureTable& table, std::span<const ShapExplanation> rows);

}  // namespace passlab
