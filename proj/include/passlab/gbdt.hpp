#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace passlab {

/// Row-major matrix of model inputs.
struct DenseMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  DenseMatrix() = default;
  DenseMatrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}

  std::span<const double> row(std::size_t i) const { return {data.data() + i * cols, cols}; }
  std::span<double> row(std::size_t i) { return {data.data() + i * cols, cols}; }
  double& at(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  double at(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
};

struct GbdtHyperParams {
  int n_trees = 100;
  int max_depth = 3;
  double learning_rate = 0.3;
  double min_child_weight = 1.0;  // minimum hessian sum per child
  double l2_lambda = 1.0;
  double gamma = 0.0;             // minimum split gain
  double subsample = 1.0;
  std::uint64_t seed = 0;

  /// Throws std::invalid_argument.
  void validate() const;
  bool operator==(const GbdtHyperParams&) const = default;
};

std::string describe(const GbdtHyperParams& hp);

/// Internal nodes send x <= threshold left. `value` of a leaf already
/// includes the learning rate. `cover` is the training hessian sum that
/// reached the node.
struct TreeNode {
  int feature = -1;
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  double value = 0.0;
  double cover = 0.0;

  bool is_leaf() const { return feature < 0; }
};

struct RegressionTree {
  std::vector<TreeNode> nodes;  // nodes[0] is the root

  int leaf_index(std::span<const double> row) const;
  double predict(std::span<const double> row) const { return nodes[leaf_index(row)].value; }
  /// Node indices from the root to the reached leaf.
  std::vector<int> decision_path(std::span<const double> row) const;
  /// Mean output under cover-weighted descent from the root.
  double expected_value() const;
  int depth() const;
};

struct GbdtModel {
  double base_score = 0.0;  // log-odds
  std::vector<RegressionTree> trees;
  std::vector<std::string> feature_names;
  /// Imputation values for non-finite inputs, one per feature.
  std::vector<double> medians;
  GbdtHyperParams hyper;

  std::size_t n_features() const { return feature_names.size(); }
  /// Copy of `row` with non-finite entries replaced by the stored medians.
  /// Throws std::invalid_argument on a width mismatch.
  std::vector<double> resolve(std::span<const double> row) const;
  /// base_score plus the first `n_trees` tree outputs (all by default).
  double margin(std::span<const double> row, std::size_t n_trees = SIZE_MAX) const;
  /// Throws std::invalid_argument when the model is structurally broken:
  /// bad child links, feature indices out of range, median count mismatch.
  void check() const;
};

double sigmoid(double z);

/// Probability of success in (0, 1). Non-finite inputs use the medians.
double predict_proba(const GbdtModel& model, std::span<const double> row);

/// Mean logistic loss per boosting round; entry 0 is the base score alone.
struct TrainingTrace {
  std::vector<double> logloss;
};

/// Second-order boosting on logistic loss with exact greedy splits. Rows
/// are put into a canonical order first, so the model does not depend on
/// the order of the input rows. Throws std::invalid_argument for invalid
/// hyperparameters, single-class labels, fewer than two rows or non-finite
/// inputs.
GbdtModel train_gbdt(const DenseMatrix& x, std::span<const int> labels, const GbdtHyperParams& hp,
                     std::vector<std::string> feature_names = {}, TrainingTrace* trace = nullptr);

double mean_logloss(std::span<const int> labels, std::span<const double> margins);

/// Plain-text model file. Doubles are written in shortest round-trip form,
/// so save/load is exact.
void save_model(std::ostream& out, const GbdtModel& model);
/// Throws DataError on malformed input.
GbdtModel load_model(std::istream& in);

}  // namespace passlab
