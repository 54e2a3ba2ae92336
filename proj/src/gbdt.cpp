#include "passlab/gbdt.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include <fmt/format.h>

#include "passlab/errors.hpp"
#include "passlab/rng.hpp"

namespace passlab {

void GbdtHyperParams::validate() const {
  if (n_trees < 1) throw std::invalid_argument("n_trees must be >= 1");
  if (max_depth < 1) throw std::invalid_argument("max_depth must be >= 1");
  if (!(learning_rate > 0.0 && learning_rate <= 1.0)) throw std::invalid_argument("learning_rate must lie in (0, 1]");
  if (!(subsample > 0.0 && subsample <= 1.0)) throw std::invalid_argument("subsample must lie in (0, 1]");
  if (!(min_child_weight >= 0.0)) throw std::invalid_argument("min_child_weight must be >= 0");
  if (!(l2_lambda >= 0.0)) throw std::invalid_argument("l2_lambda must be >= 0");
  if (!(gamma >= 0.0)) throw std::invalid_argument("gamma must be >= 0");
}

std::string describe(const GbdtHyperParams& hp) {
  return fmt::format("n_trees={} max_depth={} learning_rate={} min_child_weight={} l2_lambda={} gamma={} subsample={} seed={}",
                     hp.n_trees, hp.max_depth, hp.learning_rate, hp.min_child_weight, hp.l2_lambda, hp.gamma,
                     hp.subsample, hp.seed);
}

// Kept strictly inside (0, 1) even where the exact value rounds to 0 or 1.
double sigmoid(double z) {
  double p;
  if (z >= 0) {
    p = 1.0 / (1.0 + std::exp(-z));
  } else {
    const double e = std::exp(z);
    p = e / (1.0 + e);
  }
  return std::clamp(p, std::numeric_limits<double>::denorm_min(), std::nextafter(1.0, 0.0));
}

// --- trees -----------------------------------------------------------------

int RegressionTree::leaf_index(std::span<const double> row) const {
  int i = 0;
  while (!nodes[i].is_leaf()) i = row[nodes[i].feature] <= nodes[i].threshold ? nodes[i].left : nodes[i].right;
  return i;
}

std::vector<int> RegressionTree::decision_path(std::span<const double> row) const {
  std::vector<int> path{0};
  int i = 0;
  while (!nodes[i].is_leaf()) {
    i = row[nodes[i].feature] <= nodes[i].threshold ? nodes[i].left : nodes[i].right;
    path.push_back(i);
  }
  return path;
}

double RegressionTree::expected_value() const {
  // Descends with child cover fractions rather than averaging leaves, so the
  // result is the empty-coalition value even when covers are inconsistent.
  auto rec = [&](auto&& self, int i) -> double {
    const auto& n = nodes[i];
    if (n.is_leaf()) return n.value;
    const double l = nodes[n.left].cover, r = nodes[n.right].cover;
    return (l * self(self, n.left) + r * self(self, n.right)) / (l + r);
  };
  return nodes.empty() ? 0.0 : rec(rec, 0);
}

int RegressionTree::depth() const {
  std::vector<int> d(nodes.size(), 0);
  int best = 0;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    if (nodes[i].is_leaf()) continue;
    d[nodes[i].left] = d[nodes[i].right] = d[i] + 1;
    best = std::max(best, d[i] + 1);
  }
  return best;
}

// --- model -----------------------------------------------------------------

void GbdtModel::check() const {
  const std::size_t width = n_features();
  if (medians.size() != width) throw std::invalid_argument("model medians do not match its columns");
  for (const auto& t : trees) {
    if (t.nodes.empty()) throw std::invalid_argument("model has an empty tree");
    for (std::size_t i = 0; i < t.nodes.size(); ++i) {
      const auto& n = t.nodes[i];
      if (n.is_leaf()) continue;
      // Children come after their parent, which rules out cycles.
      const auto count = static_cast<int>(t.nodes.size());
      if (n.left <= static_cast<int>(i) || n.right <= static_cast<int>(i) || n.left >= count || n.right >= count) {
        throw std::invalid_argument("model tree has invalid child links");
      }
      if (static_cast<std::size_t>(n.feature) >= width) throw std::invalid_argument("model split feature out of range");
    }
  }
}

std::vector<double> GbdtModel::resolve(std::span<const double> row) const {
  if (row.size() != n_features()) {
    throw std::invalid_argument(fmt::format("row has {} columns, model expects {}", row.size(), n_features()));
  }
  std::vector<double> out(row.begin(), row.end());
  for (std::size_t j = 0; j < out.size(); ++j) {
    if (!std::isfinite(out[j])) out[j] = medians[j];
  }
  return out;
}

double GbdtModel::margin(std::span<const double> row, std::size_t n_trees) const {
  double m = base_score;
  const std::size_t upto = std::min(n_trees, trees.size());
  for (std::size_t t = 0; t < upto; ++t) m += trees[t].predict(row);
  return m;
}

double predict_proba(const GbdtModel& model, std::span<const double> row) {
  const auto resolved = model.resolve(row);
  return sigmoid(model.margin(resolved));
}

double mean_logloss(std::span<const int> labels, std::span<const double> margins) {
  double total = 0.0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    // log(1 + exp(-s * m)) with s = +-1, evaluated stably.
    const double z = labels[i] == 1 ? -margins[i] : margins[i];
    total += z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
  }
  return total / static_cast<double>(labels.size());
}

// --- training --------------------------------------------------------------

namespace {

struct SplitCandidate {
  double gain = 0.0;
  int feature = -1;
  double threshold = 0.0;
};

double leaf_objective(double g, double h, double lambda) { return g * g / (h + lambda); }

class TreeGrower {
 public:
  TreeGrower(const DenseMatrix& x, const std::vector<std::vector<std::uint32_t>>& sorted, const GbdtHyperParams& hp)
      : x_(x), sorted_(sorted), hp_(hp) {}

  RegressionTree grow(const std::vector<double>& g, const std::vector<double>& h, const std::vector<bool>& in_bag) {
    RegressionTree tree;
    tree.nodes.emplace_back();
    node_of_.assign(x_.rows, -1);
    for (std::size_t r = 0; r < x_.rows; ++r) {
      if (in_bag[r]) node_of_[r] = 0;
    }
    std::vector<int> open{0};
    for (int depth = 0; !open.empty(); ++depth) {
      // Node totals, summed in canonical row order.
      std::vector<double> gsum(tree.nodes.size(), 0.0), hsum(tree.nodes.size(), 0.0);
      for (std::size_t r = 0; r < x_.rows; ++r) {
        if (node_of_[r] < 0) continue;
        gsum[node_of_[r]] += g[r];
        hsum[node_of_[r]] += h[r];
      }
      for (int k : open) tree.nodes[k].cover = hsum[k];

      std::vector<SplitCandidate> best(tree.nodes.size());
      if (depth < hp_.max_depth) find_splits(open, g, h, gsum, hsum, best);

      std::vector<int> next;
      for (int k : open) {
        if (best[k].feature < 0) {
          tree.nodes[k].value = -gsum[k] / (hsum[k] + hp_.l2_lambda) * hp_.learning_rate;
          continue;
        }
        const int left = static_cast<int>(tree.nodes.size());
        tree.nodes.emplace_back();
        tree.nodes.emplace_back();
        tree.nodes[k].feature = best[k].feature;
        tree.nodes[k].threshold = best[k].threshold;
        tree.nodes[k].left = left;
        tree.nodes[k].right = left + 1;
        next.push_back(left);
        next.push_back(left + 1);
      }
      // Rows of nodes that became leaves leave the working set.
      for (std::size_t r = 0; r < x_.rows; ++r) {
        const int k = node_of_[r];
        if (k < 0) continue;
        const auto& node = tree.nodes[k];
        if (node.is_leaf()) {
          node_of_[r] = -1;
        } else {
          node_of_[r] = x_.at(r, node.feature) <= node.threshold ? node.left : node.right;
        }
      }
      open = std::move(next);
    }
    return tree;
  }

 private:
  void find_splits(const std::vector<int>& open, const std::vector<double>& g, const std::vector<double>& h,
                   const std::vector<double>& gsum, const std::vector<double>& hsum,
                   std::vector<SplitCandidate>& best) const {
    const std::size_t n_nodes = gsum.size();
    std::vector<char> is_open(n_nodes, 0);
    for (int k : open) is_open[k] = 1;
    std::vector<double> gl(n_nodes), hl(n_nodes), last(n_nodes);
    std::vector<char> seen(n_nodes);
    const double lambda = hp_.l2_lambda;

    // Features in index order, rows in ascending value: the first best
    // candidate wins ties, so the result is a fixed function of the data.
    for (std::size_t j = 0; j < x_.cols; ++j) {
      std::fill(gl.begin(), gl.end(), 0.0);
      std::fill(hl.begin(), hl.end(), 0.0);
      std::fill(seen.begin(), seen.end(), 0);
      for (const std::uint32_t r : sorted_[j]) {
        const int k = node_of_[r];
        if (k < 0 || !is_open[k]) continue;
        const double v = x_.at(r, j);
        if (seen[k] && v != last[k]) {
          const double hr = hsum[k] - hl[k];
          if (hl[k] >= hp_.min_child_weight && hr >= hp_.min_child_weight) {
            const double gr = gsum[k] - gl[k];
            const double gain = 0.5 * (leaf_objective(gl[k], hl[k], lambda) + leaf_objective(gr, hr, lambda) -
                                       leaf_objective(gsum[k], hsum[k], lambda)) -
                                hp_.gamma;
            if (gain > 0.0 && gain > best[k].gain) {
              double thr = last[k] + (v - last[k]) / 2.0;
              if (!(thr < v)) thr = last[k];
              best[k] = {gain, static_cast<int>(j), thr};
            }
          }
        }
        gl[k] += g[r];
        hl[k] += h[r];
        last[k] = v;
        seen[k] = 1;
      }
    }
  }

  const DenseMatrix& x_;
  const std::vector<std::vector<std::uint32_t>>& sorted_;
  const GbdtHyperParams& hp_;
  std::vector<int> node_of_;
};

}  // namespace

GbdtModel train_gbdt(const DenseMatrix& x_in, std::span<const int> labels_in, const GbdtHyperParams& hp,
                     std::vector<std::string> feature_names, TrainingTrace* trace) {
  hp.validate();
  const std::size_t n = x_in.rows;
  if (labels_in.size() != n) throw std::invalid_argument("label count does not match row count");
  if (n < 2) throw std::invalid_argument("training needs at least 2 rows");
  if (x_in.cols == 0) throw std::invalid_argument("training needs at least one feature");
  std::size_t positives = 0;
  for (int y : labels_in) {
    if (y != 0 && y != 1) throw std::invalid_argument("labels must be 0 or 1");
    positives += static_cast<std::size_t>(y);
  }
  if (positives == 0 || positives == n) throw std::invalid_argument("training data contains a single class");
  for (double v : x_in.data) {
    if (!std::isfinite(v)) throw std::invalid_argument("training inputs must be finite (impute first)");
  }
  if (feature_names.empty()) {
    for (std::size_t j = 0; j < x_in.cols; ++j) feature_names.push_back(fmt::format("f{}", j));
  }
  if (feature_names.size() != x_in.cols) throw std::invalid_argument("feature name count does not match columns");

  // Canonical row order: lexicographic on (features, label).
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  std::sort(perm.begin(), perm.end(), [&](std::size_t a, std::size_t b) {
    const auto ra = x_in.row(a), rb = x_in.row(b);
    for (std::size_t j = 0; j < ra.size(); ++j) {
      if (ra[j] != rb[j]) return ra[j] < rb[j];
    }
    return labels_in[a] < labels_in[b];
  });
  DenseMatrix x(n, x_in.cols);
  std::vector<int> y(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::copy(x_in.row(perm[i]).begin(), x_in.row(perm[i]).end(), x.row(i).begin());
    y[i] = labels_in[perm[i]];
  }

  std::vector<std::vector<std::uint32_t>> sorted(x.cols);
  for (std::size_t j = 0; j < x.cols; ++j) {
    auto& idx = sorted[j];
    idx.resize(n);
    std::iota(idx.begin(), idx.end(), 0u);
    std::stable_sort(idx.begin(), idx.end(), [&](std::uint32_t a, std::uint32_t b) { return x.at(a, j) < x.at(b, j); });
  }

  GbdtModel model;
  model.feature_names = std::move(feature_names);
  model.hyper = hp;
  model.medians.assign(x.cols, 0.0);
  const double mean = static_cast<double>(positives) / static_cast<double>(n);
  model.base_score = std::log(mean / (1.0 - mean));

  std::vector<double> margin(n, model.base_score), g(n), h(n);
  std::vector<bool> in_bag(n, true);
  if (trace != nullptr) trace->logloss = {mean_logloss(y, margin)};
  Rng rng(hp.seed);
  TreeGrower grower(x, sorted, hp);

  for (int t = 0; t < hp.n_trees; ++t) {
    for (std::size_t i = 0; i < n; ++i) {
      const double p = sigmoid(margin[i]);
      g[i] = p - y[i];
      h[i] = p * (1.0 - p);
    }
    if (hp.subsample < 1.0) {
      for (std::size_t i = 0; i < n; ++i) in_bag[i] = rng.uniform() < hp.subsample;
    }
    RegressionTree tree = grower.grow(g, h, in_bag);
    for (std::size_t i = 0; i < n; ++i) margin[i] += tree.predict(x.row(i));
    model.trees.push_back(std::move(tree));
    if (trace != nullptr) trace->logloss.push_back(mean_logloss(y, margin));
  }
  return model;
}

// --- serialization ---------------------------------------------------------

void save_model(std::ostream& out, const GbdtModel& model) {
  out << "passlab-gbdt 1\n";
  out << "columns " << model.n_features() << '\n';
  for (std::size_t j = 0; j < model.n_features(); ++j) {
    out << "column " << model.feature_names[j] << ' ' << fmt::format("{}", model.medians[j]) << '\n';
  }
  out << "base_score " << fmt::format("{}", model.base_score) << '\n';
  const auto& hp = model.hyper;
  out << fmt::format("hyper {} {} {} {} {} {} {} {}\n", hp.n_trees, hp.max_depth, hp.learning_rate,
                     hp.min_child_weight, hp.l2_lambda, hp.gamma, hp.subsample, hp.seed);
  out << "trees " << model.trees.size() << '\n';
  for (std::size_t t = 0; t < model.trees.size(); ++t) {
    const auto& nodes = model.trees[t].nodes;
    out << "tree " << t << " nodes " << nodes.size() << '\n';
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      const auto& n = nodes[i];
      out << fmt::format("{} {} {} {} {} {} {}\n", i, n.feature, n.threshold, n.left, n.right, n.value, n.cover);
    }
  }
  out << "end\n";
}

GbdtModel load_model(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  auto next = [&]() -> std::istringstream {
    if (!std::getline(in, line)) throw DataError(fmt::format("model: unexpected end of file after line {}", line_no));
    ++line_no;
    return std::istringstream(line);
  };
  auto fail = [&](const std::string& what) -> void {
    throw DataError(fmt::format("model:{}: {}", line_no, what));
  };
  // strtod parses the shortest round-trip form exactly.
  auto num = [&](std::istringstream& ss) {
    std::string tok;
    if (!(ss >> tok)) fail("missing number");
    char* end = nullptr;
    const double v = std::strtod(tok.c_str(), &end);
    if (end == tok.c_str() || *end != '\0') fail("bad number '" + tok + "'");
    return v;
  };
  auto integer = [&](std::istringstream& ss) {
    long long v;
    if (!(ss >> v)) fail("missing integer");
    return v;
  };
  auto keyword = [&](std::istringstream& ss, const char* expected) {
    std::string tok;
    if (!(ss >> tok) || tok != expected) fail(std::string("expected '") + expected + "'");
  };

  GbdtModel m;
  {
    auto ss = next();
    keyword(ss, "passlab-gbdt");
    if (integer(ss) != 1) fail("unsupported model version");
  }
  auto ss = next();
  keyword(ss, "columns");
  const auto n_cols = integer(ss);
  if (n_cols < 0) fail("negative column count");
  for (long long j = 0; j < n_cols; ++j) {
    auto cs = next();
    keyword(cs, "column");
    std::string name;
    if (!(cs >> name)) fail("missing column name");
    m.feature_names.push_back(name);
    m.medians.push_back(num(cs));
  }
  ss = next();
  keyword(ss, "base_score");
  m.base_score = num(ss);
  ss = next();
  keyword(ss, "hyper");
  m.hyper.n_trees = static_cast<int>(integer(ss));
  m.hyper.max_depth = static_cast<int>(integer(ss));
  m.hyper.learning_rate = num(ss);
  m.hyper.min_child_weight = num(ss);
  m.hyper.l2_lambda = num(ss);
  m.hyper.gamma = num(ss);
  m.hyper.subsample = num(ss);
  {
    unsigned long long seed;
    if (!(ss >> seed)) fail("missing seed");
    m.hyper.seed = seed;
  }
  ss = next();
  keyword(ss, "trees");
  const auto n_trees = integer(ss);
  if (n_trees < 0) fail("negative tree count");
  for (long long t = 0; t < n_trees; ++t) {
    auto ts = next();
    keyword(ts, "tree");
    if (integer(ts) != t) fail("tree index out of order");
    keyword(ts, "nodes");
    const auto n_nodes = integer(ts);
    if (n_nodes < 1) fail("tree without nodes");
    RegressionTree tree;
    for (long long i = 0; i < n_nodes; ++i) {
      auto ns = next();
      if (integer(ns) != i) fail("node index out of order");
      TreeNode node;
      node.feature = static_cast<int>(integer(ns));
      node.threshold = num(ns);
      node.left = static_cast<int>(integer(ns));
      node.right = static_cast<int>(integer(ns));
      node.value = num(ns);
      node.cover = num(ns);
      tree.nodes.push_back(node);
    }
    m.trees.push_back(std::move(tree));
  }
  ss = next();
  keyword(ss, "end");
  try {
    m.check();
  } catch (const std::invalid_argument& e) {
    throw DataError(std::string("model: ") + e.what());
  }
  return m;
}

}  // namespace passlab
