#include "passlab/shap.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>
#include <ostream>
#include <stdexcept>

#include <fmt/format.h>

namespace passlab {

namespace {

struct PathElement {
  int feature = -1;
  double zero_fraction = 0.0;
  double one_fraction = 0.0;
  double weight = 0.0;
};

using Path = std::vector<PathElement>;

void extend_path(Path& path, double zero_fraction, double one_fraction, int feature) {
  const std::size_t depth = path.size();
  path.push_back({feature, zero_fraction, one_fraction, depth == 0 ? 1.0 : 0.0});
  for (std::size_t i = depth; i-- > 0;) {
    path[i + 1].weight += one_fraction * path[i].weight * static_cast<double>(i + 1) / static_cast<double>(depth + 1);
    path[i].weight = zero_fraction * path[i].weight * static_cast<double>(depth - i) / static_cast<double>(depth + 1);
  }
}

void unwind_path(Path& path, std::size_t index) {
  const std::size_t depth = path.size() - 1;
  const double one = path[index].one_fraction;
  const double zero = path[index].zero_fraction;
  double next = path[depth].weight;
  for (std::size_t i = depth; i-- > 0;) {
    if (one != 0.0) {
      const double tmp = path[i].weight;
      path[i].weight = next * static_cast<double>(depth + 1) / (static_cast<double>(i + 1) * one);
      next = tmp - path[i].weight * zero * static_cast<double>(depth - i) / static_cast<double>(depth + 1);
    } else {
      path[i].weight = path[i].weight * static_cast<double>(depth + 1) / (zero * static_cast<double>(depth - i));
    }
  }
  for (std::size_t i = index; i < depth; ++i) {
    path[i].feature = path[i + 1].feature;
    path[i].zero_fraction = path[i + 1].zero_fraction;
    path[i].one_fraction = path[i + 1].one_fraction;
  }
  path.pop_back();
}

// Total weight the path would carry if element `index` were removed.
double unwound_sum(const Path& path, std::size_t index) {
  const std::size_t depth = path.size() - 1;
  const double one = path[index].one_fraction;
  const double zero = path[index].zero_fraction;
  double next = path[depth].weight;
  double total = 0.0;
  for (std::size_t i = depth; i-- > 0;) {
    if (one != 0.0) {
      const double tmp = next * static_cast<double>(depth + 1) / (static_cast<double>(i + 1) * one);
      total += tmp;
      next = path[i].weight - tmp * zero * static_cast<double>(depth - i) / static_cast<double>(depth + 1);
    } else {
      total += path[i].weight / zero / (static_cast<double>(depth - i) / static_cast<double>(depth + 1));
    }
  }
  return total;
}

void check_covers(const RegressionTree& tree) {
  for (const auto& n : tree.nodes) {
    if (n.is_leaf()) continue;
    for (int c : {n.left, n.right}) {
      const double cover = tree.nodes[c].cover;
      if (!(cover > 0.0) || !std::isfinite(cover)) {
        throw std::invalid_argument("tree_shap: model nodes lack positive cover counts");
      }
    }
  }
}

// Child weight as a fraction of both children, so the fractions always sum
// to one. For trained models this equals child cover over parent cover.
double child_fraction(const RegressionTree& tree, const TreeNode& n, int child) {
  return tree.nodes[child].cover / (tree.nodes[n.left].cover + tree.nodes[n.right].cover);
}

void recurse(const RegressionTree& tree, int node, std::span<const double> x, std::vector<double>& phi, Path path,
             double zero_fraction, double one_fraction, int feature) {
  extend_path(path, zero_fraction, one_fraction, feature);
  const TreeNode& n = tree.nodes[node];
  if (n.is_leaf()) {
    for (std::size_t i = 1; i < path.size(); ++i) {
      const double w = unwound_sum(path, i);
      phi[path[i].feature] += w * (path[i].one_fraction - path[i].zero_fraction) * n.value;
    }
    return;
  }
  const int hot = x[n.feature] <= n.threshold ? n.left : n.right;
  const int cold = hot == n.left ? n.right : n.left;
  double incoming_zero = 1.0, incoming_one = 1.0;
  // A feature already on the path is folded into a single element.
  for (std::size_t i = 1; i < path.size(); ++i) {
    if (path[i].feature == n.feature) {
      incoming_zero = path[i].zero_fraction;
      incoming_one = path[i].one_fraction;
      unwind_path(path, i);
      break;
    }
  }
  recurse(tree, hot, x, phi, path, child_fraction(tree, n, hot) * incoming_zero, incoming_one, n.feature);
  recurse(tree, cold, x, phi, path, child_fraction(tree, n, cold) * incoming_zero, 0.0, n.feature);
}

// Value of the coalition `mask` for one tree.
double coalition_value(const RegressionTree& tree, int node, std::span<const double> x, std::uint32_t mask) {
  const TreeNode& n = tree.nodes[node];
  if (n.is_leaf()) return n.value;
  if (mask & (1u << n.feature)) {
    return coalition_value(tree, x[n.feature] <= n.threshold ? n.left : n.right, x, mask);
  }
  return child_fraction(tree, n, n.left) * coalition_value(tree, n.left, x, mask) +
         child_fraction(tree, n, n.right) * coalition_value(tree, n.right, x, mask);
}

double quantile_sorted(const std::vector<double>& sorted, double q) {
  if (sorted.size() == 1) return sorted[0];
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

}  // namespace

std::vector<double> tree_shap(const RegressionTree& tree, std::span<const double> row, std::size_t n_features) {
  if (row.size() != n_features) throw std::invalid_argument("tree_shap: row width mismatch");
  check_covers(tree);
  std::vector<double> phi(n_features, 0.0);
  if (tree.nodes.empty()) return phi;
  recurse(tree, 0, row, phi, Path{}, 1.0, 1.0, -1);
  return phi;
}

ShapExplanation tree_shap(const GbdtModel& model, std::span<const double> row) {
  const std::vector<double> x = model.resolve(row);
  ShapExplanation e;
  e.phi.assign(model.n_features(), 0.0);
  e.base_value = model.base_score;
  for (const auto& t : model.trees) {
    const auto phi = tree_shap(t, x, model.n_features());
    for (std::size_t j = 0; j < phi.size(); ++j) e.phi[j] += phi[j];
    e.base_value += t.expected_value();
  }
  e.margin = model.margin(x);
  return e;
}

std::vector<double> brute_force_shapley(const GbdtModel& model, std::span<const double> row) {
  const std::size_t d = model.n_features();
  if (d > kMaxBruteForceFeatures) {
    throw std::invalid_argument(fmt::format("brute_force_shapley: {} features exceeds the limit of {}", d,
                                            kMaxBruteForceFeatures));
  }
  const std::vector<double> x = model.resolve(row);
  for (const auto& t : model.trees) check_covers(t);

  const std::uint32_t n_masks = 1u << d;
  std::vector<double> value(n_masks, 0.0);
  for (std::uint32_t mask = 0; mask < n_masks; ++mask) {
    double v = model.base_score;
    for (const auto& t : model.trees) v += coalition_value(t, 0, x, mask);
    value[mask] = v;
  }
  // weight[s] = s! (d - s - 1)! / d!
  std::vector<double> fact(d + 1, 1.0);  // exact up to 12!
  for (std::size_t i = 1; i <= d; ++i) fact[i] = fact[i - 1] * static_cast<double>(i);
  std::vector<double> weight(d, 0.0);
  for (std::size_t s = 0; s < d; ++s) weight[s] = fact[s] * fact[d - s - 1] / fact[d];
  std::vector<double> phi(d, 0.0);
  for (std::size_t j = 0; j < d; ++j) {
    const std::uint32_t bit = 1u << j;
    for (std::uint32_t mask = 0; mask < n_masks; ++mask) {
      if (mask & bit) continue;
      phi[j] += weight[static_cast<std::size_t>(std::popcount(mask))] * (value[mask | bit] - value[mask]);
    }
  }
  return phi;
}

std::vector<ShapExplanation> explain_rows(const GbdtModel& model, const FeatureTable& table) {
  if (table.columns != model.feature_names) throw std::invalid_argument("explain: table columns differ from model");
  std::vector<ShapExplanation> out;
  out.reserve(table.rows.size());
  for (const auto& r : table.rows) out.push_back(tree_shap(model, r.values));
  return out;
}

std::vector<std::size_t> ImportanceSummary::by_rank() const {
  std::vector<std::size_t> idx(features.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return features[a].rank < features[b].rank; });
  return idx;
}

ImportanceSummary shap_summary(const GbdtModel& model, const FeatureTable& table) {
  if (table.rows.empty()) throw std::invalid_argument("shap_summary: empty table");
  const auto rows = explain_rows(model, table);
  const std::size_t d = model.n_features();
  ImportanceSummary s;
  s.n_rows = rows.size();
  s.features.resize(d);
  for (std::size_t j = 0; j < d; ++j) {
    std::vector<double> col;
    col.reserve(rows.size());
    double sum_abs = 0.0;
    for (const auto& r : rows) {
      col.push_back(r.phi[j]);
      sum_abs += std::abs(r.phi[j]);
    }
    std::sort(col.begin(), col.end());
    auto& f = s.features[j];
    f.name = model.feature_names[j];
    f.mean_abs = sum_abs / static_cast<double>(rows.size());
    for (std::size_t q = 0; q < kSummaryQuantiles.size(); ++q) f.quantiles[q] = quantile_sorted(col, kSummaryQuantiles[q]);
  }
  std::vector<std::size_t> order(d);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return s.features[a].mean_abs > s.features[b].mean_abs; });
  for (std::size_t r = 0; r < d; ++r) s.features[order[r]].rank = static_cast<int>(r + 1);
  return s;
}

void write_shap_summary_csv(std::ostream& out, const ImportanceSummary& summary) {
  out << "feature,variable,slot,mean_abs_shap,rank,q0,q25,q50,q75,q100\n";
  for (std::size_t j : summary.by_rank()) {
    const auto& f = summary.features[j];
    std::string variable = f.name, slot;
    if (const auto us = f.name.rfind('_'); us != std::string::npos &&
        f.name.find_first_not_of("0123456789", us + 1) == std::string::npos && us + 1 < f.name.size()) {
      variable = f.name.substr(0, us);
      slot = f.name.substr(us + 1);
    }
    out << fmt::format("{},{},{},{},{}", f.name, variable, slot, f.mean_abs, f.rank);
    for (double q : f.quantiles) out << fmt::format(",{}", q);
    out << '\n';
  }
}

void write_shap_rows_csv(std::ostream& out, const FeatureTable& table, std::span<const ShapExplanation> rows) {
  out << "event_id,base_value,margin";
  for (const auto& c : table.columns) out << ",phi_" << c;
  out << '\n';
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out << fmt::format("{},{},{}", table.rows[i].event_id, rows[i].base_value, rows[i].margin);
    for (double p : rows[i].phi) out << fmt::format(",{}", p);
    out << '\n';
  }
}

}  // namespace passlab
