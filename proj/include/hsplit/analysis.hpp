#pragma once

// Order theory evaluated as numbers: leading-error scaling factors of the
// singlerate and multirate methods, the computational-order bound on
// multirate factors, closed-form flow counts and empirical order fits.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "hsplit/engine.hpp"
#include "hsplit/tree.hpp"

namespace hsplit {

namespace detail {

inline void require_scalable_node(const SplittingTree& tree, NodeId v, const char* who) {
  if (!tree.contains(v)) throw std::invalid_argument(std::string(who) + ": unknown node id " + std::to_string(v));
  if (tree.node(v).kind == NodeKind::leaf_exact) {
    throw std::invalid_argument(std::string(who) + ": node " + std::to_string(v) + " is an exact leaf");
  }
}

inline const std::vector<double>& side(const TreeNode& w, int delta) { return delta == 1 ? w.scheme.a : w.scheme.b; }

}  // namespace detail

/// Scalar multiplying the leading error term of node v (order p) in the
/// singlerate method: prod over ancestors w of sum_j (coefficient on the
/// path side)^(p+1).
inline double error_scaling_factor(const SplittingTree& tree, NodeId v, int p) {
  detail::require_scalable_node(tree, v, "error_scaling_factor");
  const PathInfo path = path_info(tree, v);
  double factor = 1.0;
  for (std::size_t i = 0; i < path.inner_path.size(); ++i) {
    double sum = 0.0;
    for (double coef : detail::side(tree.node(path.inner_path[i]), path.delta[i])) sum += std::pow(coef, p + 1);
    factor *= sum;
  }
  return factor;
}

/// Multirate counterpart: sum over coefficient tuples along the path of
/// (product of coefficients)^(p+1) / (product of subdivision counts on the
/// path below the root, v included)^p. Subdivision counts are the ones the
/// engine uses (same recursion on the accumulated coefficient c). Tuples
/// through zero coefficients are skipped.
inline double mr_error_scaling_factor(const SplittingTree& tree, NodeId v, int p,
                                      StepMode mode = StepMode::multirate_reweighted) {
  detail::require_scalable_node(tree, v, "mr_error_scaling_factor");
  const PathInfo path = path_info(tree, v);
  const std::size_t depth = path.inner_path.size();
  double total = 0.0;

  // c: accumulated coefficient as computed by the engine, num: product of
  // path coefficients, den: product of subdivision counts so far.
  auto walk = [&](auto&& self, std::size_t level, double c, double num, double den) -> void {
    if (level == depth) {
      const double kt = v == tree.root() ? 1.0 : static_cast<double>(subdivision_count(tree.node(v), c, mode));
      total += std::pow(num, p + 1) / std::pow(den * kt, p);
      return;
    }
    const NodeId w = path.inner_path[level];
    const double kt = w == tree.root() ? 1.0 : static_cast<double>(subdivision_count(tree.node(w), c, mode));
    for (double coef : detail::side(tree.node(w), path.delta[level])) {
      if (coef == 0.0) continue;
      self(self, level + 1, coef * c / kt, num * coef, den * kt);
    }
  };
  walk(walk, 0, 1.0, 1.0, 1.0);
  return total;
}

/// Lower bound on the multirate factor of a node of order p_node so that a
/// root method of order p_root shows its order for step sizes h >= h_min.
inline double min_multirate_factor(int p_node, int p_root, double h_min) {
  if (!(h_min > 0.0)) throw std::invalid_argument("min_multirate_factor: h_min must be positive");
  if (p_node < 1) throw std::invalid_argument("min_multirate_factor: p_node must be positive");
  if (p_root <= p_node) return 1.0;
  return std::pow(h_min, static_cast<double>(p_node - p_root) / p_node);
}

/// Closed-form number of applications of each node's method during one
/// singlerate step (indexed by node id), counting nonzero coefficients only.
inline std::vector<std::uint64_t> flow_eval_counts(const SplittingTree& tree) {
  std::vector<std::uint64_t> counts(tree.size(), 0);
  for (NodeId v = 0; v < tree.size(); ++v) {
    const PathInfo path = path_info(tree, v);
    if (!path.inner_path.empty() && path.inner_path.front() != tree.root()) continue;  // unreachable
    if (path.inner_path.empty() && v != tree.root()) continue;
    std::uint64_t c = 1;
    for (std::size_t i = 0; i < path.inner_path.size(); ++i) {
      std::uint64_t nonzero = 0;
      for (double coef : detail::side(tree.node(path.inner_path[i]), path.delta[i])) nonzero += coef != 0.0;
      c *= nonzero;
    }
    counts[v] = c;
  }
  return counts;
}

struct OrderFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
};

/// Least-squares line through (log h, log error).
inline OrderFit estimate_order(std::span<const double> hs, std::span<const double> errors) {
  if (hs.size() != errors.size()) throw std::invalid_argument("estimate_order: size mismatch");
  if (hs.size() < 3) throw std::invalid_argument("estimate_order: need at least 3 points");
  const std::size_t n = hs.size();
  std::vector<double> x(n), y(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (!(hs[i] > 0.0) || !(errors[i] > 0.0)) throw std::invalid_argument("estimate_order: inputs must be positive");
    x[i] = std::log(hs[i]);
    y[i] = std::log(errors[i]);
  }
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0.0) throw std::invalid_argument("estimate_order: step sizes must not all coincide");
  OrderFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  fit.r_squared = syy == 0.0 ? 1.0 : (sxy * sxy) / (sxx * syy);
  return fit;
}

}  // namespace hsplit
