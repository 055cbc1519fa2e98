#pragma once

// Execution of hierarchical splitting methods.
//
// step() is the recursive singlerate method: at an inner node stage j runs
// the left child with a_j h and then the right child with b_j h; leaves
// apply their exact flow or numerical stepper. mr_step() is the multirate
// variant: a node reached with coefficient c runs k~ sweeps of its method
// with coefficients c/k~, where k~ = ceil(|c| k) (reweighted) or k~ = k
// (constant factors). Exact leaves are never subdivided.
//
// Zero coefficients are skipped: no recursion, no counter increment.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "hsplit/problem.hpp"
#include "hsplit/tree.hpp"

namespace hsplit {

enum class StepMode {
  singlerate,
  multirate_reweighted,  // k~ = ceil(|c| k)
  multirate_constant,    // k~ = k
};

/// Smallest integer k~ with |c| h / k~ <= h / k; 0 for c = 0.
/// The product |c| k is formed in extended precision so the ceiling is exact
/// for every k < 2^11.
inline std::int64_t reweighted_factor(double c, int k) {
  if (k < 1) throw std::invalid_argument("reweighted_factor: k must be positive");
  if (c == 0.0) return 0;
  const long double scaled = static_cast<long double>(std::abs(c)) * static_cast<long double>(k);
  return static_cast<std::int64_t>(std::ceil(scaled));
}

/// Subdivision count used at a non-root node for incoming coefficient c.
inline std::int64_t subdivision_count(const TreeNode& node, double c, StepMode mode) {
  if (c == 0.0) return 0;
  if (node.kind == NodeKind::leaf_exact) return 1;
  switch (mode) {
    case StepMode::singlerate:
      return 1;
    case StepMode::multirate_constant:
      return node.multirate_factor;
    case StepMode::multirate_reweighted:
      return reweighted_factor(c, node.multirate_factor);
  }
  return 1;
}

struct State {
  std::vector<double> x;
  double t = 0.0;
};

/// One record per application of a node's method: `coefficient` is the
/// fraction of the outer step h, `step` the signed step size actually used.
struct FlowCall {
  NodeId node = kNoNode;
  double coefficient = 0.0;
  double step = 0.0;
};
using FlowTrace = std::vector<FlowCall>;

struct EvalCounters {
  std::vector<std::uint64_t> node_calls;    // per node id: method applications
  std::vector<std::uint64_t> flow_calls;    // per partition (index m-1): leaf flows / stepper sub-steps
  std::vector<std::uint64_t> field_evals;   // per partition: f^m evaluations by numeric leaves

  void reset(std::size_t nodes, std::size_t partitions) {
    node_calls.assign(nodes, 0);
    flow_calls.assign(partitions, 0);
    field_evals.assign(partitions, 0);
  }

  std::uint64_t total_flows() const {
    std::uint64_t s = 0;
    for (auto v : flow_calls) s += v;
    return s;
  }
};

struct StepOptions {
  EvalCounters* counters = nullptr;
  FlowTrace* trace = nullptr;
};

class DivergenceError : public std::runtime_error {
 public:
  explicit DivergenceError(std::size_t step_index)
      : std::runtime_error("non-finite state after step " + std::to_string(step_index)), step_index_(step_index) {}
  std::size_t step_index() const { return step_index_; }

 private:
  std::size_t step_index_;
};

class MissingExactFlowError : public std::runtime_error {
 public:
  explicit MissingExactFlowError(int partition)
      : std::runtime_error("no exact flow for partition " + std::to_string(partition)) {}
};

namespace detail {

template <SplitProblem P>
class Stepper {
 public:
  Stepper(const SplittingTree& tree, const P& problem, StepOptions opts)
      : tree_(tree), problem_(problem), opts_(opts) {
    if (opts_.counters && opts_.counters->node_calls.size() != tree.size()) {
      opts_.counters->reset(tree.size(), static_cast<std::size_t>(problem.partitions()));
    }
  }

  // Algorithm 1: h is the step size handed to node v.
  void apply(NodeId v, double h, double c, std::span<double> x) {
    const TreeNode& n = tree_.nodes()[v];
    note(v, c, h);
    if (n.is_inner()) {
      const auto& s = n.scheme;
      for (std::size_t j = 0; j < s.stages(); ++j) {
        if (s.a[j] != 0.0) apply(n.left, s.a[j] * h, s.a[j] * c, x);
        if (s.b[j] != 0.0) apply(n.right, s.b[j] * h, s.b[j] * c, x);
      }
    } else {
      leaf(n, h, x);
    }
  }

  // Algorithm 2: node v advances by c h.
  void apply_mr(NodeId v, double c, double h, StepMode mode, std::span<double> x) {
    const TreeNode& n = tree_.nodes()[v];
    const std::int64_t kt = v == tree_.root() ? (c == 0.0 ? 0 : 1) : subdivision_count(n, c, mode);
    if (kt == 0) return;
    const double cs = c / static_cast<double>(kt);
    if (n.is_inner()) {
      const auto& s = n.scheme;
      for (std::int64_t m = 0; m < kt; ++m) {
        note(v, cs, cs * h);
        for (std::size_t j = 0; j < s.stages(); ++j) {
          if (s.a[j] != 0.0) apply_mr(n.left, s.a[j] * c / static_cast<double>(kt), h, mode, x);
          if (s.b[j] != 0.0) apply_mr(n.right, s.b[j] * c / static_cast<double>(kt), h, mode, x);
        }
      }
    } else if (n.kind == NodeKind::leaf_numeric) {
      for (std::int64_t m = 0; m < kt; ++m) {
        note(v, cs, c * h / static_cast<double>(kt));
        leaf(n, c * h / static_cast<double>(kt), x);
      }
    } else {
      note(v, c, c * h);
      leaf(n, c * h, x);
    }
  }

 private:
  void note(NodeId v, double c, double step) {
    if (opts_.counters) ++opts_.counters->node_calls[v];
    if (opts_.trace) opts_.trace->push_back({v, c, step});
  }

  void leaf(const TreeNode& n, double h, std::span<double> x) {
    const int m = n.partition();
    if (opts_.counters) ++opts_.counters->flow_calls[static_cast<std::size_t>(m - 1)];
    if (n.kind == NodeKind::leaf_exact) {
      if (!has_exact_flow(problem_, m)) throw MissingExactFlowError(m);
      problem_.exact_flow(m, h, x);
      return;
    }
    numeric(n.stepper, m, h, x);
  }

  void eval(int m, std::span<const double> x, std::span<double> dx) {
    if (opts_.counters) ++opts_.counters->field_evals[static_cast<std::size_t>(m - 1)];
    problem_.field(m, x, dx);
  }

  // Explicit Runge-Kutta steppers for x' = f^m(x).
  void numeric(const std::string& stepper, int m, double h, std::span<double> x) {
    const std::size_t d = x.size();
    k1_.resize(d);
    k2_.resize(d);
    tmp_.resize(d);
    if (stepper == "euler") {
      eval(m, x, k1_);
      for (std::size_t i = 0; i < d; ++i) x[i] += h * k1_[i];
    } else if (stepper == "midpoint") {
      eval(m, x, k1_);
      for (std::size_t i = 0; i < d; ++i) tmp_[i] = x[i] + 0.5 * h * k1_[i];
      eval(m, tmp_, k2_);
      for (std::size_t i = 0; i < d; ++i) x[i] += h * k2_[i];
    } else if (stepper == "rk4") {
      k3_.resize(d);
      k4_.resize(d);
      eval(m, x, k1_);
      for (std::size_t i = 0; i < d; ++i) tmp_[i] = x[i] + 0.5 * h * k1_[i];
      eval(m, tmp_, k2_);
      for (std::size_t i = 0; i < d; ++i) tmp_[i] = x[i] + 0.5 * h * k2_[i];
      eval(m, tmp_, k3_);
      for (std::size_t i = 0; i < d; ++i) tmp_[i] = x[i] + h * k3_[i];
      eval(m, tmp_, k4_);
      for (std::size_t i = 0; i < d; ++i) x[i] += h / 6.0 * (k1_[i] + 2.0 * k2_[i] + 2.0 * k3_[i] + k4_[i]);
    } else {
      throw std::invalid_argument("unknown leaf stepper '" + stepper + "'");
    }
  }

  const SplittingTree& tree_;
  const P& problem_;
  StepOptions opts_;
  std::vector<double> k1_, k2_, k3_, k4_, tmp_;
};

inline bool all_finite(std::span<const double> x) {
  for (double v : x) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

}  // namespace detail

/// One step of the singlerate hierarchical splitting method.
template <SplitProblem P>
State step(const SplittingTree& tree, const P& problem, State state, double h, StepOptions opts = {}) {
  detail::Stepper<P> s(tree, problem, opts);
  s.apply(tree.root(), h, 1.0, state.x);
  if (!detail::all_finite(state.x)) throw DivergenceError(0);
  state.t += h;
  return state;
}

/// Advances node v of a multirate tree by c h. A full step is
/// mr_step(tree, problem, x, 1.0, h, tree.root()).
template <SplitProblem P>
State mr_step(const SplittingTree& tree, const P& problem, State state, double c, double h, NodeId v,
              StepMode mode = StepMode::multirate_reweighted, StepOptions opts = {}) {
  if (!tree.contains(v)) throw std::out_of_range("mr_step: unknown node id " + std::to_string(v));
  detail::Stepper<P> s(tree, problem, opts);
  s.apply_mr(v, c, h, mode, state.x);
  if (!detail::all_finite(state.x)) throw DivergenceError(0);
  if (v == tree.root()) state.t += c * h;
  return state;
}

struct Trajectory {
  std::vector<State> samples;
  EvalCounters counters;
  std::size_t steps = 0;
};

/// Number of steps of size h covering t_end; throws unless t_end / h is an
/// integer within 1e-10 relative tolerance.
inline std::size_t step_count(double h, double t_end) {
  if (!(h > 0.0) || !(t_end > 0.0)) throw std::invalid_argument("integrate: h and t_end must be positive");
  const double ratio = t_end / h;
  const double n = std::round(ratio);
  if (n < 1.0 || std::abs(n * h - t_end) > 1e-10 * t_end) {
    throw std::invalid_argument("integrate: t_end is not an integer multiple of h");
  }
  return static_cast<std::size_t>(n);
}

/// Repeated full steps from x0 to t_end. Samples the initial state, every
/// sample_every-th step (0: none in between) and the final state.
template <SplitProblem P>
Trajectory integrate(const SplittingTree& tree, const P& problem, const State& x0, double h, double t_end,
                     StepMode mode = StepMode::singlerate, std::size_t sample_every = 0, FlowTrace* trace = nullptr) {
  const std::size_t n = step_count(h, t_end);
  Trajectory traj;
  traj.counters.reset(tree.size(), static_cast<std::size_t>(problem.partitions()));
  detail::Stepper<P> s(tree, problem, {&traj.counters, trace});

  std::vector<double> x = x0.x;
  traj.samples.push_back(x0);
  for (std::size_t i = 1; i <= n; ++i) {
    if (mode == StepMode::singlerate) {
      s.apply(tree.root(), h, 1.0, x);
    } else {
      s.apply_mr(tree.root(), 1.0, h, mode, x);
    }
    if (!detail::all_finite(x)) throw DivergenceError(i);
    if (i == n || (sample_every > 0 && i % sample_every == 0)) {
      traj.samples.push_back({x, x0.t + static_cast<double>(i) * h});
    }
  }
  traj.samples.back().t = x0.t + t_end;
  traj.steps = n;
  return traj;
}

/// Maximum-norm distance between x0 and the result of a step with h
/// followed by a step with -h.
template <SplitProblem P>
double reversibility_defect(const SplittingTree& tree, const P& problem, const State& x0, double h,
                            StepMode mode = StepMode::singlerate) {
  auto one = [&](State s, double dt) {
    return mode == StepMode::singlerate ? step(tree, problem, std::move(s), dt)
                                        : mr_step(tree, problem, std::move(s), 1.0, dt, tree.root(), mode);
  };
  const State back = one(one(x0, h), -h);
  double d = 0.0;
  for (std::size_t i = 0; i < x0.x.size(); ++i) d = std::max(d, std::abs(back.x[i] - x0.x[i]));
  return d;
}

}  // namespace hsplit
