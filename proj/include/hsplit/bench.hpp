#pragma once

// Benchmark plumbing shared by the command-line tool and the acceptance
// suite: problem lookup, multirate-factor overrides, convergence and energy
// runs, CSV rows.

#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "hsplit/analysis.hpp"
#include "hsplit/engine.hpp"
#include "hsplit/problems/fpu.hpp"
#include "hsplit/problems/rigid_body.hpp"
#include "hsplit/reference_solver.hpp"
#include "hsplit/tree.hpp"

namespace hsplit {

inline constexpr std::string_view kCsvHeader =
    "experiment,method,tree,problem,h,k,reweight,t_end,error,slope,fast_flow_evals,total_flow_evals,wall_ms";
inline constexpr std::string_view kEnergyCsvHeader = "t,I1,I2,I3,I_total,H";

struct BenchRecord {
  std::string experiment;
  std::string method;
  std::string tree;
  std::string problem;
  double h = 0.0;
  int k = 1;
  bool reweight = true;
  double t_end = 0.0;
  double error = 0.0;
  std::optional<double> slope;
  std::uint64_t fast_flow_evals = 0;
  std::uint64_t total_flow_evals = 0;
  double wall_ms = 0.0;
  bool diverged = false;
};

inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string csv_row(const BenchRecord& r) {
  std::string s;
  s += r.experiment + ',' + r.method + ',' + r.tree + ',' + r.problem + ',';
  s += format_double(r.h) + ',' + std::to_string(r.k) + ',' + (r.reweight ? "on" : "off") + ',';
  s += format_double(r.t_end) + ',' + (r.diverged ? std::string("nan") : format_double(r.error)) + ',';
  s += (r.slope ? format_double(*r.slope) : std::string()) + ',';
  s += std::to_string(r.fast_flow_evals) + ',' + std::to_string(r.total_flow_evals) + ',';
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f", r.wall_ms);
  return s + buf;
}

/// Calls f with the named benchmark problem at its default parameters.
template <class F>
decltype(auto) with_problem(std::string_view name, F&& f) {
  if (name == "rigid-body") return f(RigidBody{});
  if (name == "fpu") return f(Fpu{});
  throw std::invalid_argument("unknown problem '" + std::string(name) + "' (expected rigid-body or fpu)");
}

inline State default_initial_state(const RigidBody&) { return RigidBody::initial_state(); }
inline State default_initial_state(const Fpu& p) { return p.initial_state(); }

/// Non-root nodes whose edge carries a multirate factor other than 1.
inline std::vector<NodeId> multirate_edges(const SplittingTree& tree) {
  std::vector<NodeId> out;
  for (const auto& n : tree.nodes()) {
    if (n.id != tree.root() && n.multirate_factor != 1) out.push_back(n.id);
  }
  return out;
}

/// Partitions (index m-1) whose leaves lie below a multirate edge.
inline std::vector<bool> fast_partitions(const SplittingTree& tree) {
  std::vector<bool> fast(static_cast<std::size_t>(tree.n_partitions()), false);
  for (const auto& n : tree.nodes()) {
    if (!n.is_leaf()) continue;
    for (NodeId p = n.id; p != kNoNode && p != tree.root(); p = tree.node(p).parent) {
      if (tree.node(p).multirate_factor != 1) {
        fast[static_cast<std::size_t>(n.partition() - 1)] = true;
        break;
      }
    }
  }
  return fast;
}

/// Copy of tree with every multirate edge set to k.
inline SplittingTree with_multirate_factor(const SplittingTree& tree, int k) {
  if (k < 1) throw std::invalid_argument("multirate factor must be positive");
  std::vector<TreeNode> nodes = tree.nodes();
  for (NodeId v : multirate_edges(tree)) nodes[v].multirate_factor = k;
  return SplittingTree(tree.n_partitions(), std::move(nodes), tree.root());
}

/// Largest edge factor in the tree (1 for singlerate trees).
inline int effective_factor(const SplittingTree& tree) {
  int k = 1;
  for (NodeId v : multirate_edges(tree)) k = std::max(k, tree.node(v).multirate_factor);
  return k;
}

inline StepMode run_mode(const SplittingTree& tree, bool reweight) {
  if (multirate_edges(tree).empty()) return StepMode::singlerate;
  return reweight ? StepMode::multirate_reweighted : StepMode::multirate_constant;
}

inline double distance2(std::span<const double> x, std::span<const double> y) {
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) s += (x[i] - y[i]) * (x[i] - y[i]);
  return std::sqrt(s);
}

struct RunSetup {
  std::string experiment = "convergence";
  std::string method;
  std::string tree_label;
  std::string problem;
  bool reweight = true;
  double t_end = 0.0;
};

/// One row per h; `fast` marks fast partitions (computed from the tree as
/// read from file, before any factor override). Divergent runs are flagged,
/// never thrown.
template <SplitProblem P>
std::vector<BenchRecord> convergence_rows(const SplittingTree& tree, const std::vector<bool>& fast, const P& problem,
                                          const std::vector<double>& hs, const RunSetup& setup,
                                          const std::vector<double>& reference) {
  const State x0 = default_initial_state(problem);
  const StepMode mode = run_mode(tree, setup.reweight);
  std::vector<BenchRecord> rows;
  for (double h : hs) {
    BenchRecord r;
    r.experiment = setup.experiment;
    r.method = setup.method;
    r.tree = setup.tree_label;
    r.problem = setup.problem;
    r.h = h;
    r.k = effective_factor(tree);
    r.reweight = setup.reweight;
    r.t_end = setup.t_end;
    const auto start = std::chrono::steady_clock::now();
    try {
      const Trajectory traj = integrate(tree, problem, x0, h, setup.t_end, mode);
      r.error = distance2(traj.samples.back().x, reference);
      for (std::size_t m = 0; m < traj.counters.flow_calls.size(); ++m) {
        r.total_flow_evals += traj.counters.flow_calls[m];
        if (m < fast.size() && fast[m]) r.fast_flow_evals += traj.counters.flow_calls[m];
      }
    } catch (const DivergenceError&) {
      r.diverged = true;
      r.error = std::nan("");
    }
    r.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    rows.push_back(std::move(r));
  }
  return rows;
}

/// Fills the slope column of all rows when at least three finite points exist.
inline void attach_slope(std::vector<BenchRecord>& rows) {
  std::vector<double> hs, errs;
  for (const auto& r : rows) {
    if (r.diverged || !(r.error > 0.0)) return;
    hs.push_back(r.h);
    errs.push_back(r.error);
  }
  if (hs.size() < 3) return;
  const double slope = estimate_order(hs, errs).slope;
  for (auto& r : rows) r.slope = slope;
}

struct EnergySample {
  double t = 0.0;
  std::vector<double> I;
  double I_total = 0.0;
  double H = 0.0;
};

inline std::vector<EnergySample> energy_series(const Trajectory& traj, const FpuParams& params) {
  std::vector<EnergySample> out;
  for (const auto& s : traj.samples) {
    const FpuEnergies e = fpu_energies(s.x, params);
    out.push_back({s.t, e.I, e.I_total, e.H});
  }
  return out;
}

inline std::string energy_row(const EnergySample& s) {
  std::string row = format_double(s.t);
  for (double v : s.I) row += ',' + format_double(v);
  return row + ',' + format_double(s.I_total) + ',' + format_double(s.H);
}

/// Time of the first deep minimum of a series that starts low: after the
/// series has first risen above twice `low` times its maximum, the first
/// stretch below `low` times the maximum (ending once it exceeds twice that
/// level again) is located and its argmin returned. nullopt if the series
/// never dips again.
inline std::optional<double> first_dip_minimum(const std::vector<double>& t, const std::vector<double>& y,
                                               double low = 0.1) {
  if (t.size() != y.size() || y.empty()) return std::nullopt;
  double ymax = 0.0;
  for (double v : y) ymax = std::max(ymax, v);
  const double enter = low * ymax, leave = 2.0 * low * ymax;
  std::size_t i = 0;
  while (i < y.size() && y[i] < leave) ++i;  // initial rise
  while (i < y.size() && y[i] >= enter) ++i;
  if (i == y.size()) return std::nullopt;
  std::size_t best = i;
  for (; i < y.size() && y[i] < leave; ++i) {
    if (y[i] < y[best]) best = i;
  }
  return t[best];
}

/// Cost needed to reach `target` error, interpolated linearly in
/// (log error, log cost) between the bracketing rows; nullopt when the
/// target is not bracketed.
inline std::optional<double> cost_at_error(const std::vector<BenchRecord>& rows, double target,
                                           bool fast_only = true) {
  for (std::size_t i = 0; i + 1 < rows.size(); ++i) {
    const auto& a = rows[i];
    const auto& b = rows[i + 1];
    if (a.diverged || b.diverged) continue;
    const double ea = a.error, eb = b.error;
    if ((ea - target) * (eb - target) > 0.0 || ea == eb) continue;
    const double ca = static_cast<double>(fast_only ? a.fast_flow_evals : a.total_flow_evals);
    const double cb = static_cast<double>(fast_only ? b.fast_flow_evals : b.total_flow_evals);
    const double s = (std::log(target) - std::log(ea)) / (std::log(eb) - std::log(ea));
    return std::exp(std::log(ca) + s * (std::log(cb) - std::log(ca)));
  }
  return std::nullopt;
}

}  // namespace hsplit
