#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <utility>

#include "hsplit/analysis.hpp"
#include "hsplit/engine.hpp"
#include "hsplit/problems/fpu.hpp"
#include "hsplit/problems/rigid_body.hpp"
#include "support/test_support.hpp"

namespace {

using namespace hsplit;
using hsplit::testing::Rotations;

SplittingTree five_leaf_tree() {
  TreeBuilder b;
  const NodeId n15 = b.inner("strang", b.exact_leaf(1), b.exact_leaf(5));
  const NodeId n135 = b.inner("strang", n15, b.exact_leaf(3));
  const NodeId n24 = b.inner("strang", b.exact_leaf(2), b.exact_leaf(4));
  return std::move(b).build(5, b.inner("strang", n135, n24));
}

SplittingTree chain_tree(int n, const char* scheme) {
  TreeBuilder b;
  NodeId right = b.exact_leaf(n);
  for (int m = n - 1; m >= 1; --m) right = b.inner(scheme, b.exact_leaf(m), right);
  return std::move(b).build(n, right);
}

// FPU tree shape: root [ {1,2,3} [ {1}, {2,3} (k) [ {2}, {3} ] ], {4} ]
SplittingTree fpu_shape(const char* root, const char* middle, const char* fast, int k) {
  TreeBuilder b;
  const NodeId hf = b.inner(fast, b.exact_leaf(2), b.exact_leaf(3), k);
  const NodeId mid = b.inner(middle, b.exact_leaf(1), hf);
  return std::move(b).build(4, b.inner(root, mid, b.exact_leaf(4)));
}

std::vector<std::pair<int, double>> leaf_calls(const SplittingTree& t, const FlowTrace& trace) {
  std::vector<std::pair<int, double>> out;
  for (const auto& c : trace) {
    if (t.node(c.node).is_leaf()) out.emplace_back(t.node(c.node).partition(), c.step);
  }
  return out;
}

TEST(Step, FiveLeafStrangTreeFlowSequence) {
  const auto t = five_leaf_tree();
  const double h = 0.8;
  FlowTrace trace;
  step(t, Rotations(5), Rotations::initial_state(), h, {nullptr, &trace});
  // the 17-flow sequence of the hierarchical Strang method
  const std::vector<std::pair<int, double>> expected{
      {1, h / 8}, {5, h / 4}, {1, h / 8}, {3, h / 2}, {1, h / 8}, {5, h / 4}, {1, h / 8}, {2, h / 2}, {4, h},
      {2, h / 2}, {1, h / 8}, {5, h / 4}, {1, h / 8}, {3, h / 2}, {1, h / 8}, {5, h / 4}, {1, h / 8}};
  const auto got = leaf_calls(t, trace);
  ASSERT_EQ(got.size(), expected.size());
  for (std::size_t i = 0; i < got.size(); ++i) {
    EXPECT_EQ(got[i].first, expected[i].first) << i;
    EXPECT_DOUBLE_EQ(got[i].second, expected[i].second) << i;
  }
}

TEST(Step, ChainLieTrotterIsFlatLieTrotter) {
  const auto t = chain_tree(4, "lie_trotter");
  FlowTrace trace;
  const auto out = step(t, Rotations(4), Rotations::initial_state(), 0.3, {nullptr, &trace});
  const auto got = leaf_calls(t, trace);
  ASSERT_EQ(got.size(), 4U);
  for (int m = 1; m <= 4; ++m) {
    EXPECT_EQ(got[static_cast<std::size_t>(m - 1)].first, m);
    EXPECT_EQ(got[static_cast<std::size_t>(m - 1)].second, 0.3);
  }
  std::vector<double> flat = Rotations::initial_state().x;
  for (int m = 1; m <= 4; ++m) Rotations(4).exact_flow(m, 0.3, flat);
  EXPECT_EQ(out.x, flat);
}

TEST(Step, ZeroStepIsIdentity) {
  const auto x0 = Rotations::initial_state();
  const auto out = step(five_leaf_tree(), Rotations(5), x0, 0.0);
  EXPECT_EQ(out.x, x0.x);
}

TEST(Step, CountersMatchClosedForm) {
  const auto t = five_leaf_tree();
  EvalCounters c;
  step(t, Rotations(5), Rotations::initial_state(), 0.1, {&c, nullptr});
  EXPECT_EQ(c.node_calls, flow_eval_counts(t));
  EXPECT_EQ(c.flow_calls[0], 8U);
  EXPECT_EQ(c.total_flows(), 17U);
}

TEST(MrStep, LeafStepsOfEachPartitionSumToH) {
  const Fpu fpu;
  const double h = 0.1;
  const auto t = fpu_shape("omf4", "lie_trotter", "strang", 7);
  for (auto mode : {StepMode::singlerate, StepMode::multirate_reweighted, StepMode::multirate_constant}) {
    FlowTrace trace;
    if (mode == StepMode::singlerate) {
      step(t, fpu, fpu.initial_state(), h, {nullptr, &trace});
    } else {
      mr_step(t, fpu, fpu.initial_state(), 1.0, h, t.root(), mode, {nullptr, &trace});
    }
    std::vector<long double> sum(4, 0.0L);
    for (const auto& [m, dt] : leaf_calls(t, trace)) sum[static_cast<std::size_t>(m - 1)] += dt;
    for (int m = 1; m <= 4; ++m) EXPECT_NEAR(static_cast<double>(sum[static_cast<std::size_t>(m - 1)]), h, 1e-15) << m;
  }
}

TEST(ReweightedFactor, Examples) {
  EXPECT_EQ(reweighted_factor(0.253978510841060, 10), 3);
  EXPECT_EQ(reweighted_factor(1.0, 6), 6);
  EXPECT_EQ(reweighted_factor(-0.5, 6), 3);
  EXPECT_EQ(reweighted_factor(0.0, 6), 0);
  EXPECT_THROW(reweighted_factor(0.5, 0), std::invalid_argument);
  std::int64_t most = 0;
  for (double a : builtin_scheme("omf4").a) most = std::max(most, reweighted_factor(a, 10));
  EXPECT_EQ(most, 6);
}

TEST(MrStep, AllFactorsOneReproducesStep) {
  const auto t = fpu_shape("strang", "strang", "strang", 1);
  const Fpu fpu;
  const auto x0 = fpu.initial_state();
  const auto a = step(t, fpu, x0, 0.05);
  const auto b = mr_step(t, fpu, x0, 1.0, 0.05, t.root(), StepMode::multirate_constant);
  const auto c = mr_step(t, fpu, x0, 1.0, 0.05, t.root(), StepMode::multirate_reweighted);
  EXPECT_EQ(a.x, b.x);
  EXPECT_EQ(a.x, c.x);
}

TEST(MrStep, HalfCoefficientOnFactorSix) {
  TreeBuilder b;
  const NodeId inner = b.inner("strang", b.exact_leaf(1), b.exact_leaf(2), 6);
  const auto t = std::move(b).build(3, b.inner("lie_trotter", inner, b.exact_leaf(3)));
  const double h = 0.9;
  FlowTrace trace;
  mr_step(t, Rotations(3), Rotations::initial_state(), 0.5, h, inner, StepMode::multirate_reweighted,
          {nullptr, &trace});
  // k~ = ceil(0.5 * 6) = 3 sweeps of (a1 {1}, b1 {2}, a2 {1}) with fraction 0.5/3
  const double f = 0.5 / 3.0;
  const std::vector<std::pair<int, double>> expected{
      {1, f * 0.5 * h}, {2, f * h}, {1, f * 0.5 * h}, {1, f * 0.5 * h}, {2, f * h},
      {1, f * 0.5 * h}, {1, f * 0.5 * h}, {2, f * h}, {1, f * 0.5 * h}};
  const auto got = leaf_calls(t, trace);
  ASSERT_EQ(got.size(), expected.size());
  for (std::size_t i = 0; i < got.size(); ++i) {
    EXPECT_EQ(got[i].first, expected[i].first) << i;
    EXPECT_NEAR(got[i].second, expected[i].second, 1e-16) << i;
  }
  std::size_t sweeps = 0;
  for (const auto& c : trace) sweeps += c.node == inner;
  EXPECT_EQ(sweeps, 3U);
}

TEST(MrStep, FastSubstepsRespectCap) {
  const Fpu fpu;
  const double h = 1.0 / 7.0;
  for (int k : {5, 10, 20}) {
    const auto t = fpu_shape("omf4", "lie_trotter", "omf4", k);
    const NodeId hf = t.find(SubsetMask::of({2, 3}));
    for (auto mode : {StepMode::multirate_reweighted, StepMode::multirate_constant}) {
      FlowTrace trace;
      mr_step(t, fpu, fpu.initial_state(), 1.0, h, t.root(), mode, {nullptr, &trace});
      std::size_t sweeps = 0;
      for (const auto& c : trace) {
        if (c.node != hf) continue;
        EXPECT_LE(std::abs(c.step), h / k * (1 + 1e-14));
        ++sweeps;
      }
      EXPECT_GT(sweeps, 0U);
    }
  }
}

TEST(MrStep, ExactLeavesAreNeverSubdivided) {
  TreeBuilder b;
  const auto t = std::move(b).build(2, b.inner("strang", b.exact_leaf(1), b.numeric_leaf(2, "rk4", 4, 4)));
  EvalCounters c;
  mr_step(t, Rotations(2), Rotations::initial_state(), 1.0, 0.2, t.root(), StepMode::multirate_reweighted,
          {&c, nullptr});
  EXPECT_EQ(c.flow_calls[0], 2U);   // a = (1/2, 1/2)
  EXPECT_EQ(c.flow_calls[1], 4U);   // b1 = 1, k~ = 4 rk4 sub-steps
  EXPECT_EQ(c.field_evals[1], 16U);
}

TEST(MrStep, UnknownNodeThrows) {
  const auto t = five_leaf_tree();
  EXPECT_THROW(mr_step(t, Rotations(5), Rotations::initial_state(), 1.0, 0.1, 42), std::out_of_range);
}

TEST(Integrate, SingleStep) {
  const auto t = five_leaf_tree();
  const auto x0 = Rotations::initial_state();
  const auto traj = integrate(t, Rotations(5), x0, 0.25, 0.25);
  EXPECT_EQ(traj.steps, 1U);
  ASSERT_EQ(traj.samples.size(), 2U);
  EXPECT_EQ(traj.samples.back().x, step(t, Rotations(5), x0, 0.25).x);
  EXPECT_EQ(traj.samples.back().t, 0.25);
}

TEST(Integrate, SamplingAndTimes) {
  const auto traj = integrate(five_leaf_tree(), Rotations(5), Rotations::initial_state(), 0.1, 1.0,
                              StepMode::singlerate, 3);
  std::vector<double> times;
  for (const auto& s : traj.samples) times.push_back(s.t);
  ASSERT_EQ(times.size(), 5U);  // 0, 0.3, 0.6, 0.9, 1.0
  EXPECT_NEAR(times[1], 0.3, 1e-15);
  EXPECT_EQ(times.back(), 1.0);
  for (std::size_t i = 1; i < times.size(); ++i) EXPECT_GT(times[i], times[i - 1]);
}

TEST(Integrate, RejectsNonMultiple) {
  EXPECT_THROW(integrate(five_leaf_tree(), Rotations(5), Rotations::initial_state(), 0.3, 1.0), std::invalid_argument);
  EXPECT_THROW(integrate(five_leaf_tree(), Rotations(5), Rotations::initial_state(), -0.1, 1.0), std::invalid_argument);
  EXPECT_NO_THROW(integrate(five_leaf_tree(), Rotations(5), Rotations::initial_state(), 0.1, 1.0));
}

// x' = 1e3 x on every partition: overflows after a few hundred steps
struct Exploding {
  int partitions() const { return 2; }
  std::size_t dimension() const { return 1; }
  void field(int, std::span<const double> x, std::span<double> dx) const { dx[0] = 1e3 * x[0]; }
  void exact_flow(int, double h, std::span<double> x) const { x[0] *= std::exp(1e3 * h); }
};

TEST(Integrate, DivergenceReportsStepIndex) {
  TreeBuilder b;
  const auto t = std::move(b).build(2, b.inner("strang", b.exact_leaf(1), b.exact_leaf(2)));
  try {
    integrate(t, Exploding{}, State{{1.0}, 0.0}, 0.1, 10.0);
    FAIL() << "expected divergence";
  } catch (const DivergenceError& e) {
    // |x| grows by e^200 per step; double overflows within the fourth step
    EXPECT_EQ(e.step_index(), 4U);
  }
}

struct NoExactFlow : Rotations {
  NoExactFlow() : Rotations(2) {}
  bool has_exact_flow(int m) const { return m != 2; }
};

TEST(Step, MissingExactFlow) {
  TreeBuilder b;
  const auto t = std::move(b).build(2, b.inner("strang", b.exact_leaf(1), b.exact_leaf(2)));
  EXPECT_THROW(step(t, NoExactFlow{}, Rotations::initial_state(), 0.1), MissingExactFlowError);
  TreeBuilder c;
  const auto numeric = std::move(c).build(2, c.inner("strang", c.exact_leaf(1), c.numeric_leaf(2, "rk4", 4)));
  EXPECT_NO_THROW(step(numeric, NoExactFlow{}, Rotations::initial_state(), 0.1));
}

TEST(Step, NumericLeafOrders) {
  // single partition: the tree method is the leaf stepper itself
  for (const auto& [stepper, order] : std::vector<std::pair<std::string, int>>{{"euler", 1}, {"midpoint", 2}, {"rk4", 4}}) {
    TreeBuilder b;
    const auto t = std::move(b).build(1, b.numeric_leaf(1, stepper, order));
    std::vector<double> errs;
    for (double h : {0.1, 0.05}) {
      auto exact = Rotations::initial_state().x;
      Rotations(1).exact_flow(1, h, exact);
      const auto got = step(t, Rotations(1), Rotations::initial_state(), h);
      errs.push_back(hsplit::testing::max_abs_diff(got.x, exact));
    }
    // local error O(h^(p+1))
    EXPECT_NEAR(std::log2(errs[0] / errs[1]), order + 1, 0.15) << stepper;
  }
}

TEST(Reversibility, SelfAdjointTreesAreReversible) {
  EXPECT_LE(reversibility_defect(five_leaf_tree(), Rotations(5), Rotations::initial_state(), 0.1), 1e-14);
  TreeBuilder b;
  const NodeId r = b.inner("strang", b.exact_leaf(2), b.exact_leaf(3));
  const auto rb = std::move(b).build(3, b.inner("strang", b.exact_leaf(1), r));
  EXPECT_LE(reversibility_defect(rb, RigidBody{}, RigidBody::initial_state(), 0.1), 1e-12);
  EXPECT_EQ(reversibility_defect(rb, RigidBody{}, RigidBody::initial_state(), 0.0), 0.0);
}

TEST(Reversibility, LieTrotterDefectIsSecondOrder) {
  TreeBuilder b;
  const NodeId r = b.inner("lie_trotter", b.exact_leaf(2), b.exact_leaf(3));
  const auto t = std::move(b).build(3, b.inner("lie_trotter", b.exact_leaf(1), r));
  std::vector<double> hs{0.1, 0.05, 0.025}, d;
  for (double h : hs) d.push_back(reversibility_defect(t, RigidBody{}, RigidBody::initial_state(), h));
  EXPECT_NEAR(estimate_order(hs, d).slope, 2.0, 0.3);
}

// Rigid body whose flows record the worst norm deviation seen after any flow.
struct NormWatch : RigidBody {
  mutable double worst = 0.0;
  void exact_flow(int m, double h, std::span<double> x) const {
    RigidBody::exact_flow(m, h, x);
    worst = std::max(worst, std::abs(std::sqrt(x[0] * x[0] + x[1] * x[1] + x[2] * x[2]) - 1.0));
  }
};

TEST(Integrate, RigidBodyNormAfterEverySubFlow) {
  TreeBuilder b;
  const NodeId r = b.inner("strang", b.exact_leaf(2), b.exact_leaf(3));
  const auto t = std::move(b).build(3, b.inner("yoshida9", b.exact_leaf(1), r));
  const NormWatch p;
  integrate(t, p, RigidBody::initial_state(), 0.01, 100.0);
  EXPECT_LE(p.worst, 1e-13);
}

}  // namespace
