#pragma once

// Splitting trees: full ordered binary trees over subsets of the partition
// indices {1..N}, with a two-split scheme on every inner node, an exact or
// numerical flow on every leaf, and a multirate factor on every edge (stored
// on the child node).

#include <algorithm>
#include <bit>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "hsplit/schemes.hpp"

namespace hsplit {

inline constexpr int kMaxPartitions = 64;

/// Set of 1-based partition indices packed into a machine word.
class SubsetMask {
 public:
  constexpr SubsetMask() = default;
  constexpr explicit SubsetMask(std::uint64_t bits) : bits_(bits) {}

  static SubsetMask single(int index) {
    check_index(index);
    return SubsetMask(std::uint64_t{1} << (index - 1));
  }

  /// {1, ..., n}
  static SubsetMask first(int n) {
    if (n < 0 || n > kMaxPartitions) throw std::out_of_range("SubsetMask: n out of range");
    return SubsetMask(n == kMaxPartitions ? ~std::uint64_t{0} : (std::uint64_t{1} << n) - 1);
  }

  static SubsetMask of(const std::vector<int>& indices) {
    SubsetMask m;
    for (int i : indices) m = m | single(i);
    return m;
  }

  constexpr std::uint64_t bits() const { return bits_; }
  constexpr bool empty() const { return bits_ == 0; }
  constexpr int size() const { return std::popcount(bits_); }
  bool contains(int index) const { return index >= 1 && index <= kMaxPartitions && ((bits_ >> (index - 1)) & 1U); }
  constexpr bool intersects(SubsetMask o) const { return (bits_ & o.bits_) != 0; }
  constexpr bool subset_of(SubsetMask o) const { return (bits_ & ~o.bits_) == 0; }

  /// Smallest index in the set, 0 if empty.
  constexpr int lowest() const { return bits_ == 0 ? 0 : std::countr_zero(bits_) + 1; }

  std::vector<int> indices() const {
    std::vector<int> out;
    for (std::uint64_t rest = bits_; rest != 0; rest &= rest - 1) out.push_back(std::countr_zero(rest) + 1);
    return out;
  }

  std::string to_string() const {
    std::string s = "{";
    bool first_index = true;
    for (int i : indices()) {
      if (!first_index) s += ",";
      s += std::to_string(i);
      first_index = false;
    }
    return s + "}";
  }

  friend constexpr SubsetMask operator|(SubsetMask l, SubsetMask r) { return SubsetMask(l.bits_ | r.bits_); }
  friend constexpr SubsetMask operator&(SubsetMask l, SubsetMask r) { return SubsetMask(l.bits_ & r.bits_); }
  friend constexpr bool operator==(SubsetMask, SubsetMask) = default;

 private:
  static void check_index(int index) {
    if (index < 1 || index > kMaxPartitions) {
      throw std::out_of_range("partition index " + std::to_string(index) + " outside 1.." +
                              std::to_string(kMaxPartitions));
    }
  }

  std::uint64_t bits_ = 0;
};

using NodeId = std::size_t;
inline constexpr NodeId kNoNode = std::numeric_limits<NodeId>::max();

enum class NodeKind { inner, leaf_exact, leaf_numeric };

struct TreeNode {
  NodeId id = kNoNode;
  SubsetMask subset;
  NodeKind kind = NodeKind::leaf_exact;
  TwoSplitScheme scheme;       // inner nodes
  std::string stepper;         // numeric leaves
  int order = 0;               // numeric leaves: declared order
  NodeId left = kNoNode;
  NodeId right = kNoNode;
  NodeId parent = kNoNode;
  int multirate_factor = 1;    // factor on the edge to the parent

  bool is_inner() const { return kind == NodeKind::inner; }
  bool is_leaf() const { return kind != NodeKind::inner; }
  /// Partition index of a leaf (its singleton subset); 0 for malformed leaves.
  int partition() const { return subset.size() == 1 ? subset.lowest() : 0; }
};

/// Immutable after construction. Structural invariants are not enforced by
/// the constructor; run validate_tree() to check them.
class SplittingTree {
 public:
  SplittingTree() = default;
  SplittingTree(int n_partitions, std::vector<TreeNode> nodes, NodeId root)
      : n_(n_partitions), nodes_(std::move(nodes)), root_(root) {
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
      nodes_[i].id = i;
      nodes_[i].parent = kNoNode;
    }
    for (auto& n : nodes_) {
      for (NodeId c : {n.left, n.right}) {
        if (c < nodes_.size() && nodes_[c].parent == kNoNode) nodes_[c].parent = n.id;
      }
    }
  }

  int n_partitions() const { return n_; }
  NodeId root() const { return root_; }
  std::size_t size() const { return nodes_.size(); }
  bool contains(NodeId v) const { return v < nodes_.size(); }

  const TreeNode& node(NodeId v) const {
    if (!contains(v)) throw std::out_of_range("unknown node id " + std::to_string(v));
    return nodes_[v];
  }
  const std::vector<TreeNode>& nodes() const { return nodes_; }

  /// Leaf node carrying partition m, kNoNode if absent.
  NodeId leaf_for_partition(int m) const {
    for (const auto& n : nodes_) {
      if (n.is_leaf() && n.subset == SubsetMask::single(m)) return n.id;
    }
    return kNoNode;
  }

  /// First node whose subset equals s, kNoNode if absent.
  NodeId find(SubsetMask s) const {
    for (const auto& n : nodes_) {
      if (n.subset == s) return n.id;
    }
    return kNoNode;
  }

  std::size_t depth(NodeId v) const {
    std::size_t d = 0;
    for (NodeId p = node(v).parent; p != kNoNode; p = nodes_[p].parent) ++d;
    return d;
  }

 private:
  int n_ = 0;
  std::vector<TreeNode> nodes_;
  NodeId root_ = kNoNode;
};

/// Assembles trees bottom-up. Inner subsets default to the union of the
/// children.
class TreeBuilder {
 public:
  NodeId exact_leaf(int partition, int k = 1) {
    TreeNode n;
    n.subset = SubsetMask::single(partition);
    n.kind = NodeKind::leaf_exact;
    n.multirate_factor = k;
    return push(std::move(n));
  }

  NodeId numeric_leaf(int partition, std::string stepper, int order, int k = 1) {
    TreeNode n;
    n.subset = SubsetMask::single(partition);
    n.kind = NodeKind::leaf_numeric;
    n.stepper = std::move(stepper);
    n.order = order;
    n.multirate_factor = k;
    return push(std::move(n));
  }

  NodeId inner(TwoSplitScheme scheme, NodeId left, NodeId right, int k = 1,
               std::optional<SubsetMask> declared = std::nullopt) {
    TreeNode n;
    n.kind = NodeKind::inner;
    n.scheme = std::move(scheme);
    n.left = left;
    n.right = right;
    n.multirate_factor = k;
    if (declared) {
      n.subset = *declared;
    } else {
      if (left >= nodes_.size() || right >= nodes_.size()) throw std::out_of_range("TreeBuilder: unknown child");
      n.subset = nodes_[left].subset | nodes_[right].subset;
    }
    return push(std::move(n));
  }

  NodeId inner(std::string_view scheme, NodeId left, NodeId right, int k = 1) {
    return inner(builtin_scheme(scheme), left, right, k);
  }

  SplittingTree build(int n_partitions, NodeId root) && {
    return SplittingTree(n_partitions, std::move(nodes_), root);
  }

 private:
  NodeId push(TreeNode n) {
    n.id = nodes_.size();
    nodes_.push_back(std::move(n));
    return nodes_.back().id;
  }

  std::vector<TreeNode> nodes_;
};

struct Violation {
  NodeId node = kNoNode;
  std::string rule;
};

struct ValidationResult {
  std::vector<Violation> violations;
  bool ok() const { return violations.empty(); }
};

namespace rule {
inline constexpr const char* kNotDisjoint = "children not disjoint";
inline constexpr const char* kNotCovering = "children do not cover node subset";
inline constexpr const char* kLeafCardinality = "leaf subset must have cardinality one";
inline constexpr const char* kExactLeafFactor = "exact leaf must have multirate factor 1";
inline constexpr const char* kRootFactor = "root must have multirate factor 1";
inline constexpr const char* kFactorPositive = "multirate factor must be positive";
inline constexpr const char* kRootSubset = "root subset must be {1..N}";
inline constexpr const char* kPartitionRange = "subset outside {1..N}";
inline constexpr const char* kEmptySubset = "empty subset";
inline constexpr const char* kBadChild = "inner node needs two valid, distinct children";
inline constexpr const char* kShared = "node reachable more than once";
inline constexpr const char* kUnreachable = "node unreachable from root";
inline constexpr const char* kNodeCount = "tree must have N leaves and 2N-1 nodes";
inline constexpr const char* kScheme = "inner scheme inconsistent or malformed";
inline constexpr const char* kStepper = "unknown leaf stepper";
inline constexpr const char* kPartitionCount = "N must lie in 1..64";
}  // namespace rule

inline ValidationResult validate_tree(const SplittingTree& tree) {
  ValidationResult res;
  auto flag = [&](NodeId id, const char* r) { res.violations.push_back({id, r}); };

  const int n = tree.n_partitions();
  if (n < 1 || n > kMaxPartitions) {
    flag(kNoNode, rule::kPartitionCount);
    return res;
  }
  if (!tree.contains(tree.root())) {
    flag(tree.root(), rule::kBadChild);
    return res;
  }

  const SubsetMask all = SubsetMask::first(n);
  std::vector<int> seen(tree.size(), 0);
  std::vector<NodeId> stack{tree.root()};
  std::size_t leaves = 0;
  while (!stack.empty()) {
    const NodeId v = stack.back();
    stack.pop_back();
    if (++seen[v] > 1) {
      flag(v, rule::kShared);
      continue;
    }
    const TreeNode& nd = tree.node(v);
    if (nd.subset.empty()) flag(v, rule::kEmptySubset);
    if (!nd.subset.subset_of(all)) flag(v, rule::kPartitionRange);
    if (nd.multirate_factor < 1) flag(v, rule::kFactorPositive);
    if (v == tree.root()) {
      if (nd.subset != all) flag(v, rule::kRootSubset);
      if (nd.multirate_factor != 1) flag(v, rule::kRootFactor);
    }

    if (nd.is_inner()) {
      if (!tree.contains(nd.left) || !tree.contains(nd.right) || nd.left == nd.right) {
        flag(v, rule::kBadChild);
        continue;
      }
      const SubsetMask l = tree.node(nd.left).subset;
      const SubsetMask r = tree.node(nd.right).subset;
      if (l.intersects(r)) flag(v, rule::kNotDisjoint);
      if ((l | r) != nd.subset) flag(v, rule::kNotCovering);
      if (!check_consistency(nd.scheme)) flag(v, rule::kScheme);
      stack.push_back(nd.right);
      stack.push_back(nd.left);
    } else {
      ++leaves;
      if (nd.subset.size() != 1) flag(v, rule::kLeafCardinality);
      if (nd.kind == NodeKind::leaf_exact && nd.multirate_factor != 1) flag(v, rule::kExactLeafFactor);
      if (nd.kind == NodeKind::leaf_numeric && !leaf_stepper_order(nd.stepper)) flag(v, rule::kStepper);
    }
  }
  for (NodeId v = 0; v < tree.size(); ++v) {
    if (seen[v] == 0) flag(v, rule::kUnreachable);
  }
  if (leaves != static_cast<std::size_t>(n) || tree.size() != static_cast<std::size_t>(2 * n - 1)) {
    flag(tree.root(), rule::kNodeCount);
  }
  return res;
}

struct PathInfo {
  std::vector<NodeId> inner_path;  // root first, target excluded
  std::vector<int> delta;          // 1: path continues left, 0: right
};

inline PathInfo path_info(const SplittingTree& tree, NodeId v) {
  if (!tree.contains(v)) throw std::out_of_range("path_info: unknown node id " + std::to_string(v));
  PathInfo info;
  for (NodeId child = v, p = tree.node(v).parent; p != kNoNode; child = p, p = tree.node(p).parent) {
    info.inner_path.push_back(p);
    info.delta.push_back(tree.node(p).left == child ? 1 : 0);
  }
  std::reverse(info.inner_path.begin(), info.inner_path.end());
  std::reverse(info.delta.begin(), info.delta.end());
  return info;
}

/// True if every inner scheme is self-adjoint and every leaf flow is exact.
inline bool is_self_adjoint(const SplittingTree& tree) {
  for (const auto& n : tree.nodes()) {
    if (n.is_inner() && !n.scheme.self_adjoint) return false;
    if (n.kind == NodeKind::leaf_numeric) return false;
  }
  return true;
}

/// Structural equality: same shape, subsets, schemes, flows and factors.
inline bool same_structure(const SplittingTree& x, NodeId vx, const SplittingTree& y, NodeId vy) {
  const TreeNode& a = x.node(vx);
  const TreeNode& b = y.node(vy);
  if (a.kind != b.kind || a.subset != b.subset || a.multirate_factor != b.multirate_factor) return false;
  switch (a.kind) {
    case NodeKind::leaf_exact:
      return true;
    case NodeKind::leaf_numeric:
      return a.stepper == b.stepper && a.order == b.order;
    case NodeKind::inner:
      return a.scheme == b.scheme && same_structure(x, a.left, y, b.left) && same_structure(x, a.right, y, b.right);
  }
  return false;
}

inline bool same_structure(const SplittingTree& x, const SplittingTree& y) {
  return x.n_partitions() == y.n_partitions() && same_structure(x, x.root(), y, y.root());
}

}  // namespace hsplit
