#pragma once

// JSON tree configuration:
//
//   { "n": <int>, "root": <node> }
//   <node> := { "leaf": <int>, "flow": "exact" | {"scheme": <name>, "order": <int>}, "k": <int, default 1> }
//           | { "subset": [ints] (optional), "scheme": <name>, "k": <int, default 1>,
//               "left": <node>, "right": <node> }

#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "hsplit/tree.hpp"

namespace hsplit {

class TreeConfigError : public std::runtime_error {
 public:
  TreeConfigError(const std::string& location, const std::string& what)
      : std::runtime_error(location.empty() ? what : location + ": " + what), location_(location) {}

  const std::string& location() const { return location_; }

 private:
  std::string location_;
};

namespace detail {

class TreeConfigParser {
 public:
  SplittingTree parse(std::string_view text) {
    nlohmann::json doc;
    try {
      doc = nlohmann::json::parse(text.begin(), text.end());
    } catch (const nlohmann::json::parse_error& e) {
      throw TreeConfigError("", std::string("syntax error: ") + e.what());
    }
    if (!doc.is_object()) throw TreeConfigError("", "syntax error: document must be a JSON object");
    check_keys(doc, "", {"n", "root"});
    if (!doc.contains("n") || !doc["n"].is_number_integer()) throw TreeConfigError("", "missing integer \"n\"");
    if (!doc.contains("root")) throw TreeConfigError("", "missing \"root\"");
    n_ = doc["n"].get<int>();
    if (n_ < 1 || n_ > kMaxPartitions) throw TreeConfigError("n", "N must lie in 1..64");

    const NodeId root = parse_node(doc["root"], "root");
    SplittingTree tree = std::move(builder_).build(n_, root);
    const ValidationResult res = validate_tree(tree);
    if (!res.ok()) {
      auto where = [&](const Violation& v) { return v.node < paths_.size() ? paths_[v.node] : std::string("root"); };
      std::string what = res.violations.front().rule;
      for (std::size_t i = 1; i < res.violations.size(); ++i) {
        what += "; " + where(res.violations[i]) + ": " + res.violations[i].rule;
      }
      throw TreeConfigError(where(res.violations.front()), what);
    }
    return tree;
  }

 private:
  static void check_keys(const nlohmann::json& j, const std::string& path, std::initializer_list<const char*> allowed) {
    for (const auto& [key, _] : j.items()) {
      bool known = false;
      for (const char* a : allowed) known = known || key == a;
      if (!known) throw TreeConfigError(path, "unknown key \"" + key + "\"");
    }
  }

  int read_factor(const nlohmann::json& j, const std::string& path) {
    if (!j.contains("k")) return 1;
    if (!j["k"].is_number_integer()) throw TreeConfigError(path, "\"k\" must be an integer");
    return j["k"].get<int>();
  }

  int read_partition(const nlohmann::json& v, const std::string& path) {
    if (!v.is_number_integer()) throw TreeConfigError(path, "partition index must be an integer");
    const int m = v.get<int>();
    if (m < 1 || m > n_) throw TreeConfigError(path, "subset outside {1..N}");
    return m;
  }

  NodeId record(NodeId id, const std::string& path) {
    if (paths_.size() <= id) paths_.resize(id + 1);
    paths_[id] = path;
    return id;
  }

  NodeId parse_node(const nlohmann::json& j, const std::string& path) {
    if (!j.is_object()) throw TreeConfigError(path, "node must be a JSON object");
    const int k = read_factor(j, path);

    if (j.contains("leaf")) {
      check_keys(j, path, {"leaf", "flow", "k"});
      const int m = read_partition(j["leaf"], path + ".leaf");
      if (!j.contains("flow")) throw TreeConfigError(path, "leaf needs \"flow\"");
      const auto& flow = j["flow"];
      if (flow.is_string()) {
        if (flow.get<std::string>() != "exact") throw TreeConfigError(path + ".flow", "flow must be \"exact\" or an object");
        return record(builder_.exact_leaf(m, k), path);
      }
      if (!flow.is_object()) throw TreeConfigError(path + ".flow", "flow must be \"exact\" or an object");
      check_keys(flow, path + ".flow", {"scheme", "order"});
      if (!flow.contains("scheme") || !flow["scheme"].is_string()) throw TreeConfigError(path + ".flow", "missing \"scheme\"");
      if (!flow.contains("order") || !flow["order"].is_number_integer()) throw TreeConfigError(path + ".flow", "missing integer \"order\"");
      const auto stepper = flow["scheme"].get<std::string>();
      if (!leaf_stepper_order(stepper)) throw TreeConfigError(path + ".flow", "unknown scheme '" + stepper + "'");
      const int order = flow["order"].get<int>();
      if (order < 1) throw TreeConfigError(path + ".flow", "order must be positive");
      return record(builder_.numeric_leaf(m, stepper, order, k), path);
    }

    check_keys(j, path, {"subset", "scheme", "k", "left", "right"});
    if (!j.contains("scheme") || !j["scheme"].is_string()) throw TreeConfigError(path, "inner node needs \"scheme\"");
    if (!j.contains("left") || !j.contains("right")) throw TreeConfigError(path, "inner node needs \"left\" and \"right\"");
    TwoSplitScheme scheme;
    try {
      scheme = builtin_scheme(j["scheme"].get<std::string>());
    } catch (const std::invalid_argument& e) {
      throw TreeConfigError(path + ".scheme", e.what());
    }
    std::optional<SubsetMask> declared;
    if (j.contains("subset")) {
      if (!j["subset"].is_array()) throw TreeConfigError(path + ".subset", "subset must be an array");
      SubsetMask s;
      for (const auto& v : j["subset"]) s = s | SubsetMask::single(read_partition(v, path + ".subset"));
      declared = s;
    }
    const NodeId left = parse_node(j["left"], path + ".left");
    const NodeId right = parse_node(j["right"], path + ".right");
    return record(builder_.inner(std::move(scheme), left, right, k, declared), path);
  }

  int n_ = 0;
  TreeBuilder builder_;
  std::vector<std::string> paths_;
};

inline nlohmann::ordered_json node_to_json(const SplittingTree& tree, NodeId v) {
  const TreeNode& n = tree.node(v);
  nlohmann::ordered_json j;
  if (n.is_inner()) {
    j["subset"] = n.subset.indices();
    j["scheme"] = n.scheme.name;
    j["k"] = n.multirate_factor;
    j["left"] = node_to_json(tree, n.left);
    j["right"] = node_to_json(tree, n.right);
  } else {
    j["leaf"] = n.partition();
    if (n.kind == NodeKind::leaf_exact) {
      j["flow"] = "exact";
    } else {
      j["flow"] = {{"scheme", n.stepper}, {"order", n.order}};
    }
    j["k"] = n.multirate_factor;
  }
  return j;
}

}  // namespace detail

/// Throws TreeConfigError on syntax errors, unknown scheme names and
/// invariant violations (the location names the offending node path).
inline SplittingTree parse_tree_config(std::string_view text) { return detail::TreeConfigParser{}.parse(text); }

inline std::string serialize_tree_config(const SplittingTree& tree) {
  nlohmann::ordered_json doc;
  doc["n"] = tree.n_partitions();
  doc["root"] = detail::node_to_json(tree, tree.root());
  return doc.dump(2) + "\n";
}

inline SplittingTree load_tree_config(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw TreeConfigError(file.string(), "cannot open file");
  std::ostringstream ss;
  ss << in.rdbuf();
  try {
    return parse_tree_config(ss.str());
  } catch (const TreeConfigError& e) {
    throw TreeConfigError(file.string() + (e.location().empty() ? "" : ":" + e.location()),
                          std::string(e.what()).substr(e.location().empty() ? 0 : e.location().size() + 2));
  }
}

}  // namespace hsplit
