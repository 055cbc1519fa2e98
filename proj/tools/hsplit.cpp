// hsplit: convergence, work-precision and energy experiments for hierarchical
// splitting trees, plus a tree inspection report.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "CLI11.hpp"

#include "hsplit/bench.hpp"
#include "hsplit/hsplit.hpp"

namespace {

using namespace hsplit;

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

// accepts fractions such as 1/7
double parse_positive(const std::string& item, const char* what) {
  const auto slash = item.find('/');
  const double v = slash == std::string::npos ? std::stod(item)
                                              : std::stod(item.substr(0, slash)) / std::stod(item.substr(slash + 1));
  if (!(v > 0.0)) throw std::invalid_argument(std::string(what) + " must be positive: " + item);
  return v;
}

std::vector<double> parse_steps(const std::string& s) {
  std::vector<double> hs;
  for (const auto& item : split_list(s)) hs.push_back(parse_positive(item, "step sizes"));
  if (hs.empty()) throw std::invalid_argument("--h needs at least one step size");
  return hs;
}

bool parse_switch(const std::string& s) {
  if (s == "on") return true;
  if (s == "off") return false;
  throw std::invalid_argument("--reweight expects on|off, got '" + s + "'");
}

struct Output {
  explicit Output(const std::string& path) {
    if (!path.empty()) {
      file.open(path);
      if (!file) throw std::runtime_error("cannot write " + path);
    }
  }
  std::ostream& out() { return file.is_open() ? static_cast<std::ostream&>(file) : std::cout; }
  std::ofstream file;
};

struct MethodSpec {
  std::string file;
  std::optional<int> k;
  bool reweight = true;
};

double default_t_end(const std::string& problem) { return problem == "fpu" ? 220.0 : 100.0; }

// Runs one method over all step sizes against a shared reference.
template <class P>
std::vector<BenchRecord> run_method(const MethodSpec& spec, const std::string& experiment, const std::string& problem_name,
                                    const P& problem, const std::vector<double>& hs, double t_end,
                                    const std::vector<double>& reference) {
  const SplittingTree file_tree = load_tree_config(spec.file);
  const std::vector<bool> fast = fast_partitions(file_tree);
  const SplittingTree tree = spec.k ? with_multirate_factor(file_tree, *spec.k) : file_tree;
  RunSetup setup;
  setup.experiment = experiment;
  setup.method = std::filesystem::path(spec.file).stem().string();
  setup.tree_label = std::filesystem::path(spec.file).filename().string();
  setup.problem = problem_name;
  setup.reweight = spec.reweight;
  setup.t_end = t_end;
  auto rows = convergence_rows(tree, fast, problem, hs, setup, reference);
  attach_slope(rows);
  return rows;
}

int run_rows(const std::vector<MethodSpec>& methods, const std::string& experiment, const std::string& problem_name,
             const std::vector<double>& hs, double t_end, const std::string& out_path) {
  for (const auto& m : methods) load_tree_config(m.file);  // fail before any output
  return with_problem(problem_name, [&](const auto& problem) {
    const State x0 = default_initial_state(problem);
    const State ref = reference_solve(problem, x0, t_end);
    Output o(out_path);
    o.out() << kCsvHeader << '\n';
    bool diverged = false;
    for (const auto& m : methods) {
      const auto rows = run_method(m, experiment, problem_name, problem, hs, t_end, ref.x);
      for (const auto& r : rows) {
        diverged = diverged || r.diverged;
        o.out() << csv_row(r) << '\n';
      }
      if (rows.front().slope) std::cerr << rows.front().method << ": slope " << format_double(*rows.front().slope) << '\n';
    }
    return diverged ? 1 : 0;
  });
}

int cmd_energy(const std::string& tree_file, const std::string& problem_name, double h, std::optional<int> k,
               bool reweight, double t_end, std::size_t sample_every, const std::string& out_path) {
  if (problem_name != "fpu") throw std::invalid_argument("energy: only the fpu problem has oscillatory energies");
  const SplittingTree file_tree = load_tree_config(tree_file);
  const SplittingTree tree = k ? with_multirate_factor(file_tree, *k) : file_tree;
  const Fpu fpu;
  Output o(out_path);
  try {
    const Trajectory traj =
        integrate(tree, fpu, fpu.initial_state(), h, t_end, run_mode(tree, reweight), sample_every);
    o.out() << kEnergyCsvHeader << '\n';
    for (const auto& s : energy_series(traj, fpu.params())) o.out() << energy_row(s) << '\n';
  } catch (const DivergenceError& e) {
    std::cerr << "energy: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

int cmd_tree_info(const std::string& tree_file, double h_min) {
  const SplittingTree tree = load_tree_config(tree_file);
  std::cout << "tree: " << tree_file << '\n';
  std::cout << "partitions: " << tree.n_partitions() << ", nodes: " << tree.size() << '\n';
  std::cout << "validation: ok\n";
  std::cout << "self-adjoint: " << (is_self_adjoint(tree) ? "yes" : "no") << '\n';
  const auto counts = flow_eval_counts(tree);
  const int p_root = tree.node(tree.root()).is_inner() ? tree.node(tree.root()).scheme.order : 0;
  std::cout << "node  subset          kind     method        k  calls  factor(p=1)  factor(p=2)  min_k\n";
  for (const auto& n : tree.nodes()) {
    char line[256];
    const char* kind = n.is_inner() ? "inner" : (n.kind == NodeKind::leaf_exact ? "exact" : "numeric");
    const std::string method = n.is_inner() ? n.scheme.name : (n.kind == NodeKind::leaf_exact ? "-" : n.stepper);
    std::string f1 = "-", f2 = "-", mk = "-";
    if (n.kind != NodeKind::leaf_exact) {
      f1 = format_double(error_scaling_factor(tree, n.id, 1));
      f2 = format_double(error_scaling_factor(tree, n.id, 2));
      const int p = n.is_inner() ? n.scheme.order : n.order;
      if (n.id != tree.root() && p_root > 0) mk = format_double(min_multirate_factor(p, p_root, h_min));
    }
    std::snprintf(line, sizeof line, "%-4zu  %-14s  %-7s  %-12s %3d  %5llu  %-11s  %-11s  %s\n", n.id,
                  n.subset.to_string().c_str(), kind, method.c_str(), n.multirate_factor,
                  static_cast<unsigned long long>(counts[n.id]), f1.c_str(), f2.c_str(), mk.c_str());
    std::cout << line;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"hierarchical and multirate splitting experiments"};
  app.require_subcommand(1);
  app.set_help_flag("--help", "print this help");  // -h would clash with --h

  std::string tree_file, problem = "rigid-body", h_list, k_list, reweight_list = "on", out_path;
  std::string t_end_text;
  double h_min = 0.01;
  std::size_t sample_every = 1;
  unsigned long long seed = 0;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--problem", problem, "rigid-body | fpu");
    sub->add_option("--h", h_list, "comma-separated step sizes (fractions like 1/7 allowed)")->required();
    sub->add_option("--k", k_list, "multirate factor overriding the tree's multirate edges");
    sub->add_option("--reweight", reweight_list, "on | off");
    sub->add_option("--t-end", t_end_text, "final time (default: 100 rigid-body, 220 fpu)");
    sub->add_option("--out", out_path, "output CSV (default stdout)");
    sub->add_option("--seed", seed, "reserved");
  };

  auto* conv = app.add_subcommand("convergence", "global error at t_end for each step size");
  conv->add_option("--tree", tree_file, "tree config (JSON)")->required();
  add_common(conv);

  auto* wp = app.add_subcommand("workprecision", "error and flow counts for several methods");
  wp->add_option("--tree", tree_file, "comma-separated tree configs")->required();
  add_common(wp);

  auto* en = app.add_subcommand("energy", "oscillatory energies along an FPU trajectory");
  en->add_option("--tree", tree_file, "tree config (JSON)")->required();
  add_common(en);
  en->add_option("--sample-every", sample_every, "steps between samples");

  auto* info = app.add_subcommand("tree-info", "validation, flow counts and error factors of a tree");
  info->add_option("--tree", tree_file, "tree config (JSON)")->required();
  info->add_option("--hmin", h_min, "smallest step size for the multirate-factor bound");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (info->parsed()) return cmd_tree_info(tree_file, h_min);

    const double t_end = t_end_text.empty() ? default_t_end(problem) : parse_positive(t_end_text, "--t-end");
    const auto hs = parse_steps(h_list);
    const auto trees = split_list(tree_file);
    const auto ks = split_list(k_list);
    const auto rws = split_list(reweight_list);
    auto pick = [](const std::vector<std::string>& v, std::size_t i) { return v.size() == 1 ? v[0] : v.at(i); };
    if ((ks.size() > 1 && ks.size() != trees.size()) || (rws.size() > 1 && rws.size() != trees.size())) {
      throw std::invalid_argument("--k and --reweight lists must match the number of trees");
    }
    std::vector<MethodSpec> methods;
    for (std::size_t i = 0; i < trees.size(); ++i) {
      MethodSpec m;
      m.file = trees[i];
      if (!ks.empty()) m.k = std::stoi(pick(ks, i));
      m.reweight = rws.empty() ? true : parse_switch(pick(rws, i));
      methods.push_back(m);
    }

    if (en->parsed()) {
      if (hs.size() != 1 || methods.size() != 1) throw std::invalid_argument("energy takes one tree and one h");
      return cmd_energy(methods[0].file, problem, hs[0], methods[0].k, methods[0].reweight, t_end, sample_every,
                        out_path);
    }
    if (conv->parsed() && methods.size() != 1) throw std::invalid_argument("convergence takes one tree");
    return run_rows(methods, conv->parsed() ? "convergence" : "workprecision", problem, hs, t_end, out_path);
  } catch (const TreeConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
}
