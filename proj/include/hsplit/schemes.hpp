#pragma once

// Two-split coefficient schemes and the composition constructor.
//
// A two-split scheme advances x' = f_L(x) + f_R(x) by
//   phi^R_{b_s h} o phi^L_{a_s h} o ... o phi^R_{b_1 h} o phi^L_{a_1 h},
// i.e. stage j applies the left sub-flow with a_j h and then the right
// sub-flow with b_j h.

#include <cmath>
#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace hsplit {

struct TwoSplitScheme {
  std::string name;
  std::vector<double> a;
  std::vector<double> b;
  int order = 1;
  bool self_adjoint = false;

  std::size_t stages() const { return a.size(); }

  friend bool operator==(const TwoSplitScheme&, const TwoSplitScheme&) = default;
};

struct CompositionWeights {
  std::vector<double> gamma;
};

inline constexpr double kConsistencyTol = 1e-14;

inline bool check_consistency(const TwoSplitScheme& scheme) {
  if (scheme.a.empty() || scheme.a.size() != scheme.b.size()) return false;
  double sa = 0.0;
  double sb = 0.0;
  for (double v : scheme.a) sa += v;
  for (double v : scheme.b) sb += v;
  return std::abs(sa - 1.0) <= kConsistencyTol && std::abs(sb - 1.0) <= kConsistencyTol;
}

/// True when the flow word a_1 b_1 ... a_s b_s, with zero entries dropped,
/// reads the same backwards (same side and same coefficient at mirrored
/// positions). For self-adjoint sub-flows this makes the scheme self-adjoint.
inline bool is_palindromic(const std::vector<double>& a, const std::vector<double>& b,
                           double tol = kConsistencyTol) {
  std::vector<std::pair<int, double>> word;
  for (std::size_t j = 0; j < a.size() && j < b.size(); ++j) {
    if (a[j] != 0.0) word.emplace_back(0, a[j]);
    if (b[j] != 0.0) word.emplace_back(1, b[j]);
  }
  for (std::size_t i = 0, k = word.size(); i < k / 2; ++i) {
    const auto& lo = word[i];
    const auto& hi = word[k - 1 - i];
    if (lo.first != hi.first || std::abs(lo.second - hi.second) > tol) return false;
  }
  return true;
}

inline CompositionWeights triple_jump_weights() {
  const double g1 = 1.0 / (2.0 - std::cbrt(2.0));
  return {{g1, 1.0 - 2.0 * g1, g1}};
}

// Concatenates the base word scaled by gamma_1, ..., gamma_s. With
// merge_adjacent, an a-entry followed by a zero b-entry is fused with the
// next a-entry (exact-flow equivalent, but a different method once the left
// child is not an exact flow).
inline TwoSplitScheme compose_scheme(const TwoSplitScheme& base, const CompositionWeights& weights,
                                     bool merge_adjacent) {
  if (!check_consistency(base)) {
    throw std::invalid_argument("compose_scheme: base scheme '" + base.name + "' is not consistent");
  }
  double gsum = 0.0;
  for (double g : weights.gamma) gsum += g;
  if (weights.gamma.empty() || std::abs(gsum - 1.0) > kConsistencyTol) {
    throw std::invalid_argument("compose_scheme: composition weights must sum to one");
  }

  TwoSplitScheme out;
  out.name = base.name + "_composed";
  for (double g : weights.gamma) {
    for (std::size_t j = 0; j < base.stages(); ++j) {
      out.a.push_back(g * base.a[j]);
      out.b.push_back(g * base.b[j]);
    }
  }

  if (merge_adjacent) {
    std::vector<double> a;
    std::vector<double> b;
    for (std::size_t j = 0; j < out.a.size(); ++j) {
      if (!a.empty() && b.back() == 0.0) {
        a.back() += out.a[j];
        b.back() = out.b[j];
      } else {
        a.push_back(out.a[j]);
        b.push_back(out.b[j]);
      }
    }
    out.a = std::move(a);
    out.b = std::move(b);
  }

  out.self_adjoint = base.self_adjoint && is_palindromic(out.a, out.b);

  const int p = base.order;
  double moment = 0.0;
  double scale = 0.0;
  for (double g : weights.gamma) {
    moment += std::pow(g, p + 1);
    scale += std::pow(std::abs(g), p + 1);
  }
  out.order = p;
  if (weights.gamma.size() > 1 && std::abs(moment) <= 1e-13 * scale) {
    out.order = p + 1;
    // self-adjoint methods have even order
    if (out.self_adjoint && out.order % 2 == 1) ++out.order;
  }
  return out;
}

inline TwoSplitScheme builtin_scheme(std::string_view name) {
  if (name == "lie_trotter") return {"lie_trotter", {1.0}, {1.0}, 1, false};
  if (name == "strang") return {"strang", {0.5, 0.5}, {1.0, 0.0}, 2, true};
  if (name == "yoshida9" || name == "yoshida7") {
    const bool merged = name == "yoshida7";
    TwoSplitScheme s = compose_scheme(builtin_scheme("strang"), triple_jump_weights(), merged);
    s.name = std::string(name);
    return s;
  }
  if (name == "omf4") {
    const double a2 = 0.253978510841060;
    const double a3 = -0.032302867652700;
    const double a4 = 1.0 - 2.0 * (a2 + a3);
    const double b1 = 0.083983152628767;
    const double b2 = 0.682236533571909;
    const double b3 = 0.5 - (b1 + b2);
    return {"omf4", {0.0, a2, a3, a4, a3, a2}, {b1, b2, b3, b3, b2, b1}, 4, true};
  }
  throw std::invalid_argument("unknown scheme '" + std::string(name) + "'");
}

inline const std::vector<std::string>& builtin_scheme_names() {
  static const std::vector<std::string> names{"lie_trotter", "strang", "yoshida9", "yoshida7", "omf4"};
  return names;
}

// Explicit one-step methods available for numerically integrated leaves.
inline std::optional<int> leaf_stepper_order(std::string_view name) {
  if (name == "euler") return 1;
  if (name == "midpoint") return 2;
  if (name == "rk4") return 4;
  return std::nullopt;
}

}  // namespace hsplit
