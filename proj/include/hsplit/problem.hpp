#pragma once

#include <concepts>
#include <cstddef>
#include <span>
#include <vector>

namespace hsplit {

/// An N-split system x' = sum_m f^m(x) (partitions m = 1..N).
///
/// field(m, x, dx) writes f^m(x) into dx; exact_flow(m, h, x) advances x in
/// place along the exact h-flow of x' = f^m(x). Both must be reentrant.
/// A problem may additionally expose has_exact_flow(m); without it every
/// partition is assumed to have one.
template <class P>
concept SplitProblem = requires(const P& p, int m, double h, std::span<double> x, std::span<const double> cx,
                                std::span<double> dx) {
  { p.partitions() } -> std::convertible_to<int>;
  { p.dimension() } -> std::convertible_to<std::size_t>;
  p.field(m, cx, dx);
  p.exact_flow(m, h, x);
};

template <SplitProblem P>
bool has_exact_flow(const P& p, int m) {
  if constexpr (requires { { p.has_exact_flow(m) } -> std::convertible_to<bool>; }) {
    return p.has_exact_flow(m);
  } else {
    return true;
  }
}

/// Full right-hand side f(x) = sum_m f^m(x).
template <SplitProblem P>
void full_field(const P& p, std::span<const double> x, std::span<double> dx, std::vector<double>& scratch) {
  scratch.resize(x.size());
  for (double& v : dx) v = 0.0;
  for (int m = 1; m <= p.partitions(); ++m) {
    p.field(m, x, scratch);
    for (std::size_t i = 0; i < dx.size(); ++i) dx[i] += scratch[i];
  }
}

}  // namespace hsplit
