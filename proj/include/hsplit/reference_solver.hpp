#pragma once

// Adaptive Dormand-Prince 5(4) integrator with PI step-size control, used to
// compute reference solutions of the full right-hand side.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "hsplit/engine.hpp"
#include "hsplit/problem.hpp"

namespace hsplit {

class StepSizeUnderflowError : public std::runtime_error {
 public:
  explicit StepSizeUnderflowError(double t)
      : std::runtime_error("step size underflow at t = " + std::to_string(t)), t_(t) {}
  double time_reached() const { return t_; }

 private:
  double t_;
};

struct ReferenceOptions {
  double atol = 1e-14;
  double rtol = 1e-12;
  double safety = 0.9;
  double min_ratio = 0.2;
  double max_ratio = 10.0;
  double beta = 0.04;  // PI feedback on the previous error
  std::size_t max_steps = 50'000'000;
};

struct ReferenceStats {
  std::size_t accepted = 0;
  std::size_t rejected = 0;
};

/// Integrates x' = rhs(x) (rhs(x, dx) writes the derivative) from 0 to t_end.
template <class Rhs>
std::vector<double> dopri5(Rhs&& rhs, std::vector<double> x, double t_end, const ReferenceOptions& opt = {},
                           ReferenceStats* stats = nullptr) {
  if (!(opt.atol > 0.0) || !(opt.rtol > 0.0)) throw std::invalid_argument("dopri5: tolerances must be positive");
  if (t_end < 0.0) throw std::invalid_argument("dopri5: t_end must be non-negative");
  if (t_end == 0.0) return x;

  constexpr double a21 = 1.0 / 5;
  constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
  constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
  constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
  constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                   a65 = -5103.0 / 18656;
  constexpr double a71 = 35.0 / 384, a73 = 500.0 / 1113, a74 = 125.0 / 192, a75 = -2187.0 / 6784, a76 = 11.0 / 84;
  // error = 5th order minus embedded 4th order weights
  constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                   e6 = 22.0 / 525, e7 = -1.0 / 40;

  const std::size_t d = x.size();
  std::vector<double> k1(d), k2(d), k3(d), k4(d), k5(d), k6(d), k7(d), y(d), xn(d);
  const double expo1 = 0.2 - opt.beta * 0.75;
  double err_old = 1e-4;

  auto norm = [&](std::span<const double> a, std::span<const double> b, std::span<const double> e) {
    double s = 0.0;
    for (std::size_t i = 0; i < d; ++i) {
      const double sc = opt.atol + opt.rtol * std::max(std::abs(a[i]), std::abs(b[i]));
      s += (e[i] / sc) * (e[i] / sc);
    }
    return std::sqrt(s / static_cast<double>(std::max<std::size_t>(d, 1)));
  };

  rhs(std::span<const double>(x), std::span<double>(k1));

  // initial step guess from derivative magnitudes
  double h;
  {
    double d0 = 0.0, d1 = 0.0;
    for (std::size_t i = 0; i < d; ++i) {
      const double sc = opt.atol + opt.rtol * std::abs(x[i]);
      d0 += (x[i] / sc) * (x[i] / sc);
      d1 += (k1[i] / sc) * (k1[i] / sc);
    }
    d0 = std::sqrt(d0 / static_cast<double>(d));
    d1 = std::sqrt(d1 / static_cast<double>(d));
    h = (d0 < 1e-5 || d1 < 1e-5) ? 1e-6 : 0.01 * d0 / d1;
    h = std::min(h, t_end);
  }

  double t = 0.0;
  bool last_rejected = false;
  for (std::size_t n = 0; n < opt.max_steps; ++n) {
    if (t + h > t_end) h = t_end - t;
    if (h <= std::abs(t) * 1e-15 || h <= 0.0) throw StepSizeUnderflowError(t);

    for (std::size_t i = 0; i < d; ++i) y[i] = x[i] + h * a21 * k1[i];
    rhs(std::span<const double>(y), std::span<double>(k2));
    for (std::size_t i = 0; i < d; ++i) y[i] = x[i] + h * (a31 * k1[i] + a32 * k2[i]);
    rhs(std::span<const double>(y), std::span<double>(k3));
    for (std::size_t i = 0; i < d; ++i) y[i] = x[i] + h * (a41 * k1[i] + a42 * k2[i] + a43 * k3[i]);
    rhs(std::span<const double>(y), std::span<double>(k4));
    for (std::size_t i = 0; i < d; ++i) y[i] = x[i] + h * (a51 * k1[i] + a52 * k2[i] + a53 * k3[i] + a54 * k4[i]);
    rhs(std::span<const double>(y), std::span<double>(k5));
    for (std::size_t i = 0; i < d; ++i) {
      y[i] = x[i] + h * (a61 * k1[i] + a62 * k2[i] + a63 * k3[i] + a64 * k4[i] + a65 * k5[i]);
    }
    rhs(std::span<const double>(y), std::span<double>(k6));
    for (std::size_t i = 0; i < d; ++i) {
      xn[i] = x[i] + h * (a71 * k1[i] + a73 * k3[i] + a74 * k4[i] + a75 * k5[i] + a76 * k6[i]);
    }
    rhs(std::span<const double>(xn), std::span<double>(k7));
    for (std::size_t i = 0; i < d; ++i) {
      y[i] = h * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] + e6 * k6[i] + e7 * k7[i]);
    }
    const double err = norm(x, xn, y);
    if (!std::isfinite(err)) {
      h *= opt.min_ratio;
      last_rejected = true;
      if (stats) ++stats->rejected;
      continue;
    }

    if (err <= 1.0) {
      const double fac11 = std::pow(err, expo1);
      double ratio = err == 0.0 ? opt.max_ratio : opt.safety / (fac11 * std::pow(err_old, -opt.beta));
      ratio = std::clamp(ratio, opt.min_ratio, opt.max_ratio);
      if (last_rejected) ratio = std::min(ratio, 1.0);
      err_old = std::max(err, 1e-4);
      t += h;
      x.swap(xn);
      k1.swap(k7);
      if (stats) ++stats->accepted;
      if (t >= t_end) return x;
      h *= ratio;
      last_rejected = false;
    } else {
      const double ratio = std::max(opt.min_ratio, opt.safety / std::pow(err, expo1));
      h *= ratio;
      last_rejected = true;
      if (stats) ++stats->rejected;
    }
  }
  throw StepSizeUnderflowError(t);
}

/// Reference solution of the full system sum_m f^m from x0 to x0.t + t_end.
template <SplitProblem P>
State reference_solve(const P& problem, const State& x0, double t_end, double atol = 1e-14, double rtol = 1e-12,
                      ReferenceStats* stats = nullptr) {
  ReferenceOptions opt;
  opt.atol = atol;
  opt.rtol = rtol;
  std::vector<double> scratch;
  auto rhs = [&](std::span<const double> x, std::span<double> dx) { full_field(problem, x, dx, scratch); };
  return {dopri5(rhs, x0.x, t_end, opt, stats), x0.t + t_end};
}

}  // namespace hsplit
