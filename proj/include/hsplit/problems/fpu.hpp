#pragma once

// Modified Fermi-Pasta-Ulam chain: m stiff linear springs of frequency omega
// alternating with soft quartic springs,
//
//   H = |p^f|^2/2 + |p^s|^2/2 + omega^2 |q^f|^2/2 + V^s(q^s, q^f),
//   V^s = 1/4 [ (q^s_1 - q^f_1)^4
//             + sum_{i=1}^{m-1} (q^s_{i+1} - q^f_{i+1} - q^s_i - q^f_i)^4
//             + (q^s_m + q^f_m)^4 ].
//
// State layout (p^s | p^f | q^s | q^f), blocks of length m. Partitions:
//   1 = T^s (drift q^s), 2 = T^f (drift q^f), 3 = V^f (stiff kick on p^f),
//   4 = V^s (soft kick on p^s and p^f).

#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

#include "hsplit/engine.hpp"

namespace hsplit {

struct FpuParams {
  int m = 3;
  double omega = 50.0;
};

struct FpuEnergies {
  double H = 0.0;
  std::vector<double> I;  // oscillatory energy of each stiff spring
  double I_total = 0.0;
};

class Fpu {
 public:
  enum Partition : int { kSlowKinetic = 1, kFastKinetic = 2, kFastPotential = 3, kSlowPotential = 4 };

  explicit Fpu(FpuParams params = {}) : p_(params) {
    if (p_.m < 1) throw std::invalid_argument("Fpu: need at least one stiff spring");
    if (!(p_.omega > 0.0)) throw std::invalid_argument("Fpu: omega must be positive");
  }

  int partitions() const { return 4; }
  std::size_t dimension() const { return 4 * static_cast<std::size_t>(p_.m); }
  const FpuParams& params() const { return p_; }

  std::size_t ps(int i) const { return static_cast<std::size_t>(i); }
  std::size_t pf(int i) const { return static_cast<std::size_t>(p_.m + i); }
  std::size_t qs(int i) const { return static_cast<std::size_t>(2 * p_.m + i); }
  std::size_t qf(int i) const { return static_cast<std::size_t>(3 * p_.m + i); }

  void field(int part, std::span<const double> x, std::span<double> dx) const {
    for (double& v : dx) v = 0.0;
    const int m = p_.m;
    switch (part) {
      case kSlowKinetic:
        for (int i = 0; i < m; ++i) dx[qs(i)] = x[ps(i)];
        break;
      case kFastKinetic:
        for (int i = 0; i < m; ++i) dx[qf(i)] = x[pf(i)];
        break;
      case kFastPotential:
        for (int i = 0; i < m; ++i) dx[pf(i)] = -p_.omega * p_.omega * x[qf(i)];
        break;
      case kSlowPotential: {
        std::vector<double> gs(static_cast<std::size_t>(m)), gf(static_cast<std::size_t>(m));
        slow_gradient(x, gs, gf);
        for (int i = 0; i < m; ++i) {
          dx[ps(i)] = -gs[static_cast<std::size_t>(i)];
          dx[pf(i)] = -gf[static_cast<std::size_t>(i)];
        }
        break;
      }
      default:
        throw std::out_of_range("Fpu: partition index out of range");
    }
  }

  void exact_flow(int part, double h, std::span<double> x) const {
    const int m = p_.m;
    switch (part) {
      case kSlowKinetic:
        for (int i = 0; i < m; ++i) x[qs(i)] += h * x[ps(i)];
        break;
      case kFastKinetic:
        for (int i = 0; i < m; ++i) x[qf(i)] += h * x[pf(i)];
        break;
      case kFastPotential: {
        const double w2 = p_.omega * p_.omega;
        for (int i = 0; i < m; ++i) x[pf(i)] -= h * w2 * x[qf(i)];
        break;
      }
      case kSlowPotential: {
        // V^s depends on q only, so the kick uses the gradient at the start
        thread_local std::vector<double> gs, gf;
        gs.resize(static_cast<std::size_t>(m));
        gf.resize(static_cast<std::size_t>(m));
        slow_gradient(x, gs, gf);
        for (int i = 0; i < m; ++i) {
          x[ps(i)] -= h * gs[static_cast<std::size_t>(i)];
          x[pf(i)] -= h * gf[static_cast<std::size_t>(i)];
        }
        break;
      }
      default:
        throw std::out_of_range("Fpu: partition index out of range");
    }
  }

  /// Soft-spring elongations u_0..u_m; V^s = sum u_i^4 / 4.
  std::vector<double> elongations(std::span<const double> x) const {
    const int m = p_.m;
    std::vector<double> u(static_cast<std::size_t>(m + 1));
    u[0] = x[qs(0)] - x[qf(0)];
    for (int i = 1; i < m; ++i) u[static_cast<std::size_t>(i)] = x[qs(i)] - x[qf(i)] - x[qs(i - 1)] - x[qf(i - 1)];
    u[static_cast<std::size_t>(m)] = x[qs(m - 1)] + x[qf(m - 1)];
    return u;
  }

  double slow_potential(std::span<const double> x) const {
    double v = 0.0;
    for (double u : elongations(x)) v += u * u * u * u;
    return 0.25 * v;
  }

  /// Analytic gradient of V^s with respect to q^s (gs) and q^f (gf).
  void slow_gradient(std::span<const double> x, std::span<double> gs, std::span<double> gf) const {
    const int m = p_.m;
    const auto u = elongations(x);
    for (int j = 0; j < m; ++j) {
      const auto sj = static_cast<std::size_t>(j);
      const double left = u[sj] * u[sj] * u[sj];            // spring u_j has +q^s_j, -q^f_j
      const double right = u[sj + 1] * u[sj + 1] * u[sj + 1];  // spring u_{j+1}
      // u_{j+1} enters with -q^s_j - q^f_j, except the wall spring u_m = q^s_m + q^f_m
      const double sign = j == m - 1 ? 1.0 : -1.0;
      gs[sj] = left + sign * right;
      gf[sj] = -left + sign * right;
    }
  }

  double hamiltonian(std::span<const double> x) const {
    double h = 0.0;
    const double w2 = p_.omega * p_.omega;
    for (int i = 0; i < p_.m; ++i) {
      h += 0.5 * x[ps(i)] * x[ps(i)] + 0.5 * x[pf(i)] * x[pf(i)] + 0.5 * w2 * x[qf(i)] * x[qf(i)];
    }
    return h + slow_potential(x);
  }

  /// q^s_1 = 1, p^s_1 = 1, q^f_1 = 1/omega, p^f_1 = 1, all else zero.
  State initial_state() const {
    State s{std::vector<double>(dimension(), 0.0), 0.0};
    s.x[ps(0)] = 1.0;
    s.x[pf(0)] = 1.0;
    s.x[qs(0)] = 1.0;
    s.x[qf(0)] = 1.0 / p_.omega;
    return s;
  }

 private:
  FpuParams p_;
};

inline FpuEnergies fpu_energies(std::span<const double> x, const FpuParams& params) {
  const Fpu fpu(params);
  FpuEnergies e;
  e.H = fpu.hamiltonian(x);
  const double w2 = params.omega * params.omega;
  for (int j = 0; j < params.m; ++j) {
    const double p = x[fpu.pf(j)];
    const double q = x[fpu.qf(j)];
    e.I.push_back(0.5 * p * p + 0.5 * w2 * q * q);
    e.I_total += e.I.back();
  }
  return e;
}

}  // namespace hsplit
