#pragma once

// Free rigid body x' = (A_1(x) + A_2(x) + A_3(x)) x with the so(3) basis
// splitting; every elementary flow is a rotation about a coordinate axis.

#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

#include "hsplit/engine.hpp"

namespace hsplit {

struct RigidBodyParams {
  double I1 = 2.0;
  double I2 = 1.0;
  double I3 = 2.0 / 3.0;
};

class RigidBody {
 public:
  explicit RigidBody(RigidBodyParams params = {}) : p_(params) {
    if (!(p_.I1 > 0.0 && p_.I2 > 0.0 && p_.I3 > 0.0)) {
      throw std::invalid_argument("RigidBody: moments of inertia must be positive");
    }
  }

  int partitions() const { return 3; }
  std::size_t dimension() const { return 3; }
  const RigidBodyParams& params() const { return p_; }

  void field(int m, std::span<const double> x, std::span<double> dx) const {
    dx[0] = dx[1] = dx[2] = 0.0;
    switch (m) {
      case 1: {
        const double w = x[0] / p_.I1;
        dx[1] = w * x[2];
        dx[2] = -w * x[1];
        break;
      }
      case 2: {
        const double w = x[1] / p_.I2;
        dx[0] = -w * x[2];
        dx[2] = w * x[0];
        break;
      }
      case 3: {
        const double w = x[2] / p_.I3;
        dx[0] = w * x[1];
        dx[1] = -w * x[0];
        break;
      }
      default:
        throw std::out_of_range("RigidBody: partition index out of range");
    }
  }

  // x_m is invariant under its own flow, so the angular velocity is constant.
  void exact_flow(int m, double h, std::span<double> x) const {
    switch (m) {
      case 1:
        rotate(x[1], x[2], h * x[0] / p_.I1);
        break;
      case 2:
        rotate(x[2], x[0], h * x[1] / p_.I2);
        break;
      case 3:
        rotate(x[0], x[1], h * x[2] / p_.I3);
        break;
      default:
        throw std::out_of_range("RigidBody: partition index out of range");
    }
  }

  static State initial_state() { return {{std::cos(1.1), 0.0, std::sin(1.1)}, 0.0}; }

 private:
  // (u, v) -> (cos t u + sin t v, -sin t u + cos t v)
  static void rotate(double& u, double& v, double theta) {
    const double c = std::cos(theta);
    const double s = std::sin(theta);
    const double nu = c * u + s * v;
    const double nv = -s * u + c * v;
    u = nu;
    v = nv;
  }

  RigidBodyParams p_;
};

}  // namespace hsplit
