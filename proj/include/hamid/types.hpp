#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>
#include <string>

namespace hamid {

using BlochVector = Eigen::Vector3d;

/// Control Hamiltonian H = (d/2)[sin(theta) sx + cos(theta) sz], hbar = 1.
/// d is the oscillation (angular) frequency of z(t) in the coherence-free case.
struct HamiltonianParams {
  double d = 0.0;      // magnitude, >= 0, units 1/time
  double theta = 0.0;  // mixing angle, [0, pi]

  double sigma_x_component() const { return d * std::sin(theta); }
  double sigma_z_component() const { return d * std::cos(theta); }
};

/// Lindblad channel strengths: dephasing (sz), absorption toward z=+1 (s+),
/// emission toward z=-1 (s-). All in 1/time; all zero means unitary evolution.
struct DecoherenceRates {
  double gamma_z = 0.0;
  double gamma_plus = 0.0;
  double gamma_minus = 0.0;

  double sum_pm() const { return gamma_plus + gamma_minus; }
  bool all_zero() const {
    return gamma_z == 0.0 && gamma_plus == 0.0 && gamma_minus == 0.0;
  }
};

/// dr/dt = linear_part * r + constant_part for the Bloch vector r = (x, y, z).
struct AffineGenerator {
  Eigen::Matrix3d linear_part = Eigen::Matrix3d::Zero();
  Eigen::Vector3d constant_part = Eigen::Vector3d::Zero();

  Eigen::Vector3d apply(const BlochVector& r) const {
    return linear_part * r + constant_part;
  }
};

struct degenerate_steady_state_error : std::runtime_error {
  explicit degenerate_steady_state_error(const std::string& msg)
      : std::runtime_error(msg) {}
};

struct no_peak_error : std::runtime_error {
  explicit no_peak_error(const std::string& msg) : std::runtime_error(msg) {}
};

struct tail_not_settled_error : std::runtime_error {
  explicit tail_not_settled_error(const std::string& msg)
      : std::runtime_error(msg) {}
};

struct config_error : std::invalid_argument {
  explicit config_error(const std::string& msg) : std::invalid_argument(msg) {}
};

}  // namespace hamid
