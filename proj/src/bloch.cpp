#include "hamid/bloch.hpp"

#include <cmath>

#include "hamid/expm.hpp"

namespace hamid {

double closed_evolution_z(const HamiltonianParams& h, double t) {
  const double s = std::sin(h.theta);
  const double c = std::cos(h.theta);
  return std::cos(h.d * t) * s * s + c * c;
}

AffineGenerator build_generator(const HamiltonianParams& h,
                                const DecoherenceRates& rates) {
  const double a = h.d * std::sin(h.theta);
  const double c = h.d * std::cos(h.theta);
  const double gs = rates.sum_pm();
  const double gc = 2.0 * rates.gamma_z + 0.5 * gs;  // coherence decay

  AffineGenerator gen;
  gen.linear_part << -gc, c, 0.0,  //
      -c, -gc, a,                  //
      0.0, -a, -gs;
  gen.constant_part << 0.0, 0.0, rates.gamma_plus - rates.gamma_minus;
  return gen;
}

std::vector<BlochVector> propagate(const HamiltonianParams& h,
                                   const DecoherenceRates& rates,
                                   const BlochVector& init, double dt,
                                   std::size_t n_t) {
  if (!(dt > 0.0) || n_t < 1) throw config_error("propagate: dt > 0, n_t >= 1 required");
  if (!init.allFinite() || !std::isfinite(h.d) || !std::isfinite(h.theta))
    throw config_error("propagate: non-finite input");

  const AffineGenerator gen = build_generator(h, rates);

  // Augmented generator acting on (x, y, z, 1); one exact step operator
  // reused along the whole grid.
  Eigen::Matrix4d aug = Eigen::Matrix4d::Zero();
  aug.topLeftCorner<3, 3>() = gen.linear_part;
  aug.topRightCorner<3, 1>() = gen.constant_part;
  const Eigen::Matrix4d step = expm(aug * dt);

  std::vector<BlochVector> out;
  out.reserve(n_t);
  Eigen::Vector4d state;
  state << init, 1.0;
  out.push_back(init);
  for (std::size_t k = 1; k < n_t; ++k) {
    state = step * state;
    out.push_back(state.head<3>());
  }
  return out;
}

double steady_state_coupling(const HamiltonianParams& h,
                             const DecoherenceRates& rates) {
  const double a = h.d * std::sin(h.theta);
  const double c = h.d * std::cos(h.theta);
  const double g = 4.0 * rates.gamma_z + rates.sum_pm();
  const double den = 4.0 * c * c + g * g;
  if (den == 0.0)
    throw degenerate_steady_state_error("steady state undefined: generator singular");
  return 2.0 * a * g / den;
}

BlochVector steady_state(const HamiltonianParams& h,
                         const DecoherenceRates& rates) {
  if (rates.all_zero())
    throw degenerate_steady_state_error(
        "steady state undefined: unitary evolution has no unique fixed point");

  const double a = h.d * std::sin(h.theta);
  const double k = steady_state_coupling(h, rates);
  const double den = rates.sum_pm() + a * k;
  if (den == 0.0)
    throw degenerate_steady_state_error("steady state undefined: generator singular");

  const double z_inf = (rates.gamma_plus - rates.gamma_minus) / den;
  const double y_inf = k * z_inf;
  const double x_inf = 2.0 * h.d * std::cos(h.theta) * y_inf /
                       (4.0 * rates.gamma_z + rates.sum_pm());
  return BlochVector(x_inf, y_inf, z_inf);
}

double decay_difference(const DecoherenceRates& rates, double t) {
  return 2.0 * std::exp(-t * rates.sum_pm());
}

}  // namespace hamid
