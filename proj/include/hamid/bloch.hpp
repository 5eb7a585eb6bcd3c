#pragma once

#include <vector>

#include "hamid/types.hpp"

namespace hamid {

/// z-projection of the decoherence-free evolution from z(0) = 1:
/// z(t) = cos(d t) sin^2(theta) + cos^2(theta).
double closed_evolution_z(const HamiltonianParams& h, double t);

/// Bloch-space generator of the Lindblad master equation with channels
/// sqrt(gz) sz, sqrt(g+) s+, sqrt(g-) s-, in the standard Bloch components
/// x = r01 + r10, y = (r01 - r10)/i, z = r00 - r11.
AffineGenerator build_generator(const HamiltonianParams& h,
                                const DecoherenceRates& rates);

/// Bloch vectors at t = 0, dt, ..., (n_t - 1) dt, by exact per-step
/// exponentiation of the augmented affine generator.
std::vector<BlochVector> propagate(const HamiltonianParams& h,
                                   const DecoherenceRates& rates,
                                   const BlochVector& init, double dt,
                                   std::size_t n_t);

/// Unique fixed point of the generator.  Throws degenerate_steady_state_error
/// when the affine map has no unique null point (e.g. all rates zero).
BlochVector steady_state(const HamiltonianParams& h,
                         const DecoherenceRates& rates);

/// K = 2 d sin(theta) (4 gz + g+ + g-) / (4 d^2 cos^2(theta) + (4 gz + g+ + g-)^2),
/// the y(inf) = K z(inf) coupling used by the steady state and the general
/// spectral model.
double steady_state_coupling(const HamiltonianParams& h,
                             const DecoherenceRates& rates);

/// z1(t) - z_-1(t) = 2 exp(-t (g+ + g-)) for relaxation-only evolution (d = 0).
double decay_difference(const DecoherenceRates& rates, double t);

}  // namespace hamid
