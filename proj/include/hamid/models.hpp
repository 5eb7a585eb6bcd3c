#pragma once

#include <complex>

#include "hamid/types.hpp"

namespace hamid {

enum class ModelKind { delta, dephasing, general };

/// Parameters of the analytic spectral models.  `amplitude` plays the role of
/// the impulse constant C_F and absorbs the DFT normalization together with
/// the (1 - 2 eta) signal reduction; z_inf is derived from the rates, not free.
struct ModelParams {
  HamiltonianParams h;
  DecoherenceRates rates;
  double amplitude = 1.0;
  double z_inf = 0.0;
};

/// Bin-resolved delta model for the decoherence-free limit: amplitude cos^2
/// at omega = 0, amplitude sin^2 / 2 at omega = +-d, zero elsewhere.
/// `tol` is the on-peak frequency tolerance (half a bin, typically).
double model_delta(const ModelParams& p, double omega, double tol);

/// Pure-dephasing spectral model,
///   Z(w) = A / (i w + d^2 (2 gz + i w) sin^2 / ((2 gz + i w)^2 + d^2 cos^2)),
/// conjugated to match the +i DFT kernel.  Throws on a denominator below
/// 1e-14 in magnitude (reachable only at w = 0 with gz = 0).
std::complex<double> model_dephasing(const ModelParams& p, double omega);

/// General three-channel model Z'(w) built from the steady state
/// (x_inf, y_inf, z_inf) and the mixing coefficient K; reduces pointwise to
/// model_dephasing when g+ = g- = 0.  The caller's data must be shifted by
/// z(inf) before transforming, after which Z'(w) applies at every bin
/// including DC.
std::complex<double> model_general(const ModelParams& p, double omega);

std::complex<double> eval_model(ModelKind kind, const ModelParams& p,
                                double omega, double delta_tol);

}  // namespace hamid
