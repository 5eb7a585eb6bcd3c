#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "hamid/fit.hpp"
#include "hamid/measurement.hpp"
#include "hamid/models.hpp"
#include "hamid/spectrum.hpp"

namespace hamid {

struct CharacterizationOptions {
  ModelKind kind = ModelKind::dephasing;
  FitConstraints constraints;
  bool allow_padding = true;
};

struct CharacterizationResult {
  FitResult fit;
  Spectrum spectrum;       // of the shifted (and possibly padded) series
  EtaEstimate eta;
  NoiseFloor noise;        // off-peak floor of the data spectrum
  double z_shift = 0.0;    // steady-state value subtracted before the DFT
  bool padded = false;
  bool padding_skipped_unsettled = false;
  bool model_mismatch = false;  // residual_norm > 5x noise-floor prediction
};

/// Full characterization workflow: steady-state shift, zero-padded DFT, peak
/// seeding, iterative refit, eta recovery, mismatch check.
CharacterizationResult characterize_series(const TimeSeries& series,
                                           const CharacterizationOptions& opts);

/// Initial estimates from the spectrum alone: peak position for d, peak-height
/// ratio for theta, half-width for gamma_z, sum rule for the amplitude.
ModelParams initial_estimates(const Spectrum& sp, ModelKind kind);

struct ScalingCell {
  std::size_t n_e = 0;
  std::size_t n_total = 0;
  // mean/sd of fractional 1-sigma uncertainty over converged replicates
  std::map<std::string, double> frac_mean;
  std::map<std::string, double> frac_sd;
  std::size_t converged = 0;
  std::size_t excluded = 0;
};

struct ScalingStudy {
  std::vector<ScalingCell> cells;
  std::map<std::string, double> loglog_slope;  // per tracked parameter
};

/// Runs the simulate+characterize pipeline over a grid of ensemble sizes and
/// seeds and regresses log fractional uncertainty against log N_T.  Tracked
/// parameters: d, theta, gamma_z and the sigma_z Hamiltonian component.
ScalingStudy scaling_study(const HamiltonianParams& truth_h,
                           const DecoherenceRates& truth_rates,
                           const ExperimentConfig& base,
                           const std::vector<std::size_t>& n_e_values,
                           std::size_t seeds_per_cell,
                           const CharacterizationOptions& opts,
                           unsigned workers = 0);

/// Fractional 1-sigma uncertainty of the sigma_z component d cos(theta),
/// propagated from the (d, theta) covariance block.
double sigma_z_component_fractional(const FitResult& fit);

void write_scaling_csv(const ScalingStudy& study, const std::string& path);

}  // namespace hamid
