#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "hamid/lm.hpp"
#include "hamid/measurement.hpp"
#include "hamid/models.hpp"
#include "hamid/spectrum.hpp"

namespace hamid {

/// Constraints injected into a fit, typically from the auxiliary (d = 0)
/// experiment.  ratio_gamma is gamma_minus / gamma_plus; together with
/// sum_gamma it pins both relaxation rates.
struct FitConstraints {
  std::map<std::string, double> fixed;  // parameter name -> value
  std::optional<double> ratio_gamma;
  std::optional<double> sum_gamma;
};

struct FitResult {
  ModelParams estimates;
  std::vector<std::string> free_names;
  Eigen::MatrixXd covariance;  // over free parameters, original units
  double residual_norm = 0.0;
  std::size_t residual_count = 0;
  int iterations = 0;  // refit cycles
  bool converged = false;
  bool theta_ambiguous = false;  // theta reported canonically in [0, pi/2]
  std::vector<double> cycle_change;  // per-cycle relative parameter change
};

/// Single LM pass over the given free-parameter subset; rates, d and
/// amplitude move in log space, theta directly with [0, pi] bounds.
FitResult fit_spectrum(const Spectrum& data, ModelKind kind,
                       const ModelParams& init, const FitConstraints& constraints,
                       const std::vector<std::string>& free_subset = {},
                       int max_iterations = 200);

/// Cycles single-parameter refits in order (d, gamma_z, theta, amplitude,
/// then any free relaxation rates), followed by a joint fit, until the full
/// parameter vector moves by < 1e-6 relative or 20 cycles elapse.
FitResult iterative_refit(const Spectrum& data, ModelKind kind,
                          const ModelParams& init,
                          const FitConstraints& constraints = {});

struct AuxDecayFit {
  double gamma_sum = 0.0;
  double z_inf = 0.0;
  double gamma_plus = 0.0;
  double gamma_minus = 0.0;
};

/// Inverts the relaxation-only experiment: weighted log-linear fit of the
/// branch difference for gamma_plus + gamma_minus, tail mean for z(inf),
/// then both rates from the steady-state balance.
AuxDecayFit fit_aux_decay(const TimeSeries& z1, const TimeSeries& zm1);

/// delta_x_i = sigma_level * sqrt(cov_ii * residual_norm^2 / (m - p)).
std::map<std::string, double> confidence_intervals(const FitResult& fit,
                                                   double sigma_level);

std::string fit_result_to_json(const FitResult& fit, double sigma_level,
                               double eta);

}  // namespace hamid
