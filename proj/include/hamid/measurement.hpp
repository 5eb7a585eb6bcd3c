#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "hamid/bloch.hpp"
#include "hamid/types.hpp"

namespace hamid {

/// One coherent-oscillation experiment: n_t time points spaced dt, each
/// re-initialized and measured n_e times.  Total measurement count
/// N_T = n_t * n_e; observation time t_ob = n_t * dt.
struct ExperimentConfig {
  double dt = 0.015;
  std::size_t n_t = 1000;
  std::size_t n_e = 50;
  double eta = 0.0;       // combined init/measurement bit-flip probability
  int init_z = +1;        // +1 or -1
  std::uint64_t seed = 0;

  std::size_t total_measurements() const { return n_t * n_e; }
  double observation_time() const { return static_cast<double>(n_t) * dt; }
  void validate() const;
};

/// Ensemble-averaged strong-measurement record on a uniform time grid.
/// z_mean[k] = 2 up_counts[k] / n_e - 1 exactly.
struct TimeSeries {
  std::vector<double> times;
  std::vector<double> z_mean;
  std::vector<std::uint64_t> up_counts;
  std::size_t n_e = 0;

  std::size_t size() const { return times.size(); }
};

/// Outcome probability of measuring +1 on a state with z-projection z under
/// bit-flip error probability eta: p+ = (1 + (1 - 2 eta) z) / 2.
double up_probability(double z, double eta);

/// Simulates the initialize-evolve-measure protocol.  Binomial sampling per
/// time point on the exact master-equation trajectory; per-point RNG streams
/// derived from cfg.seed.
TimeSeries sample_experiment(const HamiltonianParams& h,
                             const DecoherenceRates& rates,
                             const ExperimentConfig& cfg);

/// Relaxation-only (d = 0) experiment binned by the initializing measurement
/// result.  Returns the z(0)=+1 and z(0)=-1 branches on the shared grid.
std::pair<TimeSeries, TimeSeries> sample_aux_experiment(
    const DecoherenceRates& rates, const ExperimentConfig& cfg);

void write_series_csv(const TimeSeries& ts, std::ostream& os);
void write_series_csv(const TimeSeries& ts, const std::string& path);
TimeSeries read_series_csv(std::istream& is);
TimeSeries read_series_csv(const std::string& path);

}  // namespace hamid
