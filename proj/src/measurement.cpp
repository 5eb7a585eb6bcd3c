#include "hamid/measurement.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "hamid/rng.hpp"

namespace hamid {

void ExperimentConfig::validate() const {
  if (!(dt > 0.0)) throw config_error("dt must be > 0");
  if (n_t < 2) throw config_error("n_t must be >= 2");
  if (n_e < 1) throw config_error("n_e must be >= 1");
  if (!(eta >= 0.0 && eta < 0.5)) throw config_error("eta must lie in [0, 0.5)");
  if (init_z != 1 && init_z != -1) throw config_error("init_z must be +1 or -1");
}

double up_probability(double z, double eta) {
  return 0.5 * (1.0 + (1.0 - 2.0 * eta) * z);
}

namespace {

TimeSeries sample_trajectory(const std::vector<BlochVector>& traj,
                             const ExperimentConfig& cfg,
                             std::uint64_t stream_salt) {
  TimeSeries ts;
  ts.n_e = cfg.n_e;
  ts.times.reserve(traj.size());
  ts.z_mean.reserve(traj.size());
  ts.up_counts.reserve(traj.size());

  for (std::size_t k = 0; k < traj.size(); ++k) {
    const double z = traj[k].z();
    const double p = up_probability(z, cfg.eta);
    if (p < -1e-9 || p > 1.0 + 1e-9)
      throw config_error("outcome probability outside [0,1]: inconsistent inputs");
    const double pc = std::min(1.0, std::max(0.0, p));

    auto rng = derive_stream(cfg.seed ^ stream_salt, k);
    std::binomial_distribution<std::uint64_t> bin(cfg.n_e, pc);
    const std::uint64_t up = bin(rng);

    ts.times.push_back(static_cast<double>(k) * cfg.dt);
    ts.up_counts.push_back(up);
    ts.z_mean.push_back(2.0 * static_cast<double>(up) / static_cast<double>(cfg.n_e) - 1.0);
  }
  return ts;
}

}  // namespace

TimeSeries sample_experiment(const HamiltonianParams& h,
                             const DecoherenceRates& rates,
                             const ExperimentConfig& cfg) {
  cfg.validate();
  const BlochVector init(0.0, 0.0, static_cast<double>(cfg.init_z));
  const auto traj = propagate(h, rates, init, cfg.dt, cfg.n_t);
  return sample_trajectory(traj, cfg, 0);
}

std::pair<TimeSeries, TimeSeries> sample_aux_experiment(
    const DecoherenceRates& rates, const ExperimentConfig& cfg) {
  cfg.validate();
  // Binning by the preceding measurement result is statistically the same as
  // conditioning on a projected initial state, so each branch is a d = 0 run
  // from z = +1 and z = -1 on the shared grid.
  const HamiltonianParams no_drive{0.0, 0.0};
  ExperimentConfig up_cfg = cfg;
  up_cfg.init_z = +1;
  ExperimentConfig down_cfg = cfg;
  down_cfg.init_z = -1;

  const auto traj_up =
      propagate(no_drive, rates, BlochVector(0, 0, 1), cfg.dt, cfg.n_t);
  const auto traj_down =
      propagate(no_drive, rates, BlochVector(0, 0, -1), cfg.dt, cfg.n_t);
  return {sample_trajectory(traj_up, up_cfg, 0x75ULL),
          sample_trajectory(traj_down, down_cfg, 0xd5ULL)};
}

void write_series_csv(const TimeSeries& ts, std::ostream& os) {
  os << "t,z_mean,up_counts,n_e\n";
  char buf[128];
  for (std::size_t k = 0; k < ts.size(); ++k) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%llu,%zu\n", ts.times[k],
                  ts.z_mean[k],
                  static_cast<unsigned long long>(ts.up_counts[k]), ts.n_e);
    os << buf;
  }
}

void write_series_csv(const TimeSeries& ts, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open for writing: " + path);
  write_series_csv(ts, os);
}

TimeSeries read_series_csv(std::istream& is) {
  TimeSeries ts;
  std::string line;
  if (!std::getline(is, line) || line.rfind("t,z_mean", 0) != 0)
    throw std::runtime_error("bad series CSV header");
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    double t, z;
    unsigned long long up;
    unsigned long long ne;
    if (std::sscanf(line.c_str(), "%lg,%lg,%llu,%llu", &t, &z, &up, &ne) != 4)
      throw std::runtime_error("bad series CSV row: " + line);
    ts.times.push_back(t);
    ts.z_mean.push_back(z);
    ts.up_counts.push_back(up);
    ts.n_e = static_cast<std::size_t>(ne);
  }
  if (ts.size() < 2) throw std::runtime_error("series CSV too short");
  return ts;
}

TimeSeries read_series_csv(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open: " + path);
  return read_series_csv(is);
}

}  // namespace hamid
