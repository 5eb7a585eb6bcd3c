#include "hamid/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <thread>

#include "hamid/bloch.hpp"
#include "hamid/rng.hpp"

namespace hamid {

namespace {

std::size_t next_pow2(std::size_t n) {
  std::size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

double tail_mean(const std::vector<double>& v) {
  const std::size_t n = v.size();
  const std::size_t start = n - std::max<std::size_t>(1, n / 10);
  double acc = 0.0;
  for (std::size_t k = start; k < n; ++k) acc += v[k];
  return acc / static_cast<double>(n - start);
}

}  // namespace

ModelParams initial_estimates(const Spectrum& sp, ModelKind kind) {
  ModelParams p;
  const PeakEstimate peak = find_peak(sp);
  p.h.d = peak.omega_peak;

  const double f0 = std::abs(sp.values[0]);
  const double ratio = f0 / std::max(f0 + 2.0 * peak.height, 1e-300);
  p.h.theta = std::acos(std::sqrt(std::min(1.0, std::max(0.0, ratio))));
  p.h.theta = std::min(std::max(p.h.theta, 0.05), std::numbers::pi - 0.05);

  // half-width of |Z| is sqrt(3) gamma_z for the near-resonance Lorentzian
  const double dw = sp.omega[1] - sp.omega[0];
  const std::size_t ny = sp.nyquist_bin();
  std::size_t lo = peak.bin, hi = peak.bin;
  while (lo > 1 && std::abs(sp.values[lo]) > 0.5 * peak.height) --lo;
  while (hi < ny && std::abs(sp.values[hi]) > 0.5 * peak.height) ++hi;
  const double hwhm = 0.5 * static_cast<double>(hi - lo) * dw;
  if (kind != ModelKind::delta)
    p.rates.gamma_z = std::max(hwhm / std::sqrt(3.0), 0.1 * dw);

  // impulse constant of the grid-scaled transform: C_F = z(0) / dt
  const double z0 = spectrum_sum(sp).real();
  p.amplitude = std::max(std::abs(z0), 0.1) / sp.dt;
  return p;
}

CharacterizationResult characterize_series(const TimeSeries& series,
                                           const CharacterizationOptions& opts) {
  CharacterizationResult res;

  // shift by the steady state so the padded tail continues the decayed record
  double z_shift = 0.0;
  if (opts.kind == ModelKind::general) z_shift = tail_mean(series.z_mean);
  res.z_shift = z_shift;

  std::vector<double> shifted(series.z_mean);
  for (auto& v : shifted) v -= z_shift;
  const double dt = series.times[1] - series.times[0];

  // pad only when the tail has settled onto the shift value
  bool pad = opts.allow_padding;
  if (pad) {
    const double tail = tail_mean(shifted);
    const double ne = static_cast<double>(std::max<std::size_t>(series.n_e, 1));
    const double tail_sigma =
        std::sqrt(1.0 / (ne * std::max<double>(1.0, static_cast<double>(series.size() / 10))));
    if (std::abs(tail) > 3.0 * std::max(tail_sigma, 1e-12) + 1e-12) {
      pad = false;
      res.padding_skipped_unsettled = true;
    }
  }
  const std::size_t pad_to = pad ? next_pow2(2 * shifted.size()) : shifted.size();

  res.spectrum = dft(shifted, dt, pad ? std::optional<std::size_t>(pad_to)
                                      : std::nullopt);
  res.padded = pad;

  ModelParams init = initial_estimates(res.spectrum, opts.kind);
  if (opts.kind == ModelKind::general) {
    if (opts.constraints.sum_gamma && opts.constraints.ratio_gamma) {
      init.rates.gamma_plus =
          *opts.constraints.sum_gamma / (1.0 + *opts.constraints.ratio_gamma);
      init.rates.gamma_minus = *opts.constraints.sum_gamma - init.rates.gamma_plus;
    } else {
      init.rates.gamma_plus = std::max(0.25 * init.rates.gamma_z, 1e-4);
      init.rates.gamma_minus = init.rates.gamma_plus;
    }
  }

  res.fit = iterative_refit(res.spectrum, opts.kind, init, opts.constraints);

  // off-peak noise floor, masking DC and both peak images
  const std::size_t n = res.spectrum.size();
  const std::size_t halfwin = std::max<std::size_t>(4, n / 64);
  const std::size_t pk = static_cast<std::size_t>(std::round(
      res.fit.estimates.h.d / (res.spectrum.omega[1] - res.spectrum.omega[0])));
  std::vector<std::pair<std::size_t, std::size_t>> windows;
  windows.emplace_back(0, halfwin);
  windows.emplace_back(n - 1 - halfwin, n - 1);
  if (pk > halfwin && pk + halfwin < n) {
    windows.emplace_back(pk - halfwin, pk + halfwin);
    windows.emplace_back(n - 1 - (pk + halfwin), n - 1 - (pk - halfwin));
  }
  res.noise = noise_floor(res.spectrum, windows);

  res.eta = estimate_eta(res.spectrum, z_shift, res.noise.sigma);

  // |value| of white complex noise is Rayleigh: mean = sigma_c sqrt(pi/2);
  // residuals live on the grid-scaled bins N * values
  const double sigma_component =
      static_cast<double>(res.spectrum.size()) * res.noise.mean /
      std::sqrt(std::numbers::pi / 2.0);
  const double predicted_norm =
      sigma_component * std::sqrt(static_cast<double>(res.fit.residual_count));
  res.model_mismatch =
      predicted_norm > 0.0 && res.fit.residual_norm > 5.0 * predicted_norm;
  return res;
}

double sigma_z_component_fractional(const FitResult& fit) {
  const auto& names = fit.free_names;
  const auto idx = [&](const std::string& n) -> Eigen::Index {
    const auto it = std::find(names.begin(), names.end(), n);
    if (it == names.end()) return -1;
    return static_cast<Eigen::Index>(it - names.begin());
  };
  const Eigen::Index id = idx("d");
  const Eigen::Index it = idx("theta");
  const double d = fit.estimates.h.d;
  const double theta = fit.estimates.h.theta;
  const double comp = d * std::cos(theta);
  if (comp == 0.0) return std::numeric_limits<double>::quiet_NaN();

  const double scale2 =
      fit.residual_norm * fit.residual_norm /
      static_cast<double>(fit.residual_count - names.size());
  // gradient of d cos(theta) in (d, theta)
  double var = 0.0;
  const double gd = std::cos(theta);
  const double gt = -d * std::sin(theta);
  if (id >= 0) var += gd * gd * fit.covariance(id, id);
  if (it >= 0) var += gt * gt * fit.covariance(it, it);
  if (id >= 0 && it >= 0) var += 2.0 * gd * gt * fit.covariance(id, it);
  return std::sqrt(std::max(0.0, var) * scale2) / std::abs(comp);
}

ScalingStudy scaling_study(const HamiltonianParams& truth_h,
                           const DecoherenceRates& truth_rates,
                           const ExperimentConfig& base,
                           const std::vector<std::size_t>& n_e_values,
                           std::size_t seeds_per_cell,
                           const CharacterizationOptions& opts,
                           unsigned workers) {
  if (n_e_values.size() < 2)
    throw config_error("scaling_study: need >= 2 ensemble sizes");

  const std::vector<std::string> tracked{"d", "theta", "gamma_z", "sigma_z_component"};
  ScalingStudy study;
  study.cells.resize(n_e_values.size());

  struct Replicate {
    std::size_t cell;
    std::uint64_t seed;
    bool ok = false;
    std::map<std::string, double> frac;
  };
  std::vector<Replicate> reps;
  for (std::size_t c = 0; c < n_e_values.size(); ++c)
    for (std::size_t s = 0; s < seeds_per_cell; ++s)
      reps.push_back({c, splitmix64(base.seed ^ (0x5ca1e5ULL + c * 1000 + s)), false, {}});

  const auto run_one = [&](Replicate& rep) {
    ExperimentConfig cfg = base;
    cfg.n_e = n_e_values[rep.cell];
    cfg.seed = rep.seed;
    try {
      const TimeSeries series = sample_experiment(truth_h, truth_rates, cfg);
      const CharacterizationResult cr = characterize_series(series, opts);
      if (!cr.fit.converged) return;
      const auto conf = confidence_intervals(cr.fit, 1.0);
      for (const auto& name : {"d", "theta", "gamma_z"}) {
        const auto it = conf.find(name);
        if (it == conf.end()) continue;
        const double est = std::abs([&] {
          if (std::string(name) == "d") return cr.fit.estimates.h.d;
          if (std::string(name) == "theta") return cr.fit.estimates.h.theta;
          return cr.fit.estimates.rates.gamma_z;
        }());
        if (est > 0.0) rep.frac[name] = it->second / est;
      }
      const double zc = sigma_z_component_fractional(cr.fit);
      if (std::isfinite(zc)) rep.frac["sigma_z_component"] = zc;
      rep.ok = true;
    } catch (const std::exception&) {
      rep.ok = false;
    }
  };

  const unsigned n_workers =
      workers > 0 ? workers
                  : std::max(1u, std::thread::hardware_concurrency());
  if (n_workers <= 1) {
    for (auto& rep : reps) run_one(rep);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < n_workers; ++w)
      pool.emplace_back([&] {
        for (;;) {
          const std::size_t i = next.fetch_add(1);
          if (i >= reps.size()) return;
          run_one(reps[i]);
        }
      });
    for (auto& th : pool) th.join();
  }

  for (std::size_t c = 0; c < n_e_values.size(); ++c) {
    ScalingCell& cell = study.cells[c];
    cell.n_e = n_e_values[c];
    cell.n_total = n_e_values[c] * base.n_t;
    std::map<std::string, std::vector<double>> samples;
    for (const auto& rep : reps) {
      if (rep.cell != c) continue;
      if (!rep.ok) {
        ++cell.excluded;
        continue;
      }
      ++cell.converged;
      for (const auto& [name, v] : rep.frac) samples[name].push_back(v);
    }
    for (const auto& [name, vals] : samples) {
      double mean = 0.0;
      for (double v : vals) mean += v;
      mean /= static_cast<double>(vals.size());
      double var = 0.0;
      for (double v : vals) var += (v - mean) * (v - mean);
      var /= static_cast<double>(std::max<std::size_t>(1, vals.size() - 1));
      cell.frac_mean[name] = mean;
      cell.frac_sd[name] = std::sqrt(var);
    }
  }

  // log-log regression of mean fractional uncertainty against N_T
  for (const auto& name : tracked) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    std::size_t n = 0;
    for (const auto& cell : study.cells) {
      const auto it = cell.frac_mean.find(name);
      if (it == cell.frac_mean.end() || !(it->second > 0.0)) continue;
      const double x = std::log(static_cast<double>(cell.n_total));
      const double y = std::log(it->second);
      sx += x; sy += y; sxx += x * x; sxy += x * y;
      ++n;
    }
    if (n >= 2) {
      const double det = static_cast<double>(n) * sxx - sx * sx;
      study.loglog_slope[name] = (static_cast<double>(n) * sxy - sx * sy) / det;
    }
  }
  return study;
}

void write_scaling_csv(const ScalingStudy& study, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open for writing: " + path);
  os << "n_total,param,frac_uncertainty_mean,frac_uncertainty_sd\n";
  char buf[160];
  for (const auto& cell : study.cells) {
    for (const auto& [name, mean] : cell.frac_mean) {
      const double sd = cell.frac_sd.count(name) ? cell.frac_sd.at(name) : 0.0;
      std::snprintf(buf, sizeof buf, "%zu,%s,%.17g,%.17g\n", cell.n_total,
                    name.c_str(), mean, sd);
      os << buf;
    }
  }
  os << "# loglog_slope";
  for (const auto& [name, slope] : study.loglog_slope) {
    std::snprintf(buf, sizeof buf, " %s=%.6g", name.c_str(), slope);
    os << buf;
  }
  os << "\n";
}

}  // namespace hamid
