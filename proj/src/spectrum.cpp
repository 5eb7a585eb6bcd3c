#include "hamid/spectrum.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <stdexcept>

namespace hamid {

namespace {

bool is_pow2(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

// Iterative radix-2 FFT with the +i kernel, in place.
void fft_pow2(std::vector<std::complex<double>>& a) {
  const std::size_t n = a.size();
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const double ang = 2.0 * std::numbers::pi / static_cast<double>(len);
    const std::complex<double> wl(std::cos(ang), std::sin(ang));
    for (std::size_t i = 0; i < n; i += len) {
      std::complex<double> w(1.0, 0.0);
      for (std::size_t j = 0; j < len / 2; ++j) {
        const std::complex<double> u = a[i + j];
        const std::complex<double> v = a[i + j + len / 2] * w;
        a[i + j] = u + v;
        a[i + j + len / 2] = u - v;
        w *= wl;
      }
    }
  }
}

std::vector<std::complex<double>> dft_direct(const std::vector<double>& x) {
  const std::size_t n = x.size();
  std::vector<std::complex<double>> out(n);
  const double step = 2.0 * std::numbers::pi / static_cast<double>(n);
  for (std::size_t m = 0; m < n; ++m) {
    std::complex<double> acc(0.0, 0.0);
    for (std::size_t k = 0; k < n; ++k) {
      // exponent reduced mod n to keep the kernel exactly periodic
      const double ang = step * static_cast<double>((k * m) % n);
      acc += x[k] * std::complex<double>(std::cos(ang), std::sin(ang));
    }
    out[m] = acc;
  }
  return out;
}

}  // namespace

Spectrum dft(const std::vector<double>& samples, double dt,
             std::optional<std::size_t> pad_to) {
  if (samples.size() < 2) throw config_error("dft: series length >= 2 required");
  const std::size_t n0 = samples.size();
  std::size_t n = n0;
  if (pad_to) {
    if (*pad_to < n0) throw config_error("dft: pad_to smaller than series");
    n = *pad_to;
  }

  std::vector<std::complex<double>> vals;
  if (is_pow2(n) && n >= 64) {
    std::vector<std::complex<double>> a(n, {0.0, 0.0});
    for (std::size_t k = 0; k < n0; ++k) a[k] = samples[k];
    fft_pow2(a);
    vals = std::move(a);
  } else {
    std::vector<double> x(samples);
    x.resize(n, 0.0);
    vals = dft_direct(x);
  }

  Spectrum sp;
  sp.n_original = n0;
  sp.dt = dt;
  sp.values.resize(n);
  sp.omega.resize(n);
  const double dw = 2.0 * std::numbers::pi / (static_cast<double>(n) * dt);
  const double inv_n = 1.0 / static_cast<double>(n);
  for (std::size_t m = 0; m < n; ++m) {
    sp.values[m] = vals[m] * inv_n;
    sp.omega[m] = dw * static_cast<double>(m);
  }
  return sp;
}

Spectrum dft(const TimeSeries& series, std::optional<std::size_t> pad_to) {
  const double dt = series.size() >= 2 ? series.times[1] - series.times[0] : 0.0;
  return dft(series.z_mean, dt, pad_to);
}

std::complex<double> spectrum_sum(const Spectrum& sp) {
  std::complex<double> acc(0.0, 0.0);
  for (const auto& v : sp.values) acc += v;
  return acc;
}

EtaEstimate estimate_eta(const Spectrum& sp, double z_inf, double noise_sigma) {
  const double raw = 0.5 * (1.0 - (spectrum_sum(sp).real() + z_inf));
  EtaEstimate est;
  est.suspicious = raw < -3.0 * noise_sigma;
  est.eta = std::min(std::nextafter(0.5, 0.0), std::max(0.0, raw));
  return est;
}

NoiseFloor noise_floor(
    const Spectrum& sp,
    const std::vector<std::pair<std::size_t, std::size_t>>& signal_windows) {
  double sum = 0.0, sum2 = 0.0;
  std::size_t count = 0;
  for (std::size_t m = 0; m < sp.size(); ++m) {
    bool masked = false;
    for (const auto& [lo, hi] : signal_windows)
      if (m >= lo && m <= hi) { masked = true; break; }
    if (masked) continue;
    const double v = std::abs(sp.values[m]);
    sum += v;
    sum2 += v * v;
    ++count;
  }
  if (count * 2 < sp.size())
    throw config_error("noise_floor: signal windows cover >= 50% of bins");
  NoiseFloor nf;
  nf.mean = sum / static_cast<double>(count);
  nf.sigma = std::sqrt(std::max(0.0, sum2 / static_cast<double>(count) -
                                         nf.mean * nf.mean));
  return nf;
}

PeakEstimate find_peak(const Spectrum& sp, std::size_t exclude_dc_bins) {
  if (exclude_dc_bins < 1) throw config_error("find_peak: exclude_dc_bins >= 1");
  const std::size_t ny = sp.nyquist_bin();
  std::size_t best = 0;
  double best_mag = -1.0;
  for (std::size_t m = exclude_dc_bins; m <= ny; ++m) {
    const double v = std::abs(sp.values[m]);
    if (v > best_mag) { best_mag = v; best = m; }
  }
  if (best_mag < 0.0) throw no_peak_error("find_peak: empty search range");

  // noise floor excluding DC window and a neighborhood of the candidate,
  // mirrored onto the negative-frequency half
  const std::size_t n = sp.size();
  const std::size_t halfwin = std::max<std::size_t>(4, n / 128);
  std::vector<std::pair<std::size_t, std::size_t>> windows;
  windows.emplace_back(0, exclude_dc_bins);
  windows.emplace_back(n - std::min(n - 1, exclude_dc_bins), n - 1);
  windows.emplace_back(best > halfwin ? best - halfwin : 0, best + halfwin);
  windows.emplace_back(n - 1 - std::min(n - 1, best + halfwin),
                       n - 1 - (best > halfwin ? best - halfwin : 0));
  const NoiseFloor nf = noise_floor(sp, windows);
  if (best_mag <= nf.mean + 5.0 * nf.sigma)
    throw no_peak_error("find_peak: maximum does not exceed noise floor + 5 sigma");

  PeakEstimate pe;
  pe.bin = best;
  pe.height = best_mag;
  pe.omega_peak = sp.omega[best];

  // sub-bin refinement: parabola through log|value| at the three bins
  if (best > exclude_dc_bins && best < ny) {
    const double lm = std::log(std::abs(sp.values[best - 1]) + 1e-300);
    const double l0 = std::log(best_mag + 1e-300);
    const double lp = std::log(std::abs(sp.values[best + 1]) + 1e-300);
    const double denom = lm - 2.0 * l0 + lp;
    if (denom < 0.0) {
      const double delta = 0.5 * (lm - lp) / denom;
      if (std::abs(delta) < 1.0) {
        const double dw = sp.omega[1] - sp.omega[0];
        pe.omega_peak += delta * dw;
      }
    }
  }
  return pe;
}

void write_spectrum_csv(const Spectrum& sp, std::ostream& os) {
  os << "omega,re,im,abs\n";
  char buf[160];
  for (std::size_t m = 0; m < sp.size(); ++m) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g\n", sp.omega[m],
                  sp.values[m].real(), sp.values[m].imag(),
                  std::abs(sp.values[m]));
    os << buf;
  }
}

void write_spectrum_csv(const Spectrum& sp, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open for writing: " + path);
  write_spectrum_csv(sp, os);
}

}  // namespace hamid
