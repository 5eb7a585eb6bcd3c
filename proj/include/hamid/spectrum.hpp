#pragma once

#include <complex>
#include <cstddef>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "hamid/measurement.hpp"

namespace hamid {

/// Normalized discrete Fourier transform of a z(t) record:
/// values[n] = (1/N) sum_k z_k exp(+2 pi i k n / N) on omega_n = 2 pi n / (N dt).
/// The upper half of the grid reads as negative frequencies.
struct Spectrum {
  std::vector<double> omega;
  std::vector<std::complex<double>> values;
  std::size_t n_original = 0;  // pre-padding length
  double dt = 0.0;

  std::size_t size() const { return values.size(); }
  std::size_t nyquist_bin() const { return values.size() / 2; }
};

struct PeakEstimate {
  double omega_peak = 0.0;
  double height = 0.0;
  std::size_t bin = 0;
};

struct NoiseFloor {
  double mean = 0.0;
  double sigma = 0.0;
};

struct EtaEstimate {
  double eta = 0.0;
  bool suspicious = false;  // raw estimate negative beyond noise tolerance
};

/// DFT of the (optionally zero-padded) series.  Callers shift by z(inf)
/// before padding so the appended zeros continue the decayed tail.
Spectrum dft(const TimeSeries& series, std::optional<std::size_t> pad_to = {});

/// DFT of a raw sample vector (the series need not carry counts).
Spectrum dft(const std::vector<double>& samples, double dt,
             std::optional<std::size_t> pad_to = {});

/// Sum over all bins; equals the series' initial value exactly (Kronecker
/// delta identity of the normalized DFT).
std::complex<double> spectrum_sum(const Spectrum& sp);

/// eta = (1 - (Re spectrum_sum + z_inf)) / 2, clamped to [0, 0.5).
/// `noise_sigma` sets the suspicious-estimate threshold.
EtaEstimate estimate_eta(const Spectrum& sp, double z_inf,
                         double noise_sigma = 0.0);

/// Largest-magnitude bin in (0, pi/dt], excluding the DC window, refined by
/// three-point parabolic interpolation of log|value|.  Throws no_peak_error
/// when the maximum stays below noise-floor mean + 5 sigma.
PeakEstimate find_peak(const Spectrum& sp, std::size_t exclude_dc_bins = 1);

/// Mean and standard deviation of |value| over bins outside the given
/// [first, last] (inclusive) signal windows.
NoiseFloor noise_floor(const Spectrum& sp,
                       const std::vector<std::pair<std::size_t, std::size_t>>&
                           signal_windows);

void write_spectrum_csv(const Spectrum& sp, std::ostream& os);
void write_spectrum_csv(const Spectrum& sp, const std::string& path);

}  // namespace hamid
