#include "hamid/models.hpp"

#include <cmath>
#include <stdexcept>

#include "hamid/bloch.hpp"

namespace hamid {

namespace {
constexpr std::complex<double> kI{0.0, 1.0};
constexpr double kPoleGuard = 1e-14;
}  // namespace

double model_delta(const ModelParams& p, double omega, double tol) {
  const double s2 = std::pow(std::sin(p.h.theta), 2);
  if (std::abs(omega) <= tol) return p.amplitude * (1.0 - s2);
  if (std::abs(std::abs(omega) - p.h.d) <= tol) return p.amplitude * 0.5 * s2;
  return 0.0;
}

std::complex<double> model_dephasing(const ModelParams& p, double omega) {
  const double d = p.h.d;
  const double s2 = std::pow(std::sin(p.h.theta), 2);
  const double c2 = 1.0 - s2;
  const std::complex<double> iw = kI * omega;
  const std::complex<double> g = 2.0 * p.rates.gamma_z + iw;
  const std::complex<double> den = iw + d * d * g * s2 / (g * g + d * d * c2);
  if (std::abs(den) < kPoleGuard)
    throw std::domain_error("model_dephasing: pole at evaluation point");
  return std::conj(p.amplitude / den);
}

std::complex<double> model_general(const ModelParams& p, double omega) {
  if (p.rates.gamma_plus == 0.0 && p.rates.gamma_minus == 0.0)
    return model_dephasing(p, omega);

  const double d = p.h.d;
  const double a = d * std::sin(p.h.theta);
  const double c = d * std::cos(p.h.theta);
  const double gp = p.rates.gamma_plus;
  const double gm = p.rates.gamma_minus;
  const double cf = p.amplitude;

  const BlochVector inf = steady_state(p.h, p.rates);
  const double x_inf = inf.x();
  const double y_inf = inf.y();
  const double z_inf = inf.z();

  const auto m_of = [&](double w) -> std::complex<double> {
    return 2.0 * kI * w + 4.0 * p.rates.gamma_z + gp + gm;
  };
  const auto l_of = [&](double w) -> std::complex<double> {
    return ((cf - kI * w) * (y_inf + kI * x_inf) - a * z_inf) /
           (m_of(w) - 2.0 * kI * c);
  };

  const std::complex<double> m = m_of(omega);
  const std::complex<double> den =
      kI * omega + gp + gm +
      2.0 * d * d * m * std::pow(std::sin(p.h.theta), 2) / (m * m + 4.0 * c * c);
  if (std::abs(den) < kPoleGuard)
    throw std::domain_error("model_general: pole at evaluation point");

  const std::complex<double> num = (cf + gp) * (1.0 - z_inf) -
                                   gm * (1.0 + z_inf) -
                                   a * (l_of(omega) + std::conj(l_of(-omega)));
  return std::conj(num / den);
}

std::complex<double> eval_model(ModelKind kind, const ModelParams& p,
                                double omega, double delta_tol) {
  switch (kind) {
    case ModelKind::delta:
      return {model_delta(p, omega, delta_tol), 0.0};
    case ModelKind::dephasing:
      return model_dephasing(p, omega);
    case ModelKind::general:
      return model_general(p, omega);
  }
  throw std::logic_error("eval_model: unknown kind");
}

}  // namespace hamid
