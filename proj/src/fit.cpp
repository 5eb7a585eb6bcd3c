#include "hamid/fit.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <sstream>

#include "hamid/bloch.hpp"
#include "hamid/expm.hpp"

namespace hamid {

namespace {

constexpr double kLogFloor = 1e-12;

bool is_log_param(const std::string& name) { return name != "theta"; }

double get_param(const ModelParams& p, const std::string& name) {
  if (name == "d") return p.h.d;
  if (name == "theta") return p.h.theta;
  if (name == "gamma_z") return p.rates.gamma_z;
  if (name == "gamma_plus") return p.rates.gamma_plus;
  if (name == "gamma_minus") return p.rates.gamma_minus;
  if (name == "amplitude") return p.amplitude;
  throw std::logic_error("unknown parameter: " + name);
}

void set_param(ModelParams& p, const std::string& name, double v) {
  if (name == "d") p.h.d = v;
  else if (name == "theta") p.h.theta = v;
  else if (name == "gamma_z") p.rates.gamma_z = v;
  else if (name == "gamma_plus") p.rates.gamma_plus = v;
  else if (name == "gamma_minus") p.rates.gamma_minus = v;
  else if (name == "amplitude") p.amplitude = v;
  else throw std::logic_error("unknown parameter: " + name);
}

enum class RateMode { both_free, plus_free_ratio, plus_free_sum, pinned };

struct ParamSpace {
  ModelKind kind;
  FitConstraints constraints;
  ModelParams base;
  std::vector<std::string> free_names;
  RateMode rate_mode = RateMode::pinned;

  ParamSpace(ModelKind k, const ModelParams& init, const FitConstraints& c)
      : kind(k), constraints(c), base(init) {
    std::vector<std::string> candidates{"d", "theta", "amplitude"};
    if (k != ModelKind::delta) candidates.insert(candidates.begin() + 2, "gamma_z");
    for (const auto& n : candidates)
      if (!c.fixed.count(n)) free_names.push_back(n);
    for (const auto& [name, value] : c.fixed) set_param(base, name, value);

    if (k == ModelKind::general) {
      const bool plus_fixed = c.fixed.count("gamma_plus") > 0;
      const bool minus_fixed = c.fixed.count("gamma_minus") > 0;
      if (plus_fixed && minus_fixed) {
        rate_mode = RateMode::pinned;
      } else if (c.ratio_gamma && c.sum_gamma) {
        rate_mode = RateMode::pinned;
        base.rates.gamma_plus = *c.sum_gamma / (1.0 + *c.ratio_gamma);
        base.rates.gamma_minus = *c.sum_gamma - base.rates.gamma_plus;
      } else if (c.sum_gamma) {
        rate_mode = RateMode::plus_free_sum;
        free_names.push_back("gamma_plus");
      } else if (c.ratio_gamma) {
        rate_mode = RateMode::plus_free_ratio;
        free_names.push_back("gamma_plus");
      } else {
        rate_mode = RateMode::both_free;
        free_names.push_back("gamma_plus");
        free_names.push_back("gamma_minus");
      }
    }
  }

  ModelParams unpack_raw(const Eigen::VectorXd& x,
                         const std::vector<std::string>& names) const {
    ModelParams p = base;
    for (std::size_t i = 0; i < names.size(); ++i) {
      const double v =
          is_log_param(names[i]) ? std::exp(x[static_cast<Eigen::Index>(i)])
                                 : x[static_cast<Eigen::Index>(i)];
      set_param(p, names[i], v);
    }
    if (rate_mode == RateMode::plus_free_sum)
      p.rates.gamma_minus = std::max(0.0, *constraints.sum_gamma - p.rates.gamma_plus);
    else if (rate_mode == RateMode::plus_free_ratio)
      p.rates.gamma_minus = *constraints.ratio_gamma * p.rates.gamma_plus;
    return p;
  }

  Eigen::VectorXd pack(const ModelParams& p,
                       const std::vector<std::string>& names) const {
    Eigen::VectorXd x(static_cast<Eigen::Index>(names.size()));
    for (std::size_t i = 0; i < names.size(); ++i) {
      const double v = get_param(p, names[i]);
      x[static_cast<Eigen::Index>(i)] =
          is_log_param(names[i]) ? std::log(std::max(v, kLogFloor)) : v;
    }
    return x;
  }
};

// Exact expectation of the grid-scaled transform of the sampled, truncated
// record: sum_{k < n_sig} e^{i omega k dt} e_z^T M^k (r0 - r_inf), with
// M = exp(G dt) and r0 = (0, 0, amplitude dt).  This is the continuum
// transform evaluated consistently with how the data were transformed: the
// continuum formulas carry a discretization and record-truncation bias that
// exceeds the projection noise on typical grids, which would bias the
// estimates and break interval coverage.
class DiscreteModel {
 public:
  DiscreteModel(const ModelParams& p, double dt, std::size_t n_sig)
      : n_sig_(static_cast<double>(n_sig)) {
    const AffineGenerator gen = build_generator(p.h, p.rates);
    const Eigen::Matrix3d m = expm(gen.linear_part * dt);
    const Eigen::EigenSolver<Eigen::Matrix3d> es(m);
    if (es.info() != Eigen::Success)
      throw std::domain_error("DiscreteModel: eigendecomposition failed");
    lambda_ = es.eigenvalues();
    Eigen::Vector3d shift = Eigen::Vector3d::Zero();
    if (p.rates.sum_pm() > 0.0) shift = steady_state(p.h, p.rates);
    const Eigen::Vector3cd v0{-shift.x(), -shift.y(),
                              p.amplitude * dt - shift.z()};
    const Eigen::Matrix3cd vmat = es.eigenvectors();
    const Eigen::Vector3cd rhs = vmat.partialPivLu().solve(v0);
    for (int j = 0; j < 3; ++j) {
      weights_[j] = vmat(2, j) * rhs[j];
      lambda_pow_[j] = std::pow(lambda_[j], n_sig_);
    }
    dt_ = dt;
  }

  std::complex<double> operator()(double omega) const {
    const double phi = omega * dt_;
    const std::complex<double> e{std::cos(phi), std::sin(phi)};
    const std::complex<double> en{std::cos(phi * n_sig_),
                                  std::sin(phi * n_sig_)};
    std::complex<double> acc = 0.0;
    for (int j = 0; j < 3; ++j) {
      const std::complex<double> q = e * lambda_[j];
      const std::complex<double> den = 1.0 - q;
      if (std::abs(den) < 1e-12) {
        acc += weights_[j] * n_sig_;  // undamped on-grid resonance
      } else {
        acc += weights_[j] * (1.0 - en * lambda_pow_[j]) / den;
      }
    }
    return acc;
  }

 private:
  Eigen::Vector3cd lambda_;
  Eigen::Vector3cd weights_;
  std::array<std::complex<double>, 3> lambda_pow_;
  double n_sig_ = 0.0;
  double dt_ = 0.0;
};

ResidualFn make_residual(const Spectrum& data, ModelKind kind,
                         const ParamSpace& space,
                         const std::vector<std::string>& names) {
  const std::size_t ny = data.nyquist_bin();
  const double delta_tol = 0.5 * (data.omega[1] - data.omega[0]);
  // the models predict the grid-scaled bins N * values[m]
  const double scale = static_cast<double>(data.size());
  const std::size_t n_sig =
      data.n_original > 0 ? data.n_original : data.size();
  return [&data, kind, &space, names, ny, delta_tol, scale, n_sig](
             const Eigen::VectorXd& x) -> Eigen::VectorXd {
    Eigen::VectorXd r(2 * static_cast<Eigen::Index>(ny + 1));
    ModelParams p;
    try {
      p = space.unpack_raw(x, names);
      if (kind == ModelKind::delta) {
        for (std::size_t m = 0; m <= ny; ++m) {
          const std::complex<double> model =
              eval_model(kind, p, data.omega[m], delta_tol);
          const std::complex<double> diff = scale * data.values[m] - model;
          r[static_cast<Eigen::Index>(2 * m)] = diff.real();
          r[static_cast<Eigen::Index>(2 * m + 1)] = diff.imag();
        }
      } else {
        const DiscreteModel model(p, data.dt, n_sig);
        for (std::size_t m = 0; m <= ny; ++m) {
          const std::complex<double> diff =
              scale * data.values[m] - model(data.omega[m]);
          r[static_cast<Eigen::Index>(2 * m)] = diff.real();
          r[static_cast<Eigen::Index>(2 * m + 1)] = diff.imag();
        }
      }
    } catch (const std::exception&) {
      r.setConstant(1e6);  // pole or degenerate point: reject the step
    }
    return r;
  };
}

LmOptions bounds_for(const std::vector<std::string>& names, int max_iterations) {
  LmOptions opts;
  opts.max_iterations = max_iterations;
  const auto n = static_cast<Eigen::Index>(names.size());
  opts.lower = Eigen::VectorXd::Constant(n, -std::log(1.0 / kLogFloor));
  opts.upper = Eigen::VectorXd::Constant(n, std::log(1e6));
  for (Eigen::Index i = 0; i < n; ++i) {
    if (names[static_cast<std::size_t>(i)] == "theta") {
      opts.lower[i] = 0.0;
      opts.upper[i] = std::numbers::pi;
    }
  }
  return opts;
}

// covariance in original units: C_x = D C_u D with D = dx/du
Eigen::MatrixXd to_original_units(const Eigen::MatrixXd& cov_u,
                                  const ModelParams& p,
                                  const std::vector<std::string>& names) {
  const auto n = static_cast<Eigen::Index>(names.size());
  Eigen::VectorXd scale(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& name = names[static_cast<std::size_t>(i)];
    scale[i] = is_log_param(name) ? get_param(p, name) : 1.0;
  }
  return scale.asDiagonal() * cov_u * scale.asDiagonal();
}

void canonicalize_theta(FitResult& fr) {
  if (fr.estimates.h.theta > 0.5 * std::numbers::pi) {
    fr.estimates.h.theta = std::numbers::pi - fr.estimates.h.theta;
    fr.theta_ambiguous = true;
  }
}

void finish_result(FitResult& fr, ModelKind kind) {
  if (kind == ModelKind::general && !fr.estimates.rates.all_zero()) {
    fr.estimates.z_inf = steady_state(fr.estimates.h, fr.estimates.rates).z();
  } else {
    fr.estimates.z_inf = 0.0;
  }
  canonicalize_theta(fr);
}

}  // namespace

FitResult fit_spectrum(const Spectrum& data, ModelKind kind,
                       const ModelParams& init, const FitConstraints& constraints,
                       const std::vector<std::string>& free_subset,
                       int max_iterations) {
  const ParamSpace space(kind, init, constraints);
  std::vector<std::string> names;
  for (const auto& n : space.free_names)
    if (free_subset.empty() ||
        std::find(free_subset.begin(), free_subset.end(), n) != free_subset.end())
      names.push_back(n);
  if (names.empty()) throw config_error("fit_spectrum: no free parameters");

  const auto residual = make_residual(data, kind, space, names);
  const auto opts = bounds_for(names, max_iterations);
  const LmResult lm = levenberg_marquardt(residual, space.pack(init, names), opts);

  FitResult fr;
  fr.estimates = space.unpack_raw(lm.x, names);
  fr.free_names = names;
  fr.covariance = to_original_units(lm.covariance, fr.estimates, names);
  fr.residual_norm = lm.residual_norm;
  fr.residual_count = 2 * (data.nyquist_bin() + 1);
  fr.iterations = lm.iterations;
  fr.converged = lm.converged;
  finish_result(fr, kind);
  return fr;
}

FitResult iterative_refit(const Spectrum& data, ModelKind kind,
                          const ModelParams& init,
                          const FitConstraints& constraints) {
  const ParamSpace space(kind, init, constraints);

  // single-parameter refit order: peak position, width, height ratio, scale
  std::vector<std::string> order{"d", "gamma_z", "theta", "amplitude",
                                 "gamma_plus", "gamma_minus"};

  ModelParams current = space.unpack_raw(space.pack(init, space.free_names),
                                         space.free_names);
  FitResult joint;
  std::vector<double> cycle_change;
  bool converged = false;
  constexpr int kMaxCycles = 20;
  constexpr double kCycleTol = 1e-6;

  int cycle = 0;
  for (; cycle < kMaxCycles; ++cycle) {
    const Eigen::VectorXd before = space.pack(current, space.free_names);

    for (const auto& name : order) {
      if (std::find(space.free_names.begin(), space.free_names.end(), name) ==
          space.free_names.end())
        continue;
      const FitResult one =
          fit_spectrum(data, kind, current, constraints, {name}, 60);
      current = one.estimates;
      if (one.theta_ambiguous)
        current.h.theta = std::numbers::pi - current.h.theta;  // keep raw branch
    }

    joint = fit_spectrum(data, kind, current, constraints, {}, 200);
    current = joint.estimates;
    if (joint.theta_ambiguous)
      current.h.theta = std::numbers::pi - current.h.theta;

    const Eigen::VectorXd after = space.pack(current, space.free_names);
    const double rel_change =
        (after - before).norm() / std::max(before.norm(), 1e-300);
    cycle_change.push_back(rel_change);
    if (rel_change < kCycleTol) {
      converged = true;
      ++cycle;
      break;
    }
  }

  joint.iterations = cycle;
  joint.converged = converged && joint.converged;
  joint.cycle_change = std::move(cycle_change);
  return joint;
}

AuxDecayFit fit_aux_decay(const TimeSeries& z1, const TimeSeries& zm1) {
  if (z1.size() != zm1.size() || z1.size() < 10)
    throw config_error("fit_aux_decay: branches must share a grid of >= 10 points");
  const std::size_t n = z1.size();

  // tail = last 10% of the record; both branches must have settled onto z(inf)
  const std::size_t tail_start = n - std::max<std::size_t>(1, n / 10);
  double tail1 = 0.0, tail2 = 0.0;
  for (std::size_t k = tail_start; k < n; ++k) {
    tail1 += z1.z_mean[k];
    tail2 += zm1.z_mean[k];
  }
  const double tail_count = static_cast<double>(n - tail_start);
  tail1 /= tail_count;
  tail2 /= tail_count;

  const double ne = static_cast<double>(std::max<std::size_t>(z1.n_e, 1));
  const double proj_sigma =
      std::sqrt(std::max(0.0, (1.0 - tail1 * tail1)) / (ne * tail_count) +
                std::max(0.0, (1.0 - tail2 * tail2)) / (ne * tail_count));
  if (std::abs(tail1 - tail2) > std::max(3.0 * proj_sigma, 1e-6))
    throw tail_not_settled_error(
        "fit_aux_decay: branch tails have not reached the steady state");

  AuxDecayFit out;
  out.z_inf = 0.5 * (tail1 + tail2);

  // weighted least squares on log(z1 - zm1): weight = diff^2 / var(diff)
  double sw = 0, swt = 0, swy = 0, swtt = 0, swty = 0;
  std::size_t used = 0;
  for (std::size_t k = 0; k < n; ++k) {
    const double diff = z1.z_mean[k] - zm1.z_mean[k];
    const double var =
        (std::max(0.0, 1.0 - z1.z_mean[k] * z1.z_mean[k]) +
         std::max(0.0, 1.0 - zm1.z_mean[k] * zm1.z_mean[k])) / ne;
    const double sigma = std::sqrt(var);
    if (diff <= std::max(3.0 * sigma, 1e-14)) continue;
    const double w = var > 0.0 ? diff * diff / var : 1.0;
    const double t = z1.times[k];
    const double y = std::log(diff);
    sw += w;
    swt += w * t;
    swy += w * y;
    swtt += w * t * t;
    swty += w * t * y;
    ++used;
  }
  if (used < 3)
    throw degenerate_steady_state_error(
        "fit_aux_decay: no decaying signal to fit (rates ~ 0?)");
  const double det = sw * swtt - swt * swt;
  if (det <= 0.0)
    throw degenerate_steady_state_error("fit_aux_decay: degenerate regression");
  const double slope = (sw * swty - swt * swy) / det;
  out.gamma_sum = -slope;
  if (out.gamma_sum <= 1e-12)
    throw degenerate_steady_state_error(
        "fit_aux_decay: vanishing decay rate, nothing to fit");

  out.gamma_plus = 0.5 * out.gamma_sum * (1.0 + out.z_inf);
  out.gamma_minus = 0.5 * out.gamma_sum * (1.0 - out.z_inf);
  return out;
}

std::map<std::string, double> confidence_intervals(const FitResult& fit,
                                                   double sigma_level) {
  const std::size_t p = fit.free_names.size();
  if (fit.residual_count <= p)
    throw config_error("confidence_intervals: covariance undefined (m <= p)");
  const double scale2 = fit.residual_norm * fit.residual_norm /
                        static_cast<double>(fit.residual_count - p);
  std::map<std::string, double> out;
  for (std::size_t i = 0; i < p; ++i) {
    const double var =
        fit.covariance(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i));
    out[fit.free_names[i]] =
        sigma_level * std::sqrt(std::max(0.0, var) * scale2);
  }
  return out;
}

std::string fit_result_to_json(const FitResult& fit, double sigma_level,
                               double eta) {
  const auto conf = confidence_intervals(fit, sigma_level);
  std::ostringstream os;
  char buf[64];
  const auto num = [&buf](double v) {
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return std::string(buf);
  };
  os << "{\n  \"estimates\": {";
  os << "\"d\": " << num(fit.estimates.h.d)
     << ", \"theta\": " << num(fit.estimates.h.theta)
     << ", \"gamma_z\": " << num(fit.estimates.rates.gamma_z)
     << ", \"gamma_plus\": " << num(fit.estimates.rates.gamma_plus)
     << ", \"gamma_minus\": " << num(fit.estimates.rates.gamma_minus)
     << ", \"amplitude\": " << num(fit.estimates.amplitude)
     << ", \"z_inf\": " << num(fit.estimates.z_inf)
     << ", \"eta\": " << num(eta) << "},\n  \"confidence\": {";
  bool first = true;
  for (const auto& [name, v] : conf) {
    if (!first) os << ", ";
    os << "\"" << name << "\": " << num(v);
    first = false;
  }
  os << "},\n  \"sigma_level\": " << num(sigma_level)
     << ",\n  \"residual_norm\": " << num(fit.residual_norm)
     << ",\n  \"iterations\": " << fit.iterations
     << ",\n  \"converged\": " << (fit.converged ? "true" : "false")
     << ",\n  \"theta_ambiguous\": " << (fit.theta_ambiguous ? "true" : "false")
     << "\n}\n";
  return os.str();
}

}  // namespace hamid
