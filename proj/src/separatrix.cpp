#include "dimer/separatrix.hpp"

#include <cmath>
#include <limits>
#include <mutex>
#include <map>
#include <memory>
#include <numbers>
#include <ostream>
#include <stdexcept>

#include "dimer/errors.hpp"
#include "dimer/meanfield.hpp"
#include "dimer/quadrature.hpp"

namespace dimer {

GaussLegendre::GaussLegendre(std::size_t n) : nodes(n), weights(n) {
  if (n == 0) throw std::invalid_argument("Gauss-Legendre order must be positive");
  for (std::size_t i = 0; i < (n + 1) / 2; ++i) {
    // Tricomi initial guess, Newton on P_n
    double x = std::cos(std::numbers::pi * (static_cast<double>(i) + 0.75) /
                        (static_cast<double>(n) + 0.5));
    double dp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0;
      double p1 = x;
      for (std::size_t k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / static_cast<double>(k);
        p0 = p1;
        p1 = p2;
      }
      dp = static_cast<double>(n) * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    // recompute the derivative at the converged node
    double p0 = 1.0;
    double p1 = x;
    for (std::size_t k = 2; k <= n; ++k) {
      const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / static_cast<double>(k);
      p0 = p1;
      p1 = p2;
    }
    dp = static_cast<double>(n) * (x * p1 - p0) / (x * x - 1.0);
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    nodes[i] = -x;
    nodes[n - 1 - i] = x;
    weights[i] = w;
    weights[n - 1 - i] = w;
  }
  if (n % 2 == 1) nodes[n / 2] = 0.0;
}

const GaussLegendre& gauss_legendre(std::size_t n) {
  static std::mutex mutex;
  static std::map<std::size_t, std::unique_ptr<GaussLegendre>> cache;
  std::lock_guard lock(mutex);
  auto& slot = cache[n];
  if (!slot) slot = std::make_unique<GaussLegendre>(n);
  return *slot;
}

namespace {

constexpr std::size_t kQuadratureNodes = 201;
constexpr std::size_t kCheckNodes = 301;

double require_unstable(const DimerParams& params, const char* what) {
  const auto ls = stability_exponent(params);
  if (!ls.unstable) {
    throw ConfigError(std::string(what) +
                      ": requires gamma = tan(theta) > 2 (hyperbolic antihom. point)");
  }
  return ls.value;
}

double integral_with(std::size_t order, double width) {
  const auto& rule = gauss_legendre(order);
  const double half_pi = 0.5 * std::numbers::pi;
  // x = s tan(theta); s = width for narrow Gaussians, 1 otherwise
  const double s = std::isinf(width) ? 1.0 : std::min(width, 1.0);
  double acc = 0.0;
  for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
    const double th = half_pi * rule.nodes[i];
    const double c = std::cos(th);
    const double x = s * std::tan(th);
    const double x2 = x * x;
    const double one_plus = 1.0 + x2;
    const double rational = (1.0 - x2) * (1.0 - x2) / (one_plus * one_plus * one_plus * one_plus);
    const double gauss = std::isinf(width) ? 1.0 : std::exp(-(x / width) * (x / width));
    acc += rule.weights[i] * rational * gauss * s / (c * c);
  }
  return half_pi * acc;
}

}  // namespace

double scale_a(const DimerParams& params, double omega) {
  const double lam = require_unstable(params, "scale_a");
  if (!(omega > 0.0)) throw ConfigError("scale_a: omega must be positive");
  const double st = std::sin(params.theta());
  const double ct = std::cos(params.theta());
  const double n = params.n_particles();
  return (st / lam) / std::sqrt(8.0 * omega * n) *
         std::sqrt(omega * omega + 16.0 * ct * ct / (lam * lam));
}

std::optional<double> omega_for_scale(const DimerParams& params, double a) {
  const double lam = require_unstable(params, "omega_for_scale");
  if (!(a > 0.0)) return std::nullopt;
  const double st = std::sin(params.theta());
  const double ct = std::cos(params.theta());
  const double k = (st / lam) * (st / lam);
  const double b = 16.0 * ct * ct / (lam * lam);
  const double lin = 8.0 * params.n_particles() * a * a;
  const double disc = lin * lin - 4.0 * k * k * b;
  if (disc < 0.0) return std::nullopt;
  return (lin - std::sqrt(disc)) / (2.0 * k);
}

TimeScales time_scales_from_scale(const DimerParams& params, double a) {
  const double lam = require_unstable(params, "time_scales");
  if (!(a > 0.0)) throw ConfigError("time_scales: scale a must be positive");
  TimeScales ts{};
  ts.lambda_s = lam;
  ts.omega = std::numeric_limits<double>::quiet_NaN();
  ts.a = a;
  ts.tau_s = 1.0 / lam;
  ts.tau_L = -std::log(a) / lam;
  ts.tau_E = std::log(static_cast<double>(params.n_particles())) / lam;
  ts.alpha = ts.tau_E > 0.0 ? ts.tau_L / ts.tau_E : std::numeric_limits<double>::infinity();
  return ts;
}

TimeScales time_scales(const DimerParams& params, double omega) {
  TimeScales ts = time_scales_from_scale(params, scale_a(params, omega));
  ts.omega = omega;
  return ts;
}

double separatrix_turning_point(const DimerParams& params) {
  return require_unstable(params, "separatrix_turning_point") / std::sin(params.theta());
}

double separatrix_z(const DimerParams& params, double z_start, double t_elapsed) {
  const double lam = require_unstable(params, "separatrix_z");
  const double zmax = lam / std::sin(params.theta());
  const double az = std::abs(z_start);
  if (!(az > 0.0) || az > zmax * (1.0 + 1e-14)) {
    throw ConfigError("separatrix_z: need 0 < |z_start| <= lambda_s / sin(theta) = " +
                      std::to_string(zmax));
  }
  const double u0 = std::acosh(std::max(1.0, zmax / az));
  return std::copysign(zmax / std::cosh(u0 - lam * t_elapsed), z_start);
}

double n_of_t(const DimerParams& params, double n0, double phi0, double t, GrowthForm form) {
  const double lam = require_unstable(params, "n_of_t");
  const double st = std::sin(params.theta());
  const double ct = std::cos(params.theta());
  const double n = params.n_particles();
  const double growth = form == GrowthForm::sinh ? std::sinh(lam * t) : 0.5 * std::exp(lam * t);
  const double x = (st / lam) * (n0 / n - 2.0 * ct * phi0 / lam) * growth;
  return (n * lam / st) * x / (1.0 + x * x);
}

double separatrix_integral(double width) {
  if (!(width > 0.0)) throw std::invalid_argument("separatrix_integral: width must be positive");
  const double value = integral_with(kQuadratureNodes, width);
  const double check = integral_with(kCheckNodes, width);
  const double err = std::abs(value - check);
  if (err > 1e-9 * std::abs(check) + 1e-300) {
    throw NumericalError("separatrix quadrature did not converge: width = " +
                         std::to_string(width) + ", error estimate = " + std::to_string(err));
  }
  return value;
}

double classical_otoc_with_scale(const DimerParams& params, double a, double t) {
  const double lam = require_unstable(params, "classical_otoc");
  if (!(t >= 0.0)) throw std::invalid_argument("classical_otoc: t must be >= 0");
  if (!(a > 0.0)) throw ConfigError("classical_otoc: scale a must be positive");
  if (t == 0.0) return 0.0;
  const double ct = std::cos(params.theta());
  const double n = params.n_particles();
  const double sh = std::sinh(lam * t);
  const double prefactor = 2.0 * ct * ct * n * n / (std::sqrt(std::numbers::pi) * a * lam * lam);
  return prefactor * sh * separatrix_integral(2.0 * a * sh);
}

double classical_otoc(const DimerParams& params, double omega, double t) {
  return classical_otoc_with_scale(params, scale_a(params, omega), t);
}

double otoc_short_asymptote(const DimerParams& params, double t) {
  const double lam = require_unstable(params, "otoc_short_asymptote");
  const double ct = std::cos(params.theta());
  const double n = params.n_particles();
  const double sh = std::sinh(lam * t);
  return 4.0 * ct * ct * n * n * sh * sh / (lam * lam);
}

double otoc_long_asymptote_with_scale(const DimerParams& params, double a, double t) {
  const double lam = require_unstable(params, "otoc_long_asymptote");
  const double ct = std::cos(params.theta());
  const double n = params.n_particles();
  return ct * ct * std::sqrt(std::numbers::pi) * n * n * std::exp(lam * t) / (4.0 * a * lam * lam);
}

double otoc_long_asymptote(const DimerParams& params, double omega, double t) {
  return otoc_long_asymptote_with_scale(params, scale_a(params, omega), t);
}

double asymptote_crossing_time(const DimerParams& params, double a) {
  const double lam = require_unstable(params, "asymptote_crossing_time");
  // ln(4 sinh^2(lam t)) - lam t - ln(sqrt(pi) / (4 a)) is increasing in t
  const double target = std::log(std::sqrt(std::numbers::pi) / (4.0 * a));
  auto f = [&](double t) {
    const double sh = std::sinh(lam * t);
    return std::log(4.0 * sh * sh) - lam * t - target;
  };
  double lo = 1e-12 / lam;
  double hi = 1.0 / lam;
  while (f(hi) < 0.0) hi *= 2.0;
  for (int i = 0; i < 200 && hi - lo > 1e-14 * hi; ++i) {
    const double mid = 0.5 * (lo + hi);
    (f(mid) < 0.0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

std::string to_string(Regime regime) {
  switch (regime) {
    case Regime::polynomial:
      return "polynomial";
    case Regime::double_rate:
      return "double-rate";
    case Regime::single_rate:
      return "single-rate";
    case Regime::post_ehrenfest:
      return "post-Ehrenfest";
  }
  return "unknown";
}

Regime regime_schedule(const TimeScales& ts, double t) {
  if (t < ts.tau_s) return Regime::polynomial;
  if (t >= ts.tau_E) return Regime::post_ehrenfest;
  // case i (tau_L < tau_s) empties the double-rate window,
  // case iii (tau_L >= tau_E) empties the single-rate one
  if (t < ts.tau_L) return Regime::double_rate;
  return Regime::single_rate;
}

void write_classical_otoc_csv(std::ostream& os, const DimerParams& params, const TimeScales& ts,
                              std::span<const double> times) {
  os.precision(17);
  os << "t,O,O_short,O_long,regime\n";
  for (double t : times) {
    os << t << ',' << classical_otoc_with_scale(params, ts.a, t) << ','
       << otoc_short_asymptote(params, t) << ','
       << otoc_long_asymptote_with_scale(params, ts.a, t) << ',' << to_string(regime_schedule(ts, t))
       << '\n';
  }
}

}  // namespace dimer
