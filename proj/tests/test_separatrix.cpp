#include <doctest.h>

#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "dimer/errors.hpp"
#include "dimer/hilbert.hpp"
#include "dimer/meanfield.hpp"
#include "dimer/propagate.hpp"
#include "dimer/separatrix.hpp"

using namespace dimer;
using doctest::Approx;

namespace {
constexpr double kPi = std::numbers::pi;

// Composite Simpson in theta with x = tan(theta): the integrand becomes
// cos^2(2 theta) cos^2(theta) exp(-tan^2(theta) / w^2) on (-pi/2, pi/2).
double integral_oracle(double w) {
  const int m = 400000;
  const double lo = -kPi / 2, hi = kPi / 2;
  const double h = (hi - lo) / m;
  auto f = [&](double th) {
    const double c = std::cos(th);
    if (c <= 0.0) return 0.0;
    const double tn = std::tan(th);
    const double c2 = std::cos(2 * th);
    return c2 * c2 * c * c * (std::isinf(w) ? 1.0 : std::exp(-(tn * tn) / (w * w)));
  };
  double s = f(lo) + f(hi);
  for (int i = 1; i < m; ++i) s += (i % 2 ? 4.0 : 2.0) * f(lo + i * h);
  return s * h / 3.0;
}
}  // namespace

TEST_CASE("separatrix integral") {
  CHECK(separatrix_integral(std::numeric_limits<double>::infinity()) == Approx(kPi / 4).epsilon(1e-12));
  CHECK(std::abs(separatrix_integral(1e12) - kPi / 4) < 1e-10);
  for (double w : {1e-3, 0.01, 0.1, 0.5, 1.0, 3.0, 30.0}) {
    CHECK(separatrix_integral(w) == Approx(integral_oracle(w)).epsilon(1e-9));
  }
  // narrow Gaussian: integrand ~ 1 near 0, so I ~ sqrt(pi) w
  CHECK(separatrix_integral(1e-6) == Approx(std::sqrt(kPi) * 1e-6).epsilon(1e-5));
  CHECK_THROWS(separatrix_integral(0.0));
}

TEST_CASE("scale a and time scales") {
  const DimerParams p(1.35, 1000);
  const double a = scale_a(p, 1.0);
  CHECK(a == Approx(1.514e-2).epsilon(1e-3));
  const auto ts = time_scales(p, 1.0);
  CHECK(ts.lambda_s == Approx(0.9706).epsilon(1e-4));
  CHECK(ts.tau_E == Approx(7.12).epsilon(1e-3));
  CHECK(ts.tau_L == Approx(4.32).epsilon(1e-3));
  CHECK(ts.alpha == Approx(0.61).epsilon(0.01));
  CHECK(ts.tau_s == Approx(1.0 / ts.lambda_s));
  CHECK(ts.tau_L - ts.tau_E / 2 == Approx(-std::log(a * std::sqrt(1000.0)) / ts.lambda_s).epsilon(1e-12));
  for (int n : {10, 1000, 123456}) {
    CHECK(scale_a(DimerParams(1.35, 4 * n), 1.0) / scale_a(DimerParams(1.35, n), 1.0) == Approx(0.5).epsilon(1e-14));
  }
  CHECK(scale_a(p, 4e6) / scale_a(p, 1e6) == Approx(2.0).epsilon(1e-6));
  double prev = 1.0;
  for (int n : {100, 10000, 1000000, 100000000}) {
    const double alpha = time_scales(DimerParams(1.35, n), 1.0).alpha;
    CHECK(std::abs(alpha - 0.5) < std::abs(prev - 0.5));
    prev = alpha;
  }
  // the offset decays only like 1 / ln N
  CHECK(std::abs(prev - 0.5) < 0.05);
  CHECK_THROWS_AS(scale_a(DimerParams(0.5, 10), 1.0), ConfigError);
  CHECK_THROWS_AS(scale_a(p, -1.0), ConfigError);
}

TEST_CASE("omega for a given scale") {
  const DimerParams p(1.35, 1000);
  for (double omega : {0.05, 0.3, 1.0}) {
    const auto back = omega_for_scale(p, scale_a(p, omega));
    REQUIRE(back.has_value());
    CHECK(scale_a(p, *back) == Approx(scale_a(p, omega)).epsilon(1e-10));
  }
  // a = 1/N lies below the smallest scale this Gaussian family reaches
  CHECK_FALSE(omega_for_scale(p, 1e-3).has_value());
  const auto ts = time_scales_from_scale(p, 1e-3);
  CHECK(ts.tau_L == Approx(ts.tau_E));
  CHECK(ts.alpha == Approx(1.0));
  CHECK(std::isnan(ts.omega));
}

TEST_CASE("separatrix trajectory") {
  const DimerParams p(1.35, 1000);
  const double lam = stability_exponent(p).value;
  const double zmax = separatrix_turning_point(p);
  CHECK(zmax == Approx(lam / std::sin(1.35)));
  CHECK(separatrix_z(p, 0.01, 0.0) == Approx(0.01));
  CHECK(separatrix_z(p, -0.01, 0.0) == Approx(-0.01));
  CHECK(std::abs(separatrix_z(p, 0.01, 60.0)) < 1e-20);
  double best = 0.0;
  for (double t = 0.0; t < 20.0; t += 1e-3) best = std::max(best, std::abs(separatrix_z(p, 0.01, t)));
  CHECK(best == Approx(zmax).epsilon(1e-6));

  // cross-check against the flow from a point on the separatrix energy shell
  const double gamma = p.gamma();
  const double z0 = 0.05;
  const double phi0 = std::acos((1.0 - 0.25 * gamma * z0 * z0) / std::sqrt(1.0 - z0 * z0));
  const double h0 = classical_energy(p, {0.0, 0.0});
  CHECK(classical_energy(p, {z0, phi0}) == Approx(h0).epsilon(1e-14));
  const auto ts = linspace(0.0, 6.0, 121);
  double worst = HUGE_VAL;
  double zpeak = 0.0;
  for (double s : {1.0, -1.0}) {
    const auto traj = integrate(p, {z0, s * phi0}, ts, 1e-12);
    double err = 0.0;
    for (std::size_t i = 0; i < ts.size(); ++i) {
      err = std::max(err, std::abs(traj[i].point.z - separatrix_z(p, z0, ts[i])));
    }
    if (err < worst) {
      worst = err;
      for (const auto& q : traj) zpeak = std::max(zpeak, std::abs(q.point.z));
    }
  }
  CHECK(worst < 1e-4);
  CHECK(zpeak == Approx(zmax).epsilon(1e-4));
}

TEST_CASE("n_of_t") {
  const DimerParams p(1.35, 1000);
  const double lam = stability_exponent(p).value;
  const double ct = std::cos(1.35);
  CHECK(n_of_t(p, 0.0, 0.0, 5.0) == 0.0);
  const double n0 = 0.3, phi0 = 0.002, t = 1e-4;
  CHECK(n_of_t(p, n0, phi0, t) == Approx(1000.0 * lam * t * (n0 / 1000.0 - 2 * ct * phi0 / lam)).epsilon(1e-6));
  // pure phase kick: first-order growth equals the linearized flow
  const auto lin = linearized_evolution(p, {0.0, phi0}, t);
  CHECK(n_of_t(p, 0.0, phi0, t) == Approx(500.0 * lin.z).epsilon(1e-6));
  const double late = n_of_t(p, n0, phi0, 30.0);
  CHECK(n_of_t(p, n0, phi0, 31.0) / late == Approx(std::exp(-lam)).epsilon(1e-6));
  const double tt = 4.0 / lam;
  CHECK(n_of_t(p, n0, phi0, tt, GrowthForm::exponential) == Approx(n_of_t(p, n0, phi0, tt)).epsilon(0.01));
}

TEST_CASE("classical otoc and its asymptotes") {
  const DimerParams p(1.35, 1000);
  const auto ts = time_scales(p, 1.0);
  const double lam = ts.lambda_s;
  const double ct = std::cos(1.35);
  CHECK(classical_otoc(p, 1.0, 0.0) == 0.0);
  CHECK(classical_otoc(p, 1.0, 3.0) == Approx(classical_otoc_with_scale(p, ts.a, 3.0)).epsilon(1e-14));
  for (double t = 0.05; t <= ts.tau_L - 2.0 / lam; t += 0.05) {
    CHECK(classical_otoc(p, 1.0, t) == Approx(otoc_short_asymptote(p, t)).epsilon(0.05));
  }
  for (double t = ts.tau_L + 2.0 / lam; t <= 15.0; t += 0.1) {
    CHECK(classical_otoc(p, 1.0, t) == Approx(otoc_long_asymptote(p, 1.0, t)).epsilon(0.05));
  }
  const double t = 1e-4;
  CHECK(otoc_short_asymptote(p, t) == Approx(4 * ct * ct * 1e6 * t * t).epsilon(1e-7));
  CHECK(otoc_long_asymptote_with_scale(p, ts.a / 2, 5.0) == Approx(2 * otoc_long_asymptote_with_scale(p, ts.a, 5.0)));
  const double tc = asymptote_crossing_time(p, ts.a);
  CHECK(4 * std::sinh(lam * tc) * std::sinh(lam * tc) ==
        Approx(std::sqrt(kPi) * std::exp(lam * tc) / (4 * ts.a)).epsilon(1e-10));
  CHECK(otoc_short_asymptote(p, tc) == Approx(otoc_long_asymptote(p, 1.0, tc)).epsilon(1e-10));
  CHECK(std::abs(tc - ts.tau_L) < 2.0 / lam);
  // monotone growth
  double prev = 0.0;
  for (double s = 0.1; s < 12.0; s += 0.1) {
    const double o = classical_otoc(p, 1.0, s);
    CHECK(o > prev);
    prev = o;
  }
}

TEST_CASE("regime schedule") {
  const DimerParams p(1.35, 1000);
  const auto ts = time_scales(p, 1.0);
  CHECK(regime_schedule(ts, 0.5) == Regime::polynomial);
  CHECK(regime_schedule(ts, 2.0) == Regime::double_rate);
  CHECK(regime_schedule(ts, 5.5) == Regime::single_rate);
  CHECK(regime_schedule(ts, 8.0) == Regime::post_ehrenfest);
  const auto well_localized = time_scales_from_scale(p, 1.0 / 1000);
  for (double t = 0.0; t < 10.0; t += 0.01) CHECK(regime_schedule(well_localized, t) != Regime::single_rate);
  CHECK(to_string(Regime::double_rate) == "double-rate");
  std::ostringstream os;
  const std::vector<double> times{0.0, 1.0, 5.0};
  write_classical_otoc_csv(os, p, ts, times);
  CHECK(os.str().rfind("t,O,O_short,O_long,regime\n", 0) == 0);
}
