#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <string>

#include "dimer/errors.hpp"

namespace dimer::ode {

struct Options {
  double rtol = 1e-10;
  double atol = 1e-10;
  double initial_step = 1e-3;
  double max_step = 0.1;
  std::size_t max_steps = 10'000'000;
};

/// Thrown by a right-hand side evaluated outside its domain. The stepper
/// treats it as a rejected step and retries with a smaller one.
struct DomainError {
  std::string what;
};

struct Stats {
  std::size_t accepted = 0;
  std::size_t rejected = 0;
};

/// Dormand-Prince 5(4) with a standard PI-free step controller.
template <std::size_t D>
class DormandPrince {
 public:
  using State = std::array<double, D>;

  explicit DormandPrince(Options options) : opt_(options), h_(options.initial_step) {}

  const Stats& stats() const { return stats_; }

  /// Advances y from t0 to t1 (either direction). `observer(t, y)` runs after
  /// every accepted step, `check(y)` may throw to abort on accepted states.
  template <class Rhs, class Observer, class Check>
  void advance(Rhs&& rhs, State& y, double t0, double t1, Observer&& observer, Check&& check) {
    if (t1 == t0) return;
    const double dir = t1 > t0 ? 1.0 : -1.0;
    double t = t0;
    double h = std::min(std::abs(h_), opt_.max_step);
    State k1;
    if (!eval(rhs, y, k1)) throw NumericalError("ODE right-hand side undefined at start point");
    while (dir * (t1 - t) > 0.0) {
      if (stats_.accepted + stats_.rejected > opt_.max_steps) {
        throw NumericalError("ODE integration exceeded the step budget");
      }
      bool last = false;
      // also swallow a remainder too small to step over on its own
      if (h >= std::abs(t1 - t) * (1.0 - 1e-9)) {
        h = std::abs(t1 - t);
        last = true;
      }
      const double min_step = 64.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(t));
      if (h < min_step) {
        throw NumericalError("ODE step size underflow at t = " + std::to_string(t) +
                             " (trajectory approaching a coordinate singularity?)");
      }
      State y_new;
      State k_new;
      std::optional<double> err = try_step(rhs, y, k1, dir * h, y_new, k_new);
      if (!err) {
        ++stats_.rejected;
        h *= 0.25;
        continue;
      }
      if (*err <= 1.0) {
        ++stats_.accepted;
        t = last ? t1 : t + dir * h;
        y = y_new;
        k1 = k_new;
        check(y);
        observer(t, y);
        const double grow = *err == 0.0 ? 5.0 : std::min(5.0, 0.9 * std::pow(*err, -0.2));
        const double next = std::min(h * grow, opt_.max_step);
        if (!last) h_ = next;
        h = next;
      } else {
        ++stats_.rejected;
        h *= std::max(0.2, 0.9 * std::pow(*err, -0.2));
      }
    }
  }

 private:
  template <class Rhs>
  static bool eval(Rhs& rhs, const State& y, State& dy) {
    try {
      rhs(y, dy);
    } catch (const DomainError&) {
      return false;
    }
    for (double v : dy) {
      if (!std::isfinite(v)) return false;
    }
    return true;
  }

  template <class Rhs>
  std::optional<double> try_step(Rhs& rhs, const State& y, const State& k1, double h,
                                 State& y_new, State& k7) const {
    constexpr double a21 = 1.0 / 5.0;
    constexpr double a31 = 3.0 / 40.0, a32 = 9.0 / 40.0;
    constexpr double a41 = 44.0 / 45.0, a42 = -56.0 / 15.0, a43 = 32.0 / 9.0;
    constexpr double a51 = 19372.0 / 6561.0, a52 = -25360.0 / 2187.0, a53 = 64448.0 / 6561.0,
                     a54 = -212.0 / 729.0;
    constexpr double a61 = 9017.0 / 3168.0, a62 = -355.0 / 33.0, a63 = 46732.0 / 5247.0,
                     a64 = 49.0 / 176.0, a65 = -5103.0 / 18656.0;
    constexpr double b1 = 35.0 / 384.0, b3 = 500.0 / 1113.0, b4 = 125.0 / 192.0,
                     b5 = -2187.0 / 6784.0, b6 = 11.0 / 84.0;
    constexpr double e1 = 71.0 / 57600.0, e3 = -71.0 / 16695.0, e4 = 71.0 / 1920.0,
                     e5 = -17253.0 / 339200.0, e6 = 22.0 / 525.0, e7 = -1.0 / 40.0;
    State k2, k3, k4, k5, k6, tmp;
    for (std::size_t i = 0; i < D; ++i) tmp[i] = y[i] + h * a21 * k1[i];
    if (!eval(rhs, tmp, k2)) return std::nullopt;
    for (std::size_t i = 0; i < D; ++i) tmp[i] = y[i] + h * (a31 * k1[i] + a32 * k2[i]);
    if (!eval(rhs, tmp, k3)) return std::nullopt;
    for (std::size_t i = 0; i < D; ++i) tmp[i] = y[i] + h * (a41 * k1[i] + a42 * k2[i] + a43 * k3[i]);
    if (!eval(rhs, tmp, k4)) return std::nullopt;
    for (std::size_t i = 0; i < D; ++i)
      tmp[i] = y[i] + h * (a51 * k1[i] + a52 * k2[i] + a53 * k3[i] + a54 * k4[i]);
    if (!eval(rhs, tmp, k5)) return std::nullopt;
    for (std::size_t i = 0; i < D; ++i)
      tmp[i] = y[i] + h * (a61 * k1[i] + a62 * k2[i] + a63 * k3[i] + a64 * k4[i] + a65 * k5[i]);
    if (!eval(rhs, tmp, k6)) return std::nullopt;
    for (std::size_t i = 0; i < D; ++i)
      y_new[i] = y[i] + h * (b1 * k1[i] + b3 * k3[i] + b4 * k4[i] + b5 * k5[i] + b6 * k6[i]);
    if (!eval(rhs, y_new, k7)) return std::nullopt;
    double err = 0.0;
    for (std::size_t i = 0; i < D; ++i) {
      const double e =
          h * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] + e6 * k6[i] + e7 * k7[i]);
      const double scale = opt_.atol + opt_.rtol * std::max(std::abs(y[i]), std::abs(y_new[i]));
      err = std::max(err, std::abs(e) / scale);
    }
    return err;
  }

  Options opt_;
  double h_;
  Stats stats_;
};

}  // namespace dimer::ode
