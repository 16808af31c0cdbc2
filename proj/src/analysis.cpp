#include "dimer/analysis.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <ostream>
#include <random>
#include <stdexcept>

#include "dimer/errors.hpp"
#include "dimer/meanfield.hpp"

namespace dimer {

namespace {

struct Points {
  std::vector<double> t;
  std::vector<double> y;
};

Points log_points(const OtocSeries& series, Window window) {
  if (!(window.lo < window.hi)) throw std::invalid_argument("fit window must have lo < hi");
  const double peak = series.values.empty()
                          ? 0.0
                          : *std::max_element(series.values.begin(), series.values.end());
  if (!(peak > 0.0)) throw NumericalError("fit: series has no positive values");
  const double floor = 1e-12 * peak;
  Points p;
  for (std::size_t i = 0; i < series.size(); ++i) {
    const double t = series.times[i];
    if (t < window.lo || t > window.hi) continue;
    p.t.push_back(t);
    p.y.push_back(std::log(std::max(series.values[i], floor)));
  }
  return p;
}

// Solves the 3x3 symmetric system a x = b by Gaussian elimination with pivoting.
std::array<double, 3> solve3(std::array<std::array<double, 3>, 3> a, std::array<double, 3> b) {
  for (int c = 0; c < 3; ++c) {
    int piv = c;
    for (int r = c + 1; r < 3; ++r) {
      if (std::abs(a[r][c]) > std::abs(a[piv][c])) piv = r;
    }
    std::swap(a[c], a[piv]);
    std::swap(b[c], b[piv]);
    if (a[c][c] == 0.0) throw NumericalError("singular normal equations in piecewise fit");
    for (int r = c + 1; r < 3; ++r) {
      const double f = a[r][c] / a[c][c];
      for (int k = c; k < 3; ++k) a[r][k] -= f * a[c][k];
      b[r] -= f * b[c];
    }
  }
  std::array<double, 3> x{};
  for (int r = 2; r >= 0; --r) {
    double s = b[r];
    for (int k = r + 1; k < 3; ++k) s -= a[r][k] * x[k];
    x[r] = s / a[r][r];
  }
  return x;
}

struct HingeFit {
  double breakpoint;
  std::array<double, 3> coef;  // intercept, slope, slope change
  double ssr;
};

HingeFit fit_hinge(const std::vector<double>& t, const std::vector<double>& y, double bp) {
  // columns 1, t - t0, max(t - bp, 0); t0 centres the design for conditioning
  const double t0 = t.front();
  std::array<std::array<double, 3>, 3> xtx{};
  std::array<double, 3> xty{};
  for (std::size_t i = 0; i < t.size(); ++i) {
    const std::array<double, 3> row{1.0, t[i] - t0, std::max(t[i] - bp, 0.0)};
    for (int a = 0; a < 3; ++a) {
      xty[a] += row[a] * y[i];
      for (int b = 0; b < 3; ++b) xtx[a][b] += row[a] * row[b];
    }
  }
  auto c = solve3(xtx, xty);
  double ssr = 0.0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    const double r = y[i] - (c[0] + c[1] * (t[i] - t0) + c[2] * std::max(t[i] - bp, 0.0));
    ssr += r * r;
  }
  c[0] -= c[1] * t0;
  return {bp, c, ssr};
}

HingeFit best_hinge(const std::vector<double>& t, const std::vector<double>& y,
                    std::size_t candidates) {
  // at least three points on each side of any candidate
  const double lo = t[2];
  const double hi = t[t.size() - 3];
  HingeFit best{0.0, {}, HUGE_VAL};
  for (std::size_t k = 0; k < candidates; ++k) {
    const double bp =
        candidates == 1 ? 0.5 * (lo + hi) : lo + (hi - lo) * static_cast<double>(k) / (candidates - 1);
    const HingeFit f = fit_hinge(t, y, bp);
    if (f.ssr < best.ssr) best = f;
  }
  return best;
}

}  // namespace

FitResult fit_exponent(const OtocSeries& series, Window window) {
  const Points p = log_points(series, window);
  const std::size_t n = p.t.size();
  if (n < 5) {
    throw NumericalError("fit_exponent: need at least 5 points in [" + std::to_string(window.lo) +
                         ", " + std::to_string(window.hi) + "], have " + std::to_string(n));
  }
  double mt = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mt += p.t[i];
    my += p.y[i];
  }
  mt /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (p.t[i] - mt) * (p.t[i] - mt);
    sxy += (p.t[i] - mt) * (p.y[i] - my);
    syy += (p.y[i] - my) * (p.y[i] - my);
  }
  const double slope = sxy / sxx;
  const double intercept = my - slope * mt;
  double ssr = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double r = p.y[i] - (intercept + slope * p.t[i]);
    ssr += r * r;
  }
  FitResult fit;
  fit.window = window;
  fit.slope = slope;
  fit.intercept = intercept;
  fit.stderr_slope = std::sqrt(std::max(0.0, ssr / static_cast<double>(n - 2) / sxx));
  fit.r_squared = syy > 0.0 ? 1.0 - ssr / syy : 1.0;
  fit.n_points = n;
  return fit;
}

KinkResult detect_kink(const OtocSeries& series, Window search, const KinkOptions& options) {
  const Points p = log_points(series, search);
  const std::size_t n = p.t.size();
  if (n < 8) throw NumericalError("detect_kink: need at least 8 points in the search window");
  if (options.candidates == 0) throw std::invalid_argument("detect_kink: no candidates");

  const HingeFit best = best_hinge(p.t, p.y, options.candidates);

  std::vector<double> fitted(n);
  std::vector<double> resid(n);
  for (std::size_t i = 0; i < n; ++i) {
    fitted[i] = best.coef[0] + best.coef[1] * p.t[i] +
                best.coef[2] * std::max(p.t[i] - best.breakpoint, 0.0);
    resid[i] = p.y[i] - fitted[i];
  }

  // standard error of the slope change, inflated for AR(1) residuals
  std::array<std::array<double, 3>, 3> xtx{};
  for (std::size_t i = 0; i < n; ++i) {
    const std::array<double, 3> row{1.0, p.t[i], std::max(p.t[i] - best.breakpoint, 0.0)};
    for (int a = 0; a < 3; ++a) {
      for (int b = 0; b < 3; ++b) xtx[a][b] += row[a] * row[b];
    }
  }
  const auto inv_col = solve3(xtx, {0.0, 0.0, 1.0});
  const double sigma2 = best.ssr / static_cast<double>(n - 3);
  double rho = pearson(std::span(resid).first(n - 1), std::span(resid).subspan(1));
  rho = std::isfinite(rho) ? std::clamp(rho, 0.0, 0.999) : 0.0;
  const double se_diff =
      std::sqrt(std::max(0.0, sigma2 * inv_col[2])) * std::sqrt((1.0 + rho) / (1.0 - rho));

  // moving-block bootstrap of the residuals for the breakpoint spread
  const std::size_t block = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(std::cbrt(n))));
  std::mt19937_64 rng(options.seed);
  std::uniform_int_distribution<std::size_t> start(0, n - block);
  std::vector<double> resampled(n);
  double sum = 0.0, sum2 = 0.0;
  for (std::size_t b = 0; b < options.bootstrap_resamples; ++b) {
    std::size_t filled = 0;
    while (filled < n) {
      const std::size_t s = start(rng);
      for (std::size_t k = 0; k < block && filled < n; ++k, ++filled) {
        resampled[filled] = fitted[filled] + resid[s + k];
      }
    }
    const double bp = best_hinge(p.t, resampled, options.candidates).breakpoint;
    sum += bp;
    sum2 += bp * bp;
  }
  const double m = static_cast<double>(options.bootstrap_resamples);
  const double error = m > 1.0 ? std::sqrt(std::max(0.0, (sum2 - sum * sum / m) / (m - 1.0))) : 0.0;

  KinkResult k;
  k.t_kink = best.breakpoint;
  k.error = error;
  k.slope_before = best.coef[1];
  k.slope_after = best.coef[1] + best.coef[2];
  k.stderr_difference = se_diff;
  k.found = std::abs(best.coef[2]) >= 2.0 * se_diff;
  return k;
}

FitWindows fit_windows(const TimeScales& ts, double shrink) {
  const double d = shrink / ts.lambda_s;
  return {{ts.tau_s + d, ts.tau_L - d}, {ts.tau_L + d, ts.tau_E - d}};
}

std::vector<ScanRow> theta_scan(std::span<const double> thetas, std::span<const int> n_list,
                                const ScanOptions& options) {
  std::vector<ScanRow> rows;
  for (double theta : thetas) {
    for (int n : n_list) {
      ScanRow row{theta, n, stability_exponent(theta).value, {}, {}, {}, {}, false, {}};
      try {
        const DimerParams params(theta, n);
        const TimeScales ts = time_scales(params, options.omega);
        row.scales = ts;
        if (ts.tau_E > options.max_tau_e) {
          row.slow_rate = true;
          row.error = "slow-rate regime: tau_E = " + std::to_string(ts.tau_E);
          rows.push_back(std::move(row));
          continue;
        }
        const Propagator prop(build_hamiltonian(params), default_backend(n));
        const auto times = default_time_grid(ts.tau_E, options.time_points);
        const auto series = otoc(prop, coherent_state(params, 0.0, 0.0), times, params,
                                 "coherent(0,0)");
        const auto windows = fit_windows(ts, options.shrink);
        row.fit_2ls_window = fit_exponent(series, windows.double_rate);
        row.fit_1ls_window = fit_exponent(series, windows.single_rate);
        row.kink = detect_kink(series, {ts.tau_s, ts.tau_E});
      } catch (const std::exception& e) {
        row.error = e.what();
      }
      rows.push_back(std::move(row));
    }
  }
  return rows;
}

void write_scan_csv(std::ostream& os, std::span<const ScanRow> rows) {
  os.precision(17);
  os << "theta,N,lambda_s,slope_2w,stderr_2w,slope_1w,stderr_1w,kink_t,kink_err\n";
  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (const auto& r : rows) {
    os << r.theta << ',' << r.n_particles << ',' << r.lambda_s << ','
       << (r.fit_2ls_window ? r.fit_2ls_window->slope : nan) << ','
       << (r.fit_2ls_window ? r.fit_2ls_window->stderr_slope : nan) << ','
       << (r.fit_1ls_window ? r.fit_1ls_window->slope : nan) << ','
       << (r.fit_1ls_window ? r.fit_1ls_window->stderr_slope : nan) << ','
       << (r.kink && r.kink->found ? r.kink->t_kink : nan) << ','
       << (r.kink && r.kink->found ? r.kink->error : nan) << '\n';
  }
}

double pearson(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("pearson: bad sizes");
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  return sxy / std::sqrt(sxx * syy);
}

}  // namespace dimer
