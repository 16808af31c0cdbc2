#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dimer/propagate.hpp"
#include "dimer/separatrix.hpp"

namespace dimer {

struct Window {
  double lo;
  double hi;
};

/// Least-squares fit of ln C(t) = intercept + slope * t. The slope is the raw
/// log-slope: the double-rate regime has slope 2 lambda_s, the single-rate one lambda_s.
struct FitResult {
  Window window;
  double slope;
  double intercept;
  double stderr_slope;
  double r_squared;
  std::size_t n_points;
};

/// Values below 1e-12 * max(C) are floored before taking logs.
FitResult fit_exponent(const OtocSeries& series, Window window);

struct KinkResult {
  bool found;
  double t_kink;  ///< best breakpoint (reported even when not significant)
  double error;   ///< bootstrap standard deviation of the breakpoint
  double slope_before;
  double slope_after;
  /// Standard error of slope_after - slope_before, corrected for lag-1
  /// autocorrelation of the residuals.
  double stderr_difference;
};

struct KinkOptions {
  std::size_t candidates = 200;
  std::size_t bootstrap_resamples = 100;
  std::uint64_t seed = 12345;
};

/// Continuous two-segment fit of ln C(t) inside `search`; breakpoint by grid
/// search over the residual sum of squares.
KinkResult detect_kink(const OtocSeries& series, Window search, const KinkOptions& options = {});

/// Fit windows [tau_s, tau_L] and [tau_L, tau_E] shrunk inward by `shrink / lambda_s`.
struct FitWindows {
  Window double_rate;
  Window single_rate;
};
FitWindows fit_windows(const TimeScales& ts, double shrink = 0.5);

struct ScanOptions {
  double omega = 1.0;
  std::size_t time_points = 400;
  double shrink = 0.5;
  /// Cells whose Ehrenfest time exceeds this are flagged slow-rate and skipped.
  double max_tau_e = 60.0;
};

struct ScanRow {
  double theta;
  int n_particles;
  double lambda_s;
  std::optional<TimeScales> scales;
  std::optional<FitResult> fit_2ls_window;
  std::optional<FitResult> fit_1ls_window;
  std::optional<KinkResult> kink;
  bool slow_rate = false;
  std::string error;  ///< empty on success
};

/// OTOC of coherent(0, 0) for every (theta, N), fitted in both windows.
/// Rows are ordered by (theta, N) as given; failures are recorded per row.
std::vector<ScanRow> theta_scan(std::span<const double> thetas, std::span<const int> n_list,
                                const ScanOptions& options = {});

/// `theta,N,lambda_s,slope_2w,stderr_2w,slope_1w,stderr_1w,kink_t,kink_err`
void write_scan_csv(std::ostream& os, std::span<const ScanRow> rows);

/// Pearson correlation coefficient.
double pearson(std::span<const double> x, std::span<const double> y);

}  // namespace dimer
