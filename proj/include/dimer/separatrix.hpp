#pragma once

#include <iosfwd>
#include <optional>
#include <span>
#include <string>

#include "dimer/hilbert.hpp"

namespace dimer {

/// Time scales of the unstable antihom. point for one (params, omega).
struct TimeScales {
  double lambda_s;
  double omega;  ///< NaN when built directly from a scale a
  double a;
  double tau_s;  ///< 1 / lambda_s
  double tau_L;  ///< -ln(a) / lambda_s
  double tau_E;  ///< ln(N) / lambda_s
  double alpha;  ///< tau_L / tau_E
};

/// Width scale of the initial Gaussian along the unstable direction.
double scale_a(const DimerParams& params, double omega);

/// Squeezing parameter reproducing a given scale, choosing the smaller root.
/// Empty when a is below the minimum reachable by the (n, phi) Gaussian family.
std::optional<double> omega_for_scale(const DimerParams& params, double a);

TimeScales time_scales(const DimerParams& params, double omega);
TimeScales time_scales_from_scale(const DimerParams& params, double a);

/// lambda_s / sin(theta): largest |z| reached on the separatrix.
double separatrix_turning_point(const DimerParams& params);

/// z after moving t_elapsed along the separatrix branch through z_start.
double separatrix_z(const DimerParams& params, double z_start, double t_elapsed);

enum class GrowthForm {
  sinh,         ///< 2 sinh(lambda t), exact at short times
  exponential,  ///< e^{lambda t}
};

/// n_t on the separatrix for a start point (n0, phi0) near the antihom. point.
double n_of_t(const DimerParams& params, double n0, double phi0, double t,
              GrowthForm form = GrowthForm::sinh);

/// int (1-x^2)^2 / (1+x^2)^4 exp(-(x/width)^2) dx over the real line;
/// width = +inf gives pi/4.
double separatrix_integral(double width);

/// Classical OTOC averaged over the Gaussian with squeezing omega.
double classical_otoc(const DimerParams& params, double omega, double t);
/// Same, for an explicit scale a (e.g. measured from a squeezed state).
double classical_otoc_with_scale(const DimerParams& params, double a, double t);

/// 4 cos^2(theta) N^2 sinh^2(lambda t) / lambda^2
double otoc_short_asymptote(const DimerParams& params, double t);
/// cos^2(theta) sqrt(pi) N^2 e^{lambda t} / (4 a lambda^2)
double otoc_long_asymptote(const DimerParams& params, double omega, double t);
double otoc_long_asymptote_with_scale(const DimerParams& params, double a, double t);

/// Time where the two asymptotes cross.
double asymptote_crossing_time(const DimerParams& params, double a);

enum class Regime { polynomial, double_rate, single_rate, post_ehrenfest };
std::string to_string(Regime regime);

Regime regime_schedule(const TimeScales& ts, double t);

/// `t,O,O_short,O_long,regime` rows for overlay plots.
void write_classical_otoc_csv(std::ostream& os, const DimerParams& params, const TimeScales& ts,
                              std::span<const double> times);

}  // namespace dimer
