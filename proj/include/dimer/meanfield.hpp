#pragma once

#include <array>
#include <cstddef>
#include <iosfwd>
#include <span>
#include <utility>
#include <vector>

#include "dimer/hilbert.hpp"

namespace dimer {

/// Reduced mean-field coordinates: population imbalance z = 2n/N and relative
/// phase phi measured from the antihom. point. phi is kept unwrapped.
struct PhasePoint {
  double z = 0.0;
  double phi = 0.0;
};

/// Row-major 2x2 matrix in (z, phi) coordinates.
struct Mat2 {
  double m00 = 1.0, m01 = 0.0, m10 = 0.0, m11 = 1.0;

  static Mat2 identity() { return {}; }
  double det() const { return m00 * m11 - m01 * m10; }
  double trace() const { return m00 + m11; }
  Mat2 operator*(const Mat2& o) const;
};

/// Real parts (and imaginary parts) of the two eigenvalues of a 2x2 matrix.
struct Eigen2 {
  std::array<double, 2> re;
  std::array<double, 2> im;
};
Eigen2 eigenvalues(const Mat2& m);

/// Energy per particle h(z, phi).
double classical_energy(const DimerParams& params, PhasePoint p);

/// (dz/dt, dphi/dt). Throws NumericalError at the |z| = 1 pole.
std::pair<double, double> eom(const DimerParams& params, PhasePoint p);

/// Analytic Jacobian of eom.
Mat2 jacobian(const DimerParams& params, PhasePoint p);

struct TrajectorySample {
  double t;
  PhasePoint point;
};
using Trajectory = std::vector<TrajectorySample>;

/// Adaptive Dormand-Prince 5(4) solution with local error target tol / 10, sampled at
/// every accepted step (first sample is t = 0).
Trajectory integrate(const DimerParams& params, PhasePoint p0, double t_final, double tol);
/// Same, sampled at the given ascending times.
Trajectory integrate(const DimerParams& params, PhasePoint p0, std::span<const double> times,
                     double tol);

/// Tangent frame along a trajectory: m = d(z_t, phi_t) / d(z_0, phi_0).
struct TangentFrame {
  double t;
  PhasePoint point;
  Mat2 m;

  /// dn_t/dphi_0 = (N/2) dz_t/dphi_0.
  double dn_dphi0(int n_particles) const { return 0.5 * n_particles * m.m01; }
};

/// Co-integrates dM/dt = J(x(t)) M with M(0) = 1, sampled at `times` (ascending, >= 0).
std::vector<TangentFrame> monodromy(const DimerParams& params, PhasePoint p0,
                                    std::span<const double> times, double tol);
std::vector<TangentFrame> monodromy(const DimerParams& params, PhasePoint p0, double t_final,
                                    double tol);

enum class FixedPointKind { stable_center, hyperbolic, marginal };

struct FixedPointReport {
  PhasePoint location;
  FixedPointKind kind;
  /// Stability exponent for hyperbolic points, oscillation frequency for centres.
  double exponent;
  Mat2 jacobian;
};

struct FixedPointSearch {
  std::vector<FixedPointReport> points;
  /// Seeds whose Newton iteration failed; not an error.
  std::size_t nonconverged_seeds = 0;
};

/// Hom. (0, pi) and antihom. (0, 0) points, followed by any further stationary
/// points found by Newton polish from a 64x64 seed grid.
FixedPointSearch find_fixed_points(const DimerParams& params);

FixedPointReport classify_fixed_point(const DimerParams& params, PhasePoint p);

struct StabilityExponent {
  double value;   ///< 4 cos(theta) sqrt(gamma/2 - 1), or 0 when gamma <= 2
  bool unstable;  ///< gamma > 2
};

/// Stability exponent of the antihom. point (0, 0).
StabilityExponent stability_exponent(const DimerParams& params);
/// Same, from the angle alone (the exponent does not depend on N).
StabilityExponent stability_exponent(double theta);

/// Closed-form solution of the flow linearized at (0, 0). Requires gamma > 2.
PhasePoint linearized_evolution(const DimerParams& params, PhasePoint p0, double t);

/// `t,z,phi,h` rows.
void write_trajectory_csv(std::ostream& os, const DimerParams& params, const Trajectory& traj);

}  // namespace dimer
