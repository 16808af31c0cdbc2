#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "dimer/hilbert.hpp"
#include "dimer/meanfield.hpp"
#include "dimer/propagate.hpp"

namespace dimer {

struct GridSpec {
  std::size_t nz = 201;
  std::size_t nphi = 201;
  double z_min = -1.0;
  double z_max = 1.0;
  double phi_min = -3.14159265358979323846;
  double phi_max = 3.14159265358979323846;
};

/// Density sampled on cell centres in z and left edges in phi (phi is periodic).
struct PhaseGrid {
  std::vector<double> z_values;
  std::vector<double> phi_values;
  /// Row-major, density[iz * phi_values.size() + iphi].
  std::vector<double> density;

  double at(std::size_t iz, std::size_t iphi) const {
    return density[iz * phi_values.size() + iphi];
  }
  double cell_area() const;
  /// Sum of the density times the cell area.
  double integral() const;
  /// Grid point with the largest density.
  PhasePoint argmax() const;

  /// `z,phi,q` rows.
  void write_csv(std::ostream& os) const;
};

PhaseGrid make_grid(const GridSpec& spec);

/// |<xi(z, phi)|psi>|^2 with xi the number-projected coherent state.
PhaseGrid husimi(const DimerParams& params, const StateVector& state, const GridSpec& spec = {});

/// Mean and covariance of a density on the grid (phi treated as a line, not a circle).
struct PhaseMoments {
  PhasePoint mean;
  double var_z;
  double var_phi;
  double cov;

  /// Variance along the direction (dz, dphi), normalized to unit length.
  double variance_along(double dz, double dphi) const;
};
PhaseMoments moments(const PhaseGrid& grid);

/// Half width at half maximum of the density cut through the peak, along z and phi.
struct HalfWidths {
  double z;
  double phi;
};
HalfWidths half_widths(const PhaseGrid& grid);

/// Row-major float64 frame plus a `<stem>.json` header (dims, ranges, time).
void write_husimi_frame(const std::filesystem::path& dir, std::size_t index, const PhaseGrid& grid,
                        double t, bool binary);

/// Independent Gaussians in (n, phi): Var(n) = omega N / 4, Var(phi) = 1 / (omega N),
/// returned as (z = 2n/N, phi). Deterministic for a fixed seed.
std::vector<PhasePoint> wigner_sample(const DimerParams& params, double omega, std::size_t count,
                                      std::uint64_t seed);

/// Gaussian centred at (0, 0) with independent widths along the unstable and
/// stable eigendirections of the linearized flow, as unit vectors in (z, phi).
std::vector<PhasePoint> wigner_sample_eigen(const DimerParams& params, double var_unstable,
                                            double var_stable, std::size_t count,
                                            std::uint64_t seed);

/// Unit vectors (z, phi) of the growing and decaying directions of the flow
/// linearized at the antihom. point.
struct EigenDirections {
  PhasePoint unstable;
  PhasePoint stable;
};
EigenDirections linear_eigendirections(const DimerParams& params);

struct TwaOptions {
  double tol = 1e-9;
  /// Run fails if more than this fraction of trajectories abort.
  double max_failure_fraction = 0.01;
};

/// Mean over samples of (dn_t/dphi_0)^2 from monodromy co-integration, with
/// per-time standard errors. `failed` in the label reports aborted samples.
OtocSeries twa_otoc_from_samples(const DimerParams& params, std::span<const PhasePoint> samples,
                                 std::span<const double> times, const TwaOptions& options,
                                 std::string label);

OtocSeries twa_otoc(const DimerParams& params, double omega, std::span<const double> times,
                    std::size_t count, std::uint64_t seed, const TwaOptions& options = {});

}  // namespace dimer
