#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "dimer/hilbert.hpp"

namespace dimer {

enum class Backend { eigendecomposition, chebyshev };

/// Eigendecomposition up to N = 10^4, Chebyshev above.
Backend default_backend(int n_particles);
Backend parse_backend(const std::string& name);
std::string to_string(Backend backend);

struct ChebyshevOptions {
  /// Bessel coefficients below this magnitude terminate the series.
  double tolerance = 1e-13;
  /// Upper bound on the series length for a single evolve call.
  std::size_t max_terms = 2'000'000;
};

/// e^{-iHt} for a fixed tridiagonal Hamiltonian. Immutable once built.
class Propagator {
 public:
  Propagator(TridiagonalHamiltonian h, Backend backend, ChebyshevOptions options = {});

  Backend backend() const { return backend_; }
  std::size_t dim() const { return h_.dim(); }
  const TridiagonalHamiltonian& hamiltonian() const { return h_; }

  /// Ascending eigenvalues (eigendecomposition backend only).
  std::span<const double> eigenvalues() const { return eigenvalues_; }
  /// Column k of the orthonormal eigenvector matrix (eigendecomposition backend only).
  std::span<const double> eigenvector(std::size_t k) const;
  /// max |V^T V - 1|, O(d^3).
  double orthogonality_residual() const;

  /// Gershgorin interval padded by 1% of its width.
  std::pair<double, double> spectral_bounds() const { return bounds_; }

  StateVector evolve(const StateVector& state, double t) const;
  /// In-place evolution of a batch; shares one pass over the eigenvectors or
  /// one Chebyshev recursion between all states.
  void evolve_many(std::span<StateVector> states, double t) const;

 private:
  void evolve_eigen(std::span<StateVector> states, double t) const;
  void evolve_chebyshev(std::span<StateVector> states, double t) const;

  TridiagonalHamiltonian h_;
  Backend backend_;
  ChebyshevOptions cheb_;
  std::pair<double, double> bounds_;
  std::vector<double> eigenvalues_;
  std::vector<double> eigenvectors_;  // column-major dim x dim
};

/// J_k(x) for k = 0..K with x >= 0, by Miller's backward recurrence and the
/// normalization J_0 + 2 sum J_2k = 1. Trailing coefficients below `cutoff`
/// are dropped. Throws NumericalError if more than `max_terms` are needed.
std::vector<double> bessel_j_sequence(double x, double cutoff, std::size_t max_terms);

/// Observable used on both sides of the commutator.
enum class NumberObservable {
  site1,      ///< n1
  imbalance,  ///< (n1 - n2) / 2
};

struct OtocSeries {
  std::vector<double> times;
  std::vector<double> values;
  /// Per-time standard error; empty for exact quantum series.
  std::vector<double> stderrs;
  DimerParams params;
  std::string state_label;

  std::size_t size() const { return times.size(); }

  /// Header `t,C` (plus `,stderr` when standard errors are present).
  void write_csv(std::ostream& os) const;
  /// JSON object with the params snapshot embedded.
  std::string to_json() const;
};

/// C(t) = || [A(t), A] |psi> ||^2 for A = n1 (or the imbalance) at each of
/// `times`, which must be sorted ascending.
OtocSeries otoc(const Propagator& prop, const StateVector& state, std::span<const double> times,
                const DimerParams& params, std::string state_label,
                NumberObservable observable = NumberObservable::site1);

std::vector<double> linspace(double lo, double hi, std::size_t count);
/// 400 points on [0, 1.5 tau_E].
std::vector<double> default_time_grid(double tau_e, std::size_t count = 400);

}  // namespace dimer
