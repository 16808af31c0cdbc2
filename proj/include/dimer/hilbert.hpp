#pragma once

#include <complex>
#include <cstddef>
#include <iosfwd>
#include <span>
#include <vector>

namespace dimer {

using complex = std::complex<double>;

/// Two-site Bose-Hubbard parameters in the angle parametrization
/// J = eps0 cos(theta), g = eps0 (2/N) sin(theta).
class DimerParams {
 public:
  DimerParams(double theta, int n_particles, double epsilon0 = 1.0);

  double theta() const { return theta_; }
  int n_particles() const { return n_; }
  double epsilon0() const { return eps0_; }

  double j_hop() const;
  double g_int() const;
  /// Nonlinearity g N / (2 J) = tan(theta).
  double gamma() const;

 private:
  double theta_;
  int n_;
  double eps0_;
};

/// Amplitudes over the fixed-N Fock basis; index k is the occupation of site 1.
class StateVector {
 public:
  StateVector() = default;
  explicit StateVector(std::size_t dim) : amp_(dim) {}
  explicit StateVector(std::vector<complex> amplitudes) : amp_(std::move(amplitudes)) {}

  static StateVector basis(std::size_t dim, std::size_t k);

  std::size_t dim() const { return amp_.size(); }
  int n_particles() const { return static_cast<int>(amp_.size()) - 1; }

  std::span<const complex> amplitudes() const { return amp_; }
  std::span<complex> amplitudes() { return amp_; }
  complex operator[](std::size_t k) const { return amp_[k]; }
  complex& operator[](std::size_t k) { return amp_[k]; }

  double norm() const;
  void normalize();

  /// Two columns, `real,imag`, one row per basis index.
  void write_csv(std::ostream& os) const;

 private:
  std::vector<complex> amp_;
};

complex inner(const StateVector& bra, const StateVector& ket);
/// |<a|b>| for normalized inputs.
double fidelity(const StateVector& a, const StateVector& b);

/// Real symmetric tridiagonal matrix: diag d_0..d_N, offdiag e_k couples k and k+1.
struct TridiagonalHamiltonian {
  std::vector<double> diag;
  std::vector<double> offdiag;

  std::size_t dim() const { return diag.size(); }
  /// out = H * in
  void apply(std::span<const complex> in, std::span<complex> out) const;
};

TridiagonalHamiltonian build_hamiltonian(const DimerParams& params);

/// Number-projected coherent state centred at (z, phi), phi measured from the
/// antihom. point, so (0, 0) is the state with amplitudes (-1)^(N-k) sqrt(C(N,k)/2^N).
StateVector coherent_state(const DimerParams& params, double z, double phi);

/// n1 |psi>, i.e. k * c_k. Not normalized.
StateVector number_operator_apply(const StateVector& state);

/// <psi| n1 |psi> and <psi| n1^2 |psi> - <n1>^2.
double number_mean(const StateVector& state);
double number_variance(const StateVector& state);

class Propagator;

/// U(t0)|state> with t0 < 0 for squeezing along the unstable direction.
StateVector squeeze_by_backward_evolution(const Propagator& prop, const StateVector& state,
                                          double t0);
/// Same, with the default propagator for `params`.
StateVector squeeze_by_backward_evolution(const DimerParams& params, const StateVector& state,
                                          double t0);

}  // namespace dimer
