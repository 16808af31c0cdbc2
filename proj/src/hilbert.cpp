#include "dimer/hilbert.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <ostream>
#include <string>

#include "dimer/errors.hpp"
#include "dimer/propagate.hpp"

namespace dimer {

DimerParams::DimerParams(double theta, int n_particles, double epsilon0)
    : theta_(theta), n_(n_particles), eps0_(epsilon0) {
  constexpr double half_pi = std::numbers::pi / 2;
  if (!std::isfinite(theta) || theta < -half_pi - 1e-15 || theta > half_pi + 1e-15) {
    throw ConfigError("theta must lie in [-pi/2, pi/2], got " + std::to_string(theta));
  }
  if (n_particles < 1) {
    throw ConfigError("n_particles must be >= 1, got " + std::to_string(n_particles));
  }
  if (!(epsilon0 > 0.0) || !std::isfinite(epsilon0)) {
    throw ConfigError("epsilon0 must be positive");
  }
}

double DimerParams::j_hop() const { return eps0_ * std::cos(theta_); }

double DimerParams::g_int() const { return eps0_ * 2.0 / n_ * std::sin(theta_); }

double DimerParams::gamma() const { return std::tan(theta_); }

StateVector StateVector::basis(std::size_t dim, std::size_t k) {
  StateVector s(dim);
  s.amp_.at(k) = 1.0;
  return s;
}

double StateVector::norm() const {
  double acc = 0.0;
  for (const auto& c : amp_) acc += std::norm(c);
  return std::sqrt(acc);
}

void StateVector::normalize() {
  const double n = norm();
  if (!(n > 0.0)) throw NumericalError("cannot normalize a zero state");
  for (auto& c : amp_) c /= n;
}

void StateVector::write_csv(std::ostream& os) const {
  os.precision(17);
  os << "real,imag\n";
  for (const auto& c : amp_) os << c.real() << ',' << c.imag() << '\n';
}

complex inner(const StateVector& bra, const StateVector& ket) {
  if (bra.dim() != ket.dim()) throw std::invalid_argument("dimension mismatch in inner product");
  complex acc = 0.0;
  for (std::size_t k = 0; k < bra.dim(); ++k) acc += std::conj(bra[k]) * ket[k];
  return acc;
}

double fidelity(const StateVector& a, const StateVector& b) { return std::abs(inner(a, b)); }

void TridiagonalHamiltonian::apply(std::span<const complex> in, std::span<complex> out) const {
  const std::size_t n = diag.size();
  if (n == 1) {
    out[0] = diag[0] * in[0];
    return;
  }
  out[0] = diag[0] * in[0] + offdiag[0] * in[1];
  for (std::size_t k = 1; k + 1 < n; ++k) {
    out[k] = offdiag[k - 1] * in[k - 1] + diag[k] * in[k] + offdiag[k] * in[k + 1];
  }
  out[n - 1] = offdiag[n - 2] * in[n - 2] + diag[n - 1] * in[n - 1];
}

TridiagonalHamiltonian build_hamiltonian(const DimerParams& params) {
  const int n = params.n_particles();
  const double g = params.g_int();
  const double j = params.j_hop();
  TridiagonalHamiltonian h;
  h.diag.resize(n + 1);
  h.offdiag.resize(n);
  for (int k = 0; k <= n; ++k) {
    const double k1 = k;
    const double k2 = n - k;
    h.diag[k] = 0.5 * g * (k1 * (k1 - 1.0) + k2 * (k2 - 1.0));
  }
  // -2J (a1^dag a2 + a2^dag a1): <k+1| a1^dag a2 |k> = sqrt((k+1)(N-k))
  for (int k = 0; k < n; ++k) {
    h.offdiag[k] = -2.0 * j * std::sqrt(static_cast<double>(k + 1) * static_cast<double>(n - k));
  }
  return h;
}

StateVector coherent_state(const DimerParams& params, double z, double phi) {
  if (!std::isfinite(z) || std::abs(z) > 1.0) {
    throw ConfigError("coherent_state: |z| must be <= 1, got " + std::to_string(z));
  }
  const int n = params.n_particles();
  const double rel_phase = -(phi + std::numbers::pi);
  const double log_p1 = 0.5 * std::log((1.0 + z) / 2.0);
  const double log_p2 = 0.5 * std::log((1.0 - z) / 2.0);
  const double lg_n = std::lgamma(n + 1.0);

  std::vector<double> log_mag(n + 1);
  for (int k = 0; k <= n; ++k) {
    const double log_binom = lg_n - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0);
    // 0 * log(0) -> 0 at the poles z = +-1
    const double t1 = k == 0 ? 0.0 : k * log_p1;
    const double t2 = k == n ? 0.0 : (n - k) * log_p2;
    log_mag[k] = 0.5 * log_binom + t1 + t2;
  }
  const double peak = *std::max_element(log_mag.begin(), log_mag.end());

  StateVector s(n + 1);
  for (int k = 0; k <= n; ++k) {
    const double mag = std::exp(log_mag[k] - peak);
    // (N-k) * rel_phase reduced before the polar call to keep cos/sin accurate
    const double ph = std::remainder((n - k) * rel_phase, 2.0 * std::numbers::pi);
    s[k] = std::polar(mag, ph);
  }
  s.normalize();
  return s;
}

StateVector number_operator_apply(const StateVector& state) {
  StateVector out(state.dim());
  for (std::size_t k = 0; k < state.dim(); ++k) out[k] = static_cast<double>(k) * state[k];
  return out;
}

double number_mean(const StateVector& state) {
  double acc = 0.0;
  for (std::size_t k = 0; k < state.dim(); ++k) acc += static_cast<double>(k) * std::norm(state[k]);
  return acc;
}

double number_variance(const StateVector& state) {
  const double mean = number_mean(state);
  double acc = 0.0;
  for (std::size_t k = 0; k < state.dim(); ++k) {
    const double d = static_cast<double>(k) - mean;
    acc += d * d * std::norm(state[k]);
  }
  return acc;
}

StateVector squeeze_by_backward_evolution(const Propagator& prop, const StateVector& state,
                                          double t0) {
  if (t0 == 0.0) return state;
  return prop.evolve(state, t0);
}

StateVector squeeze_by_backward_evolution(const DimerParams& params, const StateVector& state,
                                          double t0) {
  const Propagator prop(build_hamiltonian(params), default_backend(params.n_particles()));
  return squeeze_by_backward_evolution(prop, state, t0);
}

}  // namespace dimer
