#include "dimer/propagate.hpp"

#include <cblas.h>
#include <lapacke.h>

#include <algorithm>
#include <cmath>
#include <ostream>
#include <stdexcept>

#include <json.hpp>

#include "dimer/errors.hpp"
#include "dimer/parallel.hpp"

namespace dimer {

Backend default_backend(int n_particles) {
  return n_particles <= 10'000 ? Backend::eigendecomposition : Backend::chebyshev;
}

Backend parse_backend(const std::string& name) {
  if (name == "eigendecomposition" || name == "eig") return Backend::eigendecomposition;
  if (name == "chebyshev" || name == "cheb") return Backend::chebyshev;
  throw ConfigError("unknown backend '" + name + "' (expected eigendecomposition|chebyshev)");
}

std::string to_string(Backend backend) {
  return backend == Backend::eigendecomposition ? "eigendecomposition" : "chebyshev";
}

namespace {

std::pair<double, double> gershgorin(const TridiagonalHamiltonian& h) {
  const std::size_t n = h.dim();
  double lo = HUGE_VAL;
  double hi = -HUGE_VAL;
  for (std::size_t k = 0; k < n; ++k) {
    double r = 0.0;
    if (k > 0) r += std::abs(h.offdiag[k - 1]);
    if (k + 1 < n) r += std::abs(h.offdiag[k]);
    lo = std::min(lo, h.diag[k] - r);
    hi = std::max(hi, h.diag[k] + r);
  }
  const double pad = std::max(0.01 * (hi - lo), 1e-8);
  return {lo - pad, hi + pad};
}

}  // namespace

Propagator::Propagator(TridiagonalHamiltonian h, Backend backend, ChebyshevOptions options)
    : h_(std::move(h)), backend_(backend), cheb_(options) {
  const std::size_t n = h_.dim();
  if (n == 0 || h_.offdiag.size() + 1 != n) {
    throw std::invalid_argument("malformed tridiagonal Hamiltonian");
  }
  bounds_ = gershgorin(h_);
  if (backend_ != Backend::eigendecomposition) return;

  std::vector<double> d = h_.diag;
  std::vector<double> e(std::max<std::size_t>(n, 1), 0.0);
  std::copy(h_.offdiag.begin(), h_.offdiag.end(), e.begin());
  eigenvalues_.assign(n, 0.0);
  eigenvectors_.assign(n * n, 0.0);
  std::vector<lapack_int> support(2 * n);
  lapack_int found = 0;
  const lapack_int dim = static_cast<lapack_int>(n);
  const lapack_int info =
      LAPACKE_dstevr(LAPACK_COL_MAJOR, 'V', 'A', dim, d.data(), e.data(), 0.0, 0.0, 0, 0, 0.0,
                     &found, eigenvalues_.data(), eigenvectors_.data(), dim, support.data());
  if (info != 0 || found != dim) {
    throw NumericalError("tridiagonal eigensolver failed to converge (info = " +
                         std::to_string(info) + ", eigenpairs found = " + std::to_string(found) +
                         " of " + std::to_string(n) + ")");
  }
}

std::span<const double> Propagator::eigenvector(std::size_t k) const {
  if (backend_ != Backend::eigendecomposition) {
    throw std::logic_error("eigenvectors requested from a Chebyshev propagator");
  }
  return {eigenvectors_.data() + k * dim(), dim()};
}

double Propagator::orthogonality_residual() const {
  if (backend_ != Backend::eigendecomposition) {
    throw std::logic_error("orthogonality residual requested from a Chebyshev propagator");
  }
  const std::size_t n = dim();
  std::vector<double> gram(n * n);
  const int ni = static_cast<int>(n);
  cblas_dgemm(CblasColMajor, CblasTrans, CblasNoTrans, ni, ni, ni, 1.0, eigenvectors_.data(), ni,
              eigenvectors_.data(), ni, 0.0, gram.data(), ni);
  double worst = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t i = 0; i < n; ++i) {
      worst = std::max(worst, std::abs(gram[i + j * n] - (i == j ? 1.0 : 0.0)));
    }
  }
  return worst;
}

StateVector Propagator::evolve(const StateVector& state, double t) const {
  StateVector out = state;
  evolve_many({&out, 1}, t);
  return out;
}

void Propagator::evolve_many(std::span<StateVector> states, double t) const {
  if (!std::isfinite(t)) throw std::invalid_argument("evolve: time must be finite");
  for (const auto& s : states) {
    if (s.dim() != dim()) throw std::invalid_argument("evolve: state dimension mismatch");
  }
  if (t == 0.0 || states.empty()) return;
  if (backend_ == Backend::eigendecomposition) {
    evolve_eigen(states, t);
  } else {
    evolve_chebyshev(states, t);
  }
}

void Propagator::evolve_eigen(std::span<StateVector> states, double t) const {
  const std::size_t n = dim();
  const std::size_t cols = 2 * states.size();
  // split real/imag columns so both passes are real dgemm calls
  std::vector<double> x(n * cols);
  for (std::size_t s = 0; s < states.size(); ++s) {
    for (std::size_t k = 0; k < n; ++k) {
      x[k + (2 * s) * n] = states[s][k].real();
      x[k + (2 * s + 1) * n] = states[s][k].imag();
    }
  }
  std::vector<double> y(n * cols);
  const int ni = static_cast<int>(n);
  const int ci = static_cast<int>(cols);
  cblas_dgemm(CblasColMajor, CblasTrans, CblasNoTrans, ni, ci, ni, 1.0, eigenvectors_.data(), ni,
              x.data(), ni, 0.0, y.data(), ni);
  for (std::size_t s = 0; s < states.size(); ++s) {
    double* re = y.data() + (2 * s) * n;
    double* im = y.data() + (2 * s + 1) * n;
    for (std::size_t k = 0; k < n; ++k) {
      const complex phase = std::polar(1.0, -eigenvalues_[k] * t);
      const complex c = phase * complex(re[k], im[k]);
      re[k] = c.real();
      im[k] = c.imag();
    }
  }
  cblas_dgemm(CblasColMajor, CblasNoTrans, CblasNoTrans, ni, ci, ni, 1.0, eigenvectors_.data(),
              ni, y.data(), ni, 0.0, x.data(), ni);
  for (std::size_t s = 0; s < states.size(); ++s) {
    for (std::size_t k = 0; k < n; ++k) {
      states[s][k] = complex(x[k + (2 * s) * n], x[k + (2 * s + 1) * n]);
    }
  }
}

std::vector<double> bessel_j_sequence(double x, double cutoff, std::size_t max_terms) {
  if (!(x >= 0.0)) throw std::invalid_argument("bessel_j_sequence: x must be >= 0");
  if (x == 0.0) return {1.0};
  const double start = std::ceil(x + 20.0 * std::cbrt(x) + 40.0);
  if (start > static_cast<double>(max_terms)) {
    throw NumericalError("Chebyshev series would need ~" + std::to_string(start) +
                         " terms (spectral half-width * |t| = " + std::to_string(x) +
                         "), above the limit of " + std::to_string(max_terms) +
                         "; split the evolution into shorter time slices");
  }
  const std::size_t m = static_cast<std::size_t>(start);
  std::vector<double> j(m + 2, 0.0);
  j[m + 1] = 0.0;
  j[m] = 1e-300;
  constexpr double big = 1e250;
  for (std::size_t k = m; k >= 1; --k) {
    j[k - 1] = (2.0 * static_cast<double>(k) / x) * j[k] - j[k + 1];
    if (std::abs(j[k - 1]) > big) {
      for (std::size_t i = k - 1; i <= m; ++i) j[i] /= big;
    }
  }
  double norm = j[0];
  for (std::size_t k = 2; k <= m; k += 2) norm += 2.0 * j[k];
  for (auto& v : j) v /= norm;

  std::size_t last = 0;
  for (std::size_t k = 0; k <= m; ++k) {
    if (std::abs(j[k]) > cutoff) last = k;
  }
  j.resize(last + 1);
  return j;
}

void Propagator::evolve_chebyshev(std::span<StateVector> states, double t) const {
  const std::size_t n = dim();
  const double half_width = 0.5 * (bounds_.second - bounds_.first);
  const double centre = 0.5 * (bounds_.second + bounds_.first);
  const double sign = t < 0.0 ? -1.0 : 1.0;
  const std::vector<double> bessel =
      bessel_j_sequence(half_width * std::abs(t), cheb_.tolerance, cheb_.max_terms);

  // scaled operator 2 * (H - centre) / half_width
  std::vector<double> dd(n);
  std::vector<double> ee(n, 0.0);
  for (std::size_t k = 0; k < n; ++k) dd[k] = 2.0 * (h_.diag[k] - centre) / half_width;
  for (std::size_t k = 0; k + 1 < n; ++k) ee[k] = 2.0 * h_.offdiag[k] / half_width;

  // c_k = 2 (-i sign)^k J_k(|x|), c_0 = J_0
  const complex global = std::polar(1.0, -centre * t);

  for (auto& state : states) {
    std::vector<complex> prev(state.amplitudes().begin(), state.amplitudes().end());
    std::vector<complex> cur(n);
    std::vector<complex> acc(n);
    for (std::size_t k = 0; k < n; ++k) acc[k] = bessel[0] * prev[k];
    if (bessel.size() > 1) {
      // T_1 v = (1/2) * scaled * v
      for (std::size_t k = 0; k < n; ++k) {
        complex v = dd[k] * prev[k];
        if (k > 0) v += ee[k - 1] * prev[k - 1];
        if (k + 1 < n) v += ee[k] * prev[k + 1];
        cur[k] = 0.5 * v;
      }
      // (-i sign)^k is real for even k and imaginary for odd k; adding coef * v
      // by components avoids the general complex product in the inner loop
      auto accumulate = [&](std::size_t order, complex& a, complex v) {
        const double c = 2.0 * bessel[order];
        switch (order % 4) {
          case 0: a += c * v; break;
          case 1: a += sign * c * complex(v.imag(), -v.real()); break;
          case 2: a -= c * v; break;
          default: a += sign * c * complex(-v.imag(), v.real()); break;
        }
      };
      for (std::size_t k = 0; k < n; ++k) accumulate(1, acc[k], cur[k]);
      for (std::size_t order = 2; order < bessel.size(); ++order) {
        // prev <- scaled * cur - prev, i.e. T_{k+1}, written over T_{k-1}
        if (n == 1) {
          prev[0] = dd[0] * cur[0] - prev[0];
          accumulate(order, acc[0], prev[0]);
        } else {
          prev[0] = dd[0] * cur[0] + ee[0] * cur[1] - prev[0];
          for (std::size_t k = 1; k + 1 < n; ++k) {
            prev[k] = ee[k - 1] * cur[k - 1] + dd[k] * cur[k] + ee[k] * cur[k + 1] - prev[k];
          }
          prev[n - 1] = ee[n - 2] * cur[n - 2] + dd[n - 1] * cur[n - 1] - prev[n - 1];
          const double c = 2.0 * bessel[order];
          switch (order % 4) {
            case 0:
              for (std::size_t k = 0; k < n; ++k) acc[k] += c * prev[k];
              break;
            case 1:
              for (std::size_t k = 0; k < n; ++k)
                acc[k] += sign * c * complex(prev[k].imag(), -prev[k].real());
              break;
            case 2:
              for (std::size_t k = 0; k < n; ++k) acc[k] -= c * prev[k];
              break;
            default:
              for (std::size_t k = 0; k < n; ++k)
                acc[k] += sign * c * complex(-prev[k].imag(), prev[k].real());
              break;
          }
        }
        std::swap(prev, cur);
      }
    }
    for (std::size_t k = 0; k < n; ++k) state[k] = global * acc[k];
  }
}

void OtocSeries::write_csv(std::ostream& os) const {
  os.precision(17);
  os << (stderrs.empty() ? "t,C\n" : "t,C,stderr\n");
  for (std::size_t i = 0; i < times.size(); ++i) {
    os << times[i] << ',' << values[i];
    if (!stderrs.empty()) os << ',' << stderrs[i];
    os << '\n';
  }
}

std::string OtocSeries::to_json() const {
  nlohmann::json j;
  j["params"] = {{"theta", params.theta()},
                 {"n_particles", params.n_particles()},
                 {"epsilon0", params.epsilon0()},
                 {"j_hop", params.j_hop()},
                 {"g_int", params.g_int()},
                 {"gamma", params.gamma()}};
  j["state_label"] = state_label;
  j["t"] = times;
  j["C"] = values;
  if (!stderrs.empty()) j["stderr"] = stderrs;
  return j.dump(2);
}

namespace {

void apply_observable(NumberObservable obs, int n_particles, StateVector& s) {
  const double shift = obs == NumberObservable::imbalance ? 0.5 * n_particles : 0.0;
  for (std::size_t k = 0; k < s.dim(); ++k) s[k] *= static_cast<double>(k) - shift;
}

constexpr std::size_t kOtocChunk = 16;

}  // namespace

OtocSeries otoc(const Propagator& prop, const StateVector& state, std::span<const double> times,
                const DimerParams& params, std::string state_label, NumberObservable observable) {
  if (!std::is_sorted(times.begin(), times.end())) {
    throw std::invalid_argument("otoc: times must be sorted ascending");
  }
  if (state.dim() != prop.dim()) throw std::invalid_argument("otoc: state dimension mismatch");
  const int n_particles = static_cast<int>(state.dim()) - 1;

  StateVector a_psi = state;
  apply_observable(observable, n_particles, a_psi);

  OtocSeries series{std::vector<double>(times.begin(), times.end()),
                    std::vector<double>(times.size(), 0.0),
                    {},
                    params,
                    std::move(state_label)};

  // Fixed-size chunks keep results independent of the worker count: within a
  // chunk U(t)|psi> and U(t)A|psi> are advanced incrementally.
  const std::size_t chunks = (times.size() + kOtocChunk - 1) / kOtocChunk;
  parallel_for(chunks, [&](std::size_t chunk) {
    const std::size_t begin = chunk * kOtocChunk;
    const std::size_t end = std::min(times.size(), begin + kOtocChunk);
    std::vector<StateVector> forward{state, a_psi};
    double t_prev = 0.0;
    for (std::size_t i = begin; i < end; ++i) {
      const double t = times[i];
      prop.evolve_many(forward, t - t_prev);
      t_prev = t;
      // |c> = U(-t) A U(t) A|psi>,  |d> = A U(-t) A U(t)|psi>
      std::vector<StateVector> back{forward[1], forward[0]};
      apply_observable(observable, n_particles, back[0]);
      apply_observable(observable, n_particles, back[1]);
      prop.evolve_many(back, -t);
      apply_observable(observable, n_particles, back[1]);
      double acc = 0.0;
      for (std::size_t k = 0; k < state.dim(); ++k) acc += std::norm(back[0][k] - back[1][k]);
      series.values[i] = std::max(acc, 0.0);
    }
  });
  return series;
}

std::vector<double> linspace(double lo, double hi, std::size_t count) {
  std::vector<double> out(count);
  if (count == 1) {
    out[0] = lo;
    return out;
  }
  const double step = (hi - lo) / static_cast<double>(count - 1);
  for (std::size_t i = 0; i < count; ++i) out[i] = lo + step * static_cast<double>(i);
  out.back() = hi;
  return out;
}

std::vector<double> default_time_grid(double tau_e, std::size_t count) {
  return linspace(0.0, 1.5 * tau_e, count);
}

}  // namespace dimer
