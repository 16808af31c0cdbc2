#include "dimer/phasespace.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <ostream>
#include <random>
#include <stdexcept>

#include <json.hpp>

#include "dimer/errors.hpp"
#include "dimer/parallel.hpp"

namespace dimer {

double PhaseGrid::cell_area() const {
  const double dz = z_values.size() > 1 ? z_values[1] - z_values[0] : 2.0;
  const double dphi = phi_values.size() > 1 ? phi_values[1] - phi_values[0] : 2.0 * std::numbers::pi;
  return dz * dphi;
}

double PhaseGrid::integral() const {
  double acc = 0.0;
  for (double v : density) acc += v;
  return acc * cell_area();
}

PhasePoint PhaseGrid::argmax() const {
  const auto it = std::max_element(density.begin(), density.end());
  const std::size_t idx = static_cast<std::size_t>(it - density.begin());
  return {z_values[idx / phi_values.size()], phi_values[idx % phi_values.size()]};
}

void PhaseGrid::write_csv(std::ostream& os) const {
  os.precision(17);
  os << "z,phi,q\n";
  for (std::size_t i = 0; i < z_values.size(); ++i) {
    for (std::size_t j = 0; j < phi_values.size(); ++j) {
      os << z_values[i] << ',' << phi_values[j] << ',' << at(i, j) << '\n';
    }
  }
}

PhaseGrid make_grid(const GridSpec& spec) {
  if (spec.nz == 0 || spec.nphi == 0) throw ConfigError("grid dimensions must be positive");
  if (!(spec.z_min >= -1.0 && spec.z_max <= 1.0 && spec.z_min < spec.z_max)) {
    throw ConfigError("grid z range must lie within [-1, 1]");
  }
  if (!(spec.phi_min < spec.phi_max)) throw ConfigError("grid phi range is empty");
  PhaseGrid g;
  g.z_values.resize(spec.nz);
  g.phi_values.resize(spec.nphi);
  const double dz = (spec.z_max - spec.z_min) / static_cast<double>(spec.nz);
  const double dphi = (spec.phi_max - spec.phi_min) / static_cast<double>(spec.nphi);
  for (std::size_t i = 0; i < spec.nz; ++i) g.z_values[i] = spec.z_min + (i + 0.5) * dz;
  for (std::size_t j = 0; j < spec.nphi; ++j) g.phi_values[j] = spec.phi_min + j * dphi;
  g.density.assign(spec.nz * spec.nphi, 0.0);
  return g;
}

PhaseGrid husimi(const DimerParams& params, const StateVector& state, const GridSpec& spec) {
  const int n = params.n_particles();
  if (state.dim() != static_cast<std::size_t>(n + 1)) {
    throw std::invalid_argument("husimi: state dimension does not match params");
  }
  PhaseGrid g = make_grid(spec);
  const std::size_t nphi = g.phi_values.size();
  const double lg_n = std::lgamma(n + 1.0);
  std::vector<double> log_binom(n + 1);
  for (int k = 0; k <= n; ++k) {
    log_binom[k] = 0.5 * (lg_n - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0));
  }

  parallel_for(g.z_values.size(), [&](std::size_t iz) {
    const double z = g.z_values[iz];
    const double lp1 = 0.5 * std::log((1.0 + z) / 2.0);
    const double lp2 = 0.5 * std::log((1.0 - z) / 2.0);
    std::vector<double> log_mag(n + 1);
    double peak = -HUGE_VAL;
    for (int k = 0; k <= n; ++k) {
      log_mag[k] = log_binom[k] + k * lp1 + (n - k) * lp2;
      peak = std::max(peak, log_mag[k]);
    }
    // drop amplitudes below e^-40 of the kernel maximum
    int lo = 0;
    int hi = n;
    while (lo < n && log_mag[lo] < peak - 40.0) ++lo;
    while (hi > lo && log_mag[hi] < peak - 40.0) --hi;
    std::vector<complex> weighted(hi - lo + 1);
    for (int k = lo; k <= hi; ++k) {
      const double sign = ((n - k) % 2 == 0) ? 1.0 : -1.0;
      weighted[k - lo] = sign * std::exp(log_mag[k]) * state[k];
    }
    for (std::size_t j = 0; j < nphi; ++j) {
      const double phi = g.phi_values[j];
      // conj(c_k) psi_k = m_k (-1)^(N-k) e^{i (N-k) phi} psi_k
      complex rot = std::polar(1.0, std::remainder((n - lo) * phi, 2.0 * std::numbers::pi));
      const complex step = std::polar(1.0, -phi);
      complex acc = 0.0;
      for (std::size_t k = 0; k < weighted.size(); ++k) {
        acc += rot * weighted[k];
        rot *= step;
      }
      g.density[iz * nphi + j] = std::norm(acc);
    }
  });
  return g;
}

double PhaseMoments::variance_along(double dz, double dphi) const {
  const double len2 = dz * dz + dphi * dphi;
  return (dz * dz * var_z + 2.0 * dz * dphi * cov + dphi * dphi * var_phi) / len2;
}

PhaseMoments moments(const PhaseGrid& grid) {
  double w = 0.0, mz = 0.0, mp = 0.0;
  const std::size_t np = grid.phi_values.size();
  for (std::size_t i = 0; i < grid.z_values.size(); ++i) {
    for (std::size_t j = 0; j < np; ++j) {
      const double q = grid.at(i, j);
      w += q;
      mz += q * grid.z_values[i];
      mp += q * grid.phi_values[j];
    }
  }
  if (!(w > 0.0)) throw NumericalError("moments: density is identically zero");
  mz /= w;
  mp /= w;
  double vz = 0.0, vp = 0.0, c = 0.0;
  for (std::size_t i = 0; i < grid.z_values.size(); ++i) {
    for (std::size_t j = 0; j < np; ++j) {
      const double q = grid.at(i, j);
      const double dz = grid.z_values[i] - mz;
      const double dp = grid.phi_values[j] - mp;
      vz += q * dz * dz;
      vp += q * dp * dp;
      c += q * dz * dp;
    }
  }
  return {{mz, mp}, vz / w, vp / w, c / w};
}

namespace {

double hwhm(std::span<const double> axis, const std::vector<double>& values, std::size_t peak) {
  const double half = 0.5 * values[peak];
  auto crossing = [&](int dir) {
    std::size_t i = peak;
    while (true) {
      const std::size_t next = i + dir;
      if (next >= values.size()) return std::abs(axis[i] - axis[peak]);
      if (values[next] <= half) {
        const double frac = (values[i] - half) / (values[i] - values[next]);
        return std::abs(axis[i] + frac * (axis[next] - axis[i]) - axis[peak]);
      }
      i = next;
    }
  };
  return 0.5 * (crossing(-1) + crossing(+1));
}

}  // namespace

HalfWidths half_widths(const PhaseGrid& grid) {
  const auto it = std::max_element(grid.density.begin(), grid.density.end());
  const std::size_t idx = static_cast<std::size_t>(it - grid.density.begin());
  const std::size_t np = grid.phi_values.size();
  const std::size_t iz = idx / np;
  const std::size_t ip = idx % np;
  std::vector<double> zcut(grid.z_values.size());
  for (std::size_t i = 0; i < zcut.size(); ++i) zcut[i] = grid.at(i, ip);
  std::vector<double> pcut(np);
  for (std::size_t j = 0; j < np; ++j) pcut[j] = grid.at(iz, j);
  return {hwhm(grid.z_values, zcut, iz), hwhm(grid.phi_values, pcut, ip)};
}

void write_husimi_frame(const std::filesystem::path& dir, std::size_t index, const PhaseGrid& grid,
                        double t, bool binary) {
  std::filesystem::create_directories(dir);
  char stem[32];
  std::snprintf(stem, sizeof stem, "frame_%04zu", index);
  nlohmann::json header;
  header["dims"] = {grid.z_values.size(), grid.phi_values.size()};
  header["z_range"] = {grid.z_values.front(), grid.z_values.back()};
  header["phi_range"] = {grid.phi_values.front(), grid.phi_values.back()};
  header["t"] = t;
  header["layout"] = binary ? "row-major float64, z index slowest" : "csv z,phi,q";
  header["data"] = std::string(stem) + (binary ? ".bin" : ".csv");
  std::ofstream(dir / (std::string(stem) + ".json")) << header.dump(2) << '\n';
  if (binary) {
    std::ofstream out(dir / (std::string(stem) + ".bin"), std::ios::binary);
    out.write(reinterpret_cast<const char*>(grid.density.data()),
              static_cast<std::streamsize>(grid.density.size() * sizeof(double)));
  } else {
    std::ofstream out(dir / (std::string(stem) + ".csv"));
    grid.write_csv(out);
  }
}

std::vector<PhasePoint> wigner_sample(const DimerParams& params, double omega, std::size_t count,
                                      std::uint64_t seed) {
  if (!(omega > 0.0)) throw ConfigError("wigner_sample: omega must be positive");
  const double n = params.n_particles();
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n_dist(0.0, std::sqrt(omega * n / 4.0));
  std::normal_distribution<double> phi_dist(0.0, std::sqrt(1.0 / (omega * n)));
  std::vector<PhasePoint> out(count);
  for (auto& p : out) {
    p.z = 2.0 * n_dist(rng) / n;
    p.phi = phi_dist(rng);
  }
  return out;
}

EigenDirections linear_eigendirections(const DimerParams& params) {
  const auto ls = stability_exponent(params);
  if (!ls.unstable) throw ConfigError("eigendirections: requires gamma > 2");
  const double slope = ls.value / (4.0 * std::cos(params.theta()));
  const double len = std::hypot(1.0, slope);
  return {{1.0 / len, -slope / len}, {1.0 / len, slope / len}};
}

std::vector<PhasePoint> wigner_sample_eigen(const DimerParams& params, double var_unstable,
                                            double var_stable, std::size_t count,
                                            std::uint64_t seed) {
  if (!(var_unstable > 0.0) || !(var_stable > 0.0)) {
    throw ConfigError("wigner_sample_eigen: variances must be positive");
  }
  const auto dirs = linear_eigendirections(params);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> u_dist(0.0, std::sqrt(var_unstable));
  std::normal_distribution<double> s_dist(0.0, std::sqrt(var_stable));
  std::vector<PhasePoint> out(count);
  for (auto& p : out) {
    const double u = u_dist(rng);
    const double s = s_dist(rng);
    p.z = u * dirs.unstable.z + s * dirs.stable.z;
    p.phi = u * dirs.unstable.phi + s * dirs.stable.phi;
  }
  return out;
}

namespace {

struct Accumulator {
  std::vector<double> count;
  std::vector<double> mean;
  std::vector<double> m2;
  std::size_t failed = 0;

  explicit Accumulator(std::size_t n) : count(n, 0.0), mean(n, 0.0), m2(n, 0.0) {}

  void push(std::size_t i, double v) {
    count[i] += 1.0;
    const double d = v - mean[i];
    mean[i] += d / count[i];
    m2[i] += d * (v - mean[i]);
  }

  // Chan et al. pairwise merge
  void merge(const Accumulator& o) {
    for (std::size_t i = 0; i < mean.size(); ++i) {
      const double n = count[i] + o.count[i];
      if (n == 0.0) continue;
      const double d = o.mean[i] - mean[i];
      mean[i] += d * o.count[i] / n;
      m2[i] += o.m2[i] + d * d * count[i] * o.count[i] / n;
      count[i] = n;
    }
    failed += o.failed;
  }
};

constexpr std::size_t kTwaBlock = 64;

}  // namespace

OtocSeries twa_otoc_from_samples(const DimerParams& params, std::span<const PhasePoint> samples,
                                 std::span<const double> times, const TwaOptions& options,
                                 std::string label) {
  const std::size_t nt = times.size();
  const std::size_t blocks = (samples.size() + kTwaBlock - 1) / kTwaBlock;
  std::vector<Accumulator> partial(blocks, Accumulator(nt));
  const int n = params.n_particles();

  parallel_for(blocks, [&](std::size_t b) {
    Accumulator& acc = partial[b];
    const std::size_t end = std::min(samples.size(), (b + 1) * kTwaBlock);
    for (std::size_t s = b * kTwaBlock; s < end; ++s) {
      std::vector<TangentFrame> frames;
      try {
        frames = monodromy(params, samples[s], times, options.tol);
      } catch (const NumericalError&) {
        ++acc.failed;
        continue;
      }
      for (std::size_t i = 0; i < nt; ++i) {
        const double d = frames[i].dn_dphi0(n);
        acc.push(i, d * d);
      }
    }
  });

  Accumulator total(nt);
  for (const auto& p : partial) total.merge(p);
  if (static_cast<double>(total.failed) >
      options.max_failure_fraction * static_cast<double>(samples.size())) {
    throw NumericalError("truncated Wigner run: " + std::to_string(total.failed) + " of " +
                         std::to_string(samples.size()) + " trajectories aborted");
  }

  OtocSeries series{std::vector<double>(times.begin(), times.end()),
                    total.mean,
                    std::vector<double>(nt, 0.0),
                    params,
                    std::move(label)};
  for (std::size_t i = 0; i < nt; ++i) {
    const double m = total.count[i];
    series.stderrs[i] = m > 1.0 ? std::sqrt(total.m2[i] / (m - 1.0) / m) : 0.0;
  }
  if (total.failed > 0) series.state_label += " (aborted " + std::to_string(total.failed) + ")";
  return series;
}

OtocSeries twa_otoc(const DimerParams& params, double omega, std::span<const double> times,
                    std::size_t count, std::uint64_t seed, const TwaOptions& options) {
  const auto samples = wigner_sample(params, omega, count, seed);
  char label[96];
  std::snprintf(label, sizeof label, "twa omega=%g samples=%zu seed=%llu", omega, count,
                static_cast<unsigned long long>(seed));
  return twa_otoc_from_samples(params, samples, times, options, label);
}

}  // namespace dimer
