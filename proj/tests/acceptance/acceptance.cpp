// One PASS/FAIL line per acceptance criterion. Tolerances are fixed here.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "dimer/analysis.hpp"
#include "dimer/hilbert.hpp"
#include "dimer/meanfield.hpp"
#include "dimer/phasespace.hpp"
#include "dimer/propagate.hpp"
#include "dimer/separatrix.hpp"
#include "oracle.hpp"

using namespace dimer;

namespace {

constexpr double kPi = std::numbers::pi;
const double kBifurcation = std::atan(2.0);
constexpr double kTheta = 1.35;

// criterion 1
constexpr double kLambdaPeak = 0.97, kLambdaPeakTol = 0.01;
constexpr double kThetaPeakTol = 0.01;
constexpr double kJacobianAgreement = 1e-9;
constexpr double kStabilityRuntime = 1.0;
// criterion 2
constexpr double kSlopeTol = 0.20;
constexpr double kKinkTol = 0.5;
// criterion 3
constexpr double kOverlayLogTol = 0.5;
// criterion 4
constexpr double kAsymptoteTol = 0.05;
constexpr double kQuarterPiTol = 1e-10;
// criterion 5
constexpr std::size_t kTwaSamples = 10000;
constexpr std::size_t kTwaTimes = 20;
constexpr double kTwaSigmas = 3.0;
// criterion 6 uses kSlopeTol
// criterion 7
constexpr std::size_t kScanThetas = 12;
constexpr double kScanThetaMin = 1.20, kScanThetaMax = 1.50;
constexpr double kScanCorrelation = 0.95;
// criterion 8
constexpr double kNormDrift = 1e-8;
constexpr double kDetTol = 1e-8;
constexpr double kEnergyDrift = 1e-9;
constexpr double kDenseOracle = 1e-9;
constexpr double kLinearized = 1e-4;
constexpr double kMomentSigmas = 3.0;

int failures = 0;

void report(int id, bool pass, const std::string& detail) {
  std::printf("%s criterion %d: %s\n", pass ? "PASS" : "FAIL", id, detail.c_str());
  std::fflush(stdout);
  if (!pass) ++failures;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

void guarded(int id, const std::function<void()>& body) {
  try {
    body();
  } catch (const std::exception& e) {
    report(id, false, std::string("exception: ") + e.what());
  }
}

void criterion1() {
  const auto t0 = std::chrono::steady_clock::now();
  const std::size_t n = 200001;
  double worst_zero = 0.0, worst_jac = 0.0, peak = 0.0, theta_peak = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double th = -kPi / 2 + kPi * static_cast<double>(i) / (n - 1);
    const double lam = stability_exponent(th).value;
    if (th <= kBifurcation) worst_zero = std::max(worst_zero, std::abs(lam));
    if (lam > peak) {
      peak = lam;
      theta_peak = th;
    }
    if (i % 100 == 0 && std::abs(th) < kPi / 2) {
      const auto ev = eigenvalues(jacobian(DimerParams(th, 1000), {0.0, 0.0}));
      const double lj = std::max(0.0, std::max(ev.re[0], ev.re[1]));
      worst_jac = std::max(worst_jac, std::abs(lj - lam));
    }
  }
  const double runtime = seconds_since(t0);
  const bool pass = worst_zero == 0.0 && std::abs(peak - kLambdaPeak) <= kLambdaPeakTol &&
                    std::abs(theta_peak - kTheta) <= kThetaPeakTol &&
                    worst_jac <= kJacobianAgreement && runtime < kStabilityRuntime;
  report(1, pass,
         fmt("max lambda_s = %.5f at theta = %.4f (|theta - %.2f| = %.4f, limit %.2f); lambda_s(%.2f) = %.5f; "
             "max |lambda| below arctan 2 = %.1e; closed form vs Jacobian %.1e; %.3f s",
             peak, theta_peak, kTheta, std::abs(theta_peak - kTheta), kThetaPeakTol, kTheta,
             stability_exponent(kTheta).value, worst_zero, worst_jac, runtime));
}

struct KinkRun {
  TimeScales ts;
  OtocSeries series;
  FitResult fast, slow;
  KinkResult kink;
  double seconds;
};

KinkRun kink_run(int n, Backend backend, std::size_t points, double t_max_over_te) {
  const auto t0 = std::chrono::steady_clock::now();
  const DimerParams p(kTheta, n);
  const auto ts = time_scales(p, 1.0);
  const Propagator prop(build_hamiltonian(p), backend);
  const auto times = linspace(0.0, t_max_over_te * ts.tau_E, points);
  auto series = otoc(prop, coherent_state(p, 0.0, 0.0), times, p, "coherent(0,0)");
  const auto w = fit_windows(ts);
  const auto fast = fit_exponent(series, w.double_rate);
  const auto slow = fit_exponent(series, w.single_rate);
  const auto kink = detect_kink(series, {ts.tau_s, ts.tau_E});
  return {ts, std::move(series), fast, slow, kink, seconds_since(t0)};
}

KinkRun* n1000_run = nullptr;

void criterion2() {
  static KinkRun r3 = kink_run(1000, Backend::eigendecomposition, 400, 1.5);
  n1000_run = &r3;
  const double lam = r3.ts.lambda_s;
  const double q2 = r3.fast.slope / (2 * lam), q1 = r3.slow.slope / lam;
  const bool base = std::abs(q2 - 1) <= kSlopeTol && std::abs(q1 - 1) <= kSlopeTol && r3.kink.found &&
                    std::abs(r3.kink.t_kink - r3.ts.tau_E / 2) <= kKinkTol;
  std::printf("  N=1000: slope/(2 lambda_s) = %.4f, slope/lambda_s = %.4f, kink at %.3f +- %.3f "
              "(tau_E/2 = %.3f, found = %d), %.1f s\n",
              q2, q1, r3.kink.t_kink, r3.kink.error, r3.ts.tau_E / 2, r3.kink.found ? 1 : 0, r3.seconds);
  std::fflush(stdout);
  const auto r4 = kink_run(10000, Backend::chebyshev, 121, 1.0);
  const double p2 = r4.fast.slope / (2 * lam), p1 = r4.slow.slope / lam;
  std::printf("  N=10000 (chebyshev): slope/(2 lambda_s) = %.4f, slope/lambda_s = %.4f, %.1f s\n", p2, p1,
              r4.seconds);
  const double dev3 = std::max(std::abs(q2 - 1), std::abs(q1 - 1));
  const double dev4 = std::max(std::abs(p2 - 1), std::abs(p1 - 1));
  report(2, base && dev4 < dev3,
         fmt("N=1000 within %.0f%% and kink within %.1f of tau_E/2; worst |ratio - 1| %.4f (N=1000) -> %.4f (N=10000)",
             100 * kSlopeTol, kKinkTol, dev3, dev4));
}

void criterion3() {
  const auto& r = *n1000_run;
  const DimerParams p(kTheta, 1000);
  double worst = 0.0;
  for (std::size_t i = 0; i < r.series.size(); ++i) {
    const double t = r.series.times[i];
    if (t < r.ts.tau_s || t > r.ts.tau_E) continue;
    worst = std::max(worst, std::abs(std::log(r.series.values[i]) - std::log(classical_otoc(p, 1.0, t))));
  }
  report(3, worst <= kOverlayLogTol,
         fmt("max |ln C - ln O| on [tau_s, tau_E] = %.4f (limit %.2f)", worst, kOverlayLogTol));
}

void criterion4() {
  const DimerParams p(kTheta, 1000);
  const auto ts = time_scales(p, 1.0);
  double worst_short = 0.0, worst_long = 0.0;
  for (double t = 0.01; t <= ts.tau_L - 2 / ts.lambda_s; t += 0.01) {
    worst_short = std::max(worst_short, std::abs(classical_otoc(p, 1.0, t) / otoc_short_asymptote(p, t) - 1));
  }
  for (double t = ts.tau_L + 2 / ts.lambda_s; t <= 3 * ts.tau_E; t += 0.01) {
    worst_long = std::max(worst_long, std::abs(classical_otoc(p, 1.0, t) / otoc_long_asymptote(p, 1.0, t) - 1));
  }
  const double quarter = std::abs(separatrix_integral(INFINITY) - kPi / 4);
  report(4, worst_short <= kAsymptoteTol && worst_long <= kAsymptoteTol && quarter <= kQuarterPiTol,
         fmt("short-time deviation %.4f, long-time deviation %.4f, |I(inf) - pi/4| = %.1e", worst_short, worst_long,
             quarter));
}

void criterion5() {
  const auto t0 = std::chrono::steady_clock::now();
  const DimerParams p(kTheta, 1000);
  const auto ts = time_scales(p, 1.0);
  const auto times = linspace(0.0, ts.tau_E, kTwaTimes);
  const auto mc = twa_otoc(p, 1.0, times, kTwaSamples, 2024);
  double worst = 0.0;
  std::size_t outside = 0;
  for (std::size_t i = 0; i < times.size(); ++i) {
    const double o = classical_otoc(p, 1.0, times[i]);
    const double diff = mc.values[i] - o;
    const double z = mc.stderrs[i] > 0 ? diff / mc.stderrs[i] : (diff == 0 ? 0.0 : INFINITY);
    std::printf("  t = %.3f  TWA = %.6e +- %.2e  O = %.6e  (%+.1f SE, %+.3f%%)\n", times[i], mc.values[i],
                mc.stderrs[i], o, z, o > 0 ? 100 * diff / o : 0.0);
    worst = std::max(worst, std::abs(z));
    if (std::abs(z) > kTwaSigmas) ++outside;
  }
  report(5, outside == 0,
         fmt("%zu of %zu times outside %.0f SE (worst %.1f SE), %zu samples, %.1f s", outside, times.size(),
             kTwaSigmas, worst, kTwaSamples, seconds_since(t0)));
}

void criterion6() {
  const DimerParams p(kTheta, 1000);
  const auto ts = time_scales(p, 1.0);
  const Propagator prop(build_hamiltonian(p), Backend::eigendecomposition);
  const auto state = squeeze_by_backward_evolution(prop, coherent_state(p, 0.0, 0.0), -ts.tau_E / 2);
  const auto series = otoc(prop, state, default_time_grid(ts.tau_E), p, "squeezed");
  const auto fit = fit_exponent(series, {ts.tau_s, ts.tau_E});
  const auto kink = detect_kink(series, {ts.tau_s, ts.tau_E});
  const double q = fit.slope / (2 * ts.lambda_s);
  report(6, std::abs(q - 1) <= kSlopeTol && !kink.found,
         fmt("slope/(2 lambda_s) on [tau_s, tau_E] = %.4f; kink %s (best breakpoint %.2f, |dslope| = %.3f, "
             "2 SE = %.3f)",
             q, kink.found ? "found" : "not found", kink.t_kink, std::abs(kink.slope_after - kink.slope_before),
             2 * kink.stderr_difference));
}

void criterion7() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto thetas = linspace(kScanThetaMin, kScanThetaMax, kScanThetas);
  const std::vector<int> ns{100, 1000};
  const auto rows = theta_scan(thetas, ns);
  std::vector<double> fitted, target;
  double dev[2] = {0, 0};
  int count[2] = {0, 0};
  bool complete = true;
  for (const auto& r : rows) {
    if (!r.error.empty() || !r.fit_2ls_window || !r.fit_1ls_window) {
      std::printf("  theta = %.4f N = %d: %s\n", r.theta, r.n_particles, r.error.c_str());
      complete = false;
      continue;
    }
    const int idx = r.n_particles == 1000 ? 1 : 0;
    dev[idx] += std::abs(r.fit_2ls_window->slope / (2 * r.lambda_s) - 1) + std::abs(r.fit_1ls_window->slope / r.lambda_s - 1);
    count[idx] += 2;
    if (idx == 1) {
      fitted.push_back(r.fit_2ls_window->slope);
      target.push_back(2 * r.lambda_s);
      fitted.push_back(r.fit_1ls_window->slope);
      target.push_back(r.lambda_s);
    }
  }
  const double corr = fitted.size() >= 2 ? pearson(fitted, target) : 0.0;
  const double m100 = count[0] ? dev[0] / count[0] : INFINITY;
  const double m1000 = count[1] ? dev[1] / count[1] : INFINITY;
  report(7, complete && thetas.size() >= 10 && corr >= kScanCorrelation && m1000 < m100,
         fmt("%zu thetas in [%.2f, %.2f]: correlation %.4f at N=1000; mean |slope/target - 1| %.4f (N=100) -> "
             "%.4f (N=1000); %.1f s",
             thetas.size(), kScanThetaMin, kScanThetaMax, corr, m100, m1000, seconds_since(t0)));
}

void criterion8() {
  std::vector<std::string> bad;
  // unitarity
  {
    const DimerParams p(kTheta, 1000);
    double drift = 0.0;
    for (Backend b : {Backend::eigendecomposition, Backend::chebyshev}) {
      const Propagator prop(build_hamiltonian(p), b);
      auto s = coherent_state(p, 0.1, 0.2);
      for (int i = 0; i < 50; ++i) {
        s = prop.evolve(s, 0.3);
        drift = std::max(drift, std::abs(s.norm() - 1));
      }
    }
    if (drift > kNormDrift) bad.push_back(fmt("norm drift %.1e", drift));
    std::printf("  norm drift %.1e\n", drift);
  }
  // monodromy determinant
  {
    const DimerParams p(kTheta, 1000);
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> uz(-0.8, 0.8), up(-kPi, kPi);
    double worst = 0.0;
    for (int i = 0; i < 20; ++i) {
      for (const auto& f : monodromy(p, {uz(rng), up(rng)}, 20.0, 1e-10)) worst = std::max(worst, std::abs(f.m.det() - 1));
    }
    if (worst > kDetTol) bad.push_back(fmt("det M deviation %.1e", worst));
    std::printf("  max |det M - 1| %.1e\n", worst);
  }
  // energy conservation
  {
    const DimerParams p(kTheta, 1000);
    double worst = 0.0;
    for (PhasePoint x : {PhasePoint{1e-3, 0.0}, PhasePoint{0.3, 0.5}, PhasePoint{-0.6, 2.0}}) {
      const double h0 = classical_energy(p, x);
      for (const auto& s : integrate(p, x, 20.0, 1e-10)) worst = std::max(worst, std::abs(classical_energy(p, s.point) - h0) / std::abs(h0));
    }
    if (worst > kEnergyDrift) bad.push_back(fmt("energy drift %.1e", worst));
    std::printf("  relative energy drift %.1e\n", worst);
  }
  // dense oracle
  {
    double worst = 0.0;
    for (double th : {0.0, 0.8, kTheta}) {
      const DimerParams p(th, 2);
      const auto h = oracle::dense_hamiltonian(2, p.j_hop(), p.g_int());
      const auto s = coherent_state(p, 0.2, 0.7);
      oracle::VecC v(3);
      for (int k = 0; k < 3; ++k) v(k) = s[k];
      const auto times = linspace(0.0, 3.0, 31);
      for (Backend b : {Backend::eigendecomposition, Backend::chebyshev}) {
        const auto c = otoc(Propagator(build_hamiltonian(p), b), s, times, p, "s");
        for (std::size_t i = 0; i < times.size(); ++i) {
          worst = std::max(worst, std::abs(c.values[i] - oracle::dense_otoc(h, Eigen::Vector3d(0, 1, 2), v, times[i])));
        }
      }
    }
    if (worst > kDenseOracle) bad.push_back(fmt("dense oracle %.1e", worst));
    std::printf("  N=2 dense oracle deviation %.1e\n", worst);
  }
  // linearization near the hyperbolic point
  {
    const DimerParams p(kTheta, 1000);
    const PhasePoint x0{2e-4, -1e-4};
    const auto times = linspace(0.05, 2.0, 40);
    double worst = 0.0;
    const auto traj = integrate(p, x0, times, 1e-13);
    for (std::size_t i = 0; i < times.size(); ++i) {
      const auto lin = linearized_evolution(p, x0, times[i]);
      worst = std::max({worst, std::abs(lin.z / traj[i].point.z - 1), std::abs(lin.phi / traj[i].point.phi - 1)});
    }
    if (worst > kLinearized) bad.push_back(fmt("linearization %.1e", worst));
    std::printf("  linearized vs nonlinear relative deviation %.1e\n", worst);
  }
  // Wigner moments
  {
    const DimerParams p(kTheta, 1000);
    const std::size_t m = 100000;
    const auto s = wigner_sample(p, 1.0, m, 77);
    double sz = 0, sp = 0, szz = 0, spp = 0;
    for (const auto& q : s) {
      sz += q.z;
      sp += q.phi;
      szz += q.z * q.z;
      spp += q.phi * q.phi;
    }
    const double vz = 1e-3, vp = 1e-3;
    const double mz = sz / m, mp = sp / m;
    const double var_z = szz / m - mz * mz, var_p = spp / m - mp * mp;
    const double se_var = std::sqrt(2.0 / m);
    const double worst = std::max({std::abs(mz) / std::sqrt(vz / m), std::abs(mp) / std::sqrt(vp / m),
                                   std::abs(var_z / vz - 1) / se_var, std::abs(var_p / vp - 1) / se_var});
    if (worst > kMomentSigmas) bad.push_back(fmt("Wigner moments %.1f sigma", worst));
    std::printf("  Wigner moments worst %.2f sigma\n", worst);
  }
  std::string detail = bad.empty() ? "all invariants within tolerance" : "";
  for (const auto& b : bad) detail += b + "; ";
  report(8, bad.empty(), detail);
}

}  // namespace

int main() {
  guarded(1, criterion1);
  guarded(2, criterion2);
  if (n1000_run) {
    guarded(3, criterion3);
  } else {
    report(3, false, "N=1000 series unavailable");
  }
  guarded(4, criterion4);
  guarded(5, criterion5);
  guarded(6, criterion6);
  guarded(7, criterion7);
  guarded(8, criterion8);
  std::printf("%d of 8 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
