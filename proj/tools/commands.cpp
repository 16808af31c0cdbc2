#include "commands.hpp"

#include <algorithm>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numbers>

#include <json.hpp>

#include "dimer/analysis.hpp"
#include "dimer/errors.hpp"
#include "dimer/hilbert.hpp"
#include "dimer/meanfield.hpp"
#include "dimer/phasespace.hpp"
#include "dimer/propagate.hpp"
#include "dimer/separatrix.hpp"

namespace dimer::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

fs::path output_dir(const RunConfig& cfg) {
  fs::path dir = cfg.get_string("output_dir");
  fs::create_directories(dir);
  return dir;
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path.string());
  out.precision(17);
  return out;
}

DimerParams params_of(const RunConfig& cfg) {
  return DimerParams(cfg.get_double("theta"), cfg.get_int("n_particles"));
}

Backend backend_of(const RunConfig& cfg, int n) {
  const auto name = cfg.get_string("backend");
  return name == "auto" ? default_backend(n) : parse_backend(name);
}

// "auto" resolves to the given fallback
double time_or(const RunConfig& cfg, const std::string& key, double fallback) {
  return cfg.get_string(key) == "auto" ? fallback : cfg.get_double(key);
}

TimeScales require_unstable(const DimerParams& params, double omega) {
  if (!stability_exponent(params).unstable) {
    throw ConfigError("theta = " + std::to_string(params.theta()) +
                      " has no unstable point (need tan(theta) > 2)");
  }
  return time_scales(params, omega);
}

json scales_json(const TimeScales& ts) {
  return {{"lambda_s", ts.lambda_s}, {"omega", std::isnan(ts.omega) ? json() : json(ts.omega)},
          {"a", ts.a},           {"tau_s", ts.tau_s},
          {"tau_L", ts.tau_L},   {"tau_E", ts.tau_E},
          {"alpha", ts.alpha}};
}

json fit_json(const FitResult& f) {
  return {{"window", {f.window.lo, f.window.hi}}, {"slope", f.slope},
          {"intercept", f.intercept},           {"stderr", f.stderr_slope},
          {"r_squared", f.r_squared},           {"points", f.n_points}};
}

json kink_json(const KinkResult& k) {
  return {{"found", k.found},
          {"t_kink", k.t_kink},
          {"error", k.error},
          {"slope_before", k.slope_before},
          {"slope_after", k.slope_after},
          {"stderr_difference", k.stderr_difference}};
}

void stability_scan(const RunConfig& cfg) {
  const auto thetas =
      linspace(cfg.get_double("theta_min"), cfg.get_double("theta_max"), cfg.get_size("points"));
  auto out = open_out(output_dir(cfg) / "stability.csv");
  out << "theta,gamma,lambda_s,lambda_jacobian,unstable\n";
  for (double theta : thetas) {
    const DimerParams params(theta, cfg.get_int("n_particles"));
    const auto ls = stability_exponent(theta);
    const auto ev = eigenvalues(jacobian(params, {0.0, 0.0}));
    const double lj = std::max(0.0, std::max(ev.re[0], ev.re[1]));
    out << theta << ',' << params.gamma() << ',' << ls.value << ',' << lj << ','
        << (ls.unstable ? 1 : 0) << '\n';
  }
}

const char* kind_name(FixedPointKind k) {
  switch (k) {
    case FixedPointKind::stable_center: return "center";
    case FixedPointKind::hyperbolic: return "hyperbolic";
    case FixedPointKind::marginal: return "marginal";
  }
  return "?";
}

void phase_portrait(const RunConfig& cfg) {
  const DimerParams params = params_of(cfg);
  const auto dir = output_dir(cfg);
  const std::size_t nz = cfg.get_size("nz");
  const std::size_t nphi = cfg.get_size("nphi");
  if (nz < 2 || nphi < 2) throw ConfigError("nz and nphi must be at least 2");
  {
    auto out = open_out(dir / "energy.csv");
    out << "z,phi,h\n";
    for (std::size_t i = 0; i < nz; ++i) {
      const double z = -1.0 + 2.0 * i / (nz - 1);
      for (std::size_t j = 0; j < nphi; ++j) {
        const double phi = -std::numbers::pi + 2.0 * std::numbers::pi * j / (nphi - 1);
        out << z << ',' << phi << ',' << classical_energy(params, {z, phi}) << '\n';
      }
    }
  }
  {
    const auto search = find_fixed_points(params);
    auto out = open_out(dir / "fixed_points.csv");
    out << "z,phi,kind,exponent\n";
    for (const auto& fp : search.points) {
      out << fp.location.z << ',' << fp.location.phi << ',' << kind_name(fp.kind) << ','
          << fp.exponent << '\n';
    }
  }
  if (!stability_exponent(params).unstable) return;
  // level set through (0, 0): cos(phi) = (1 - gamma z^2 / 4) / sqrt(1 - z^2)
  const double zmax = separatrix_turning_point(params);
  const double gamma = params.gamma();
  const std::size_t m = cfg.get_size("separatrix_points");
  auto out = open_out(dir / "separatrix.csv");
  out << "branch,z,phi\n";
  int branch = 0;
  for (double zs : {1.0, -1.0}) {
    for (double ps : {1.0, -1.0}) {
      for (std::size_t i = 0; i < m; ++i) {
        const double u = 0.5 * std::numbers::pi * i / (m - 1);
        const double z = zmax * std::sin(u);
        const double c = (1.0 - 0.25 * gamma * z * z) / std::sqrt(1.0 - z * z);
        out << branch << ',' << zs * z << ',' << ps * std::acos(std::clamp(c, -1.0, 1.0))
            << '\n';
      }
      ++branch;
    }
  }
}

void otoc_cmd(const RunConfig& cfg) {
  const DimerParams params = params_of(cfg);
  const double omega = cfg.get_double("omega");
  const TimeScales ts = require_unstable(params, omega);
  const Propagator prop(build_hamiltonian(params), backend_of(cfg, params.n_particles()));
  const double t0 = cfg.get_double("squeeze_t0");
  StateVector state = coherent_state(params, cfg.get_double("z0"), cfg.get_double("phi0"));
  if (t0 != 0.0) state = squeeze_by_backward_evolution(prop, state, t0);
  const double t_max = time_or(cfg, "t_max", 1.5 * ts.tau_E);
  const auto times = linspace(0.0, t_max, cfg.get_size("time_points"));
  const auto obs_name = cfg.get_string("observable");
  NumberObservable obs;
  if (obs_name == "site1") {
    obs = NumberObservable::site1;
  } else if (obs_name == "imbalance") {
    obs = NumberObservable::imbalance;
  } else {
    throw ConfigError("observable must be site1 or imbalance");
  }
  const auto series = otoc(prop, state, times, params, t0 == 0.0 ? "coherent" : "squeezed", obs);

  // backward evolution narrows the packet along the unstable direction by e^{lambda t0}
  const double a = ts.a * std::exp(ts.lambda_s * std::min(t0, 0.0));
  const TimeScales eff = time_scales_from_scale(params, a);
  const auto dir = output_dir(cfg);
  {
    auto out = open_out(dir / "otoc.csv");
    out << "t,C,O,O_short,O_long,regime\n";
    for (std::size_t i = 0; i < series.size(); ++i) {
      const double t = series.times[i];
      out << t << ',' << series.values[i] << ',' << classical_otoc_with_scale(params, a, t) << ','
          << otoc_short_asymptote(params, t) << ','
          << otoc_long_asymptote_with_scale(params, a, t) << ','
          << to_string(regime_schedule(eff, t)) << '\n';
    }
  }
  json j;
  j["theta"] = params.theta();
  j["n_particles"] = params.n_particles();
  j["backend"] = to_string(prop.backend());
  j["squeeze_t0"] = t0;
  j["scales"] = scales_json(ts);
  j["effective_scales"] = scales_json(eff);
  const auto windows = fit_windows(eff, cfg.get_double("shrink"));
  auto try_fit = [&](Window w) -> json {
    try {
      return fit_json(fit_exponent(series, w));
    } catch (const std::exception& e) {
      return {{"error", e.what()}};
    }
  };
  j["fit_double_rate"] = try_fit(windows.double_rate);
  j["fit_single_rate"] = try_fit(windows.single_rate);
  j["fit_full"] = try_fit({ts.tau_s, ts.tau_E});
  try {
    j["kink"] = kink_json(detect_kink(series, {ts.tau_s, ts.tau_E}));
  } catch (const NumericalError& e) {
    j["kink"] = {{"error", e.what()}};
  }
  open_out(dir / "fits.json") << j.dump(2) << '\n';
}

void husimi_cmd(const RunConfig& cfg) {
  const DimerParams params = params_of(cfg);
  const Propagator prop(build_hamiltonian(params), backend_of(cfg, params.n_particles()));
  StateVector state = coherent_state(params, cfg.get_double("z0"), cfg.get_double("phi0"));
  const double t0 = cfg.get_double("squeeze_t0");
  if (t0 != 0.0) state = squeeze_by_backward_evolution(prop, state, t0);
  const auto ls = stability_exponent(params);
  const double fallback = ls.unstable ? std::log(params.n_particles()) / ls.value : 10.0;
  const std::size_t frames = cfg.get_size("frames");
  if (frames == 0) throw ConfigError("frames must be positive");
  const auto times = linspace(0.0, time_or(cfg, "t_max", fallback), frames);
  GridSpec spec;
  spec.nz = cfg.get_size("nz");
  spec.nphi = cfg.get_size("nphi");
  const bool binary = cfg.get_bool("binary");
  const auto dir = output_dir(cfg);
  auto index = open_out(dir / "frames.csv");
  index << "index,t\n";
  double t_prev = 0.0;
  for (std::size_t i = 0; i < frames; ++i) {
    if (times[i] != t_prev) state = prop.evolve(state, times[i] - t_prev);
    t_prev = times[i];
    write_husimi_frame(dir, i, husimi(params, state, spec), times[i], binary);
    index << i << ',' << times[i] << '\n';
  }
}

void scan_cmd(const RunConfig& cfg) {
  std::vector<double> thetas;
  if (cfg.get_string("thetas") != "auto") {
    thetas = cfg.get_doubles("thetas");
  } else {
    thetas = linspace(cfg.get_double("theta_min"), cfg.get_double("theta_max"),
                      cfg.get_size("theta_points"));
  }
  const auto n_list = cfg.get_ints("n_list");
  ScanOptions opts;
  opts.omega = cfg.get_double("omega");
  opts.time_points = cfg.get_size("time_points");
  opts.shrink = cfg.get_double("shrink");
  opts.max_tau_e = cfg.get_double("max_tau_e");
  const auto rows = theta_scan(thetas, n_list, opts);
  auto out = open_out(output_dir(cfg) / "scan.csv");
  write_scan_csv(out, rows);
  for (const auto& r : rows) {
    if (!r.error.empty()) {
      std::cerr << "theta=" << r.theta << " N=" << r.n_particles << ": " << r.error << '\n';
    }
  }
}

void twa_cmd(const RunConfig& cfg) {
  const DimerParams params = params_of(cfg);
  const double omega = cfg.get_double("omega");
  const TimeScales ts = require_unstable(params, omega);
  const auto times = linspace(0.0, time_or(cfg, "t_max", ts.tau_E), cfg.get_size("time_points"));
  TwaOptions opts;
  opts.tol = cfg.get_double("tol");
  const auto series = twa_otoc(params, omega, times, cfg.get_size("samples"),
                               static_cast<std::uint64_t>(cfg.get_double("seed")), opts);
  auto out = open_out(output_dir(cfg) / "twa.csv");
  out << "t,C,stderr,O\n";
  for (std::size_t i = 0; i < series.size(); ++i) {
    out << series.times[i] << ',' << series.values[i] << ',' << series.stderrs[i] << ','
        << classical_otoc(params, omega, series.times[i]) << '\n';
  }
}

}  // namespace

const std::vector<Command>& commands() {
  static const std::vector<Command> list = {
      {"stability-scan",
       "stability exponent of the antihom. point over theta",
       {{"output_dir", "out/stability"},
        {"theta_min", "-pi/2"},
        {"theta_max", "pi/2"},
        {"points", "721"},
        {"n_particles", "1000"}},
       stability_scan},
      {"phase-portrait",
       "energy landscape, fixed points and separatrix",
       {{"output_dir", "out/portrait"},
        {"theta", "1.35"},
        {"n_particles", "1000"},
        {"nz", "201"},
        {"nphi", "201"},
        {"separatrix_points", "200"}},
       phase_portrait},
      {"otoc",
       "quantum OTOC with classical overlay and fits",
       {{"output_dir", "out/otoc"},
        {"theta", "1.35"},
        {"n_particles", "1000"},
        {"omega", "1"},
        {"backend", "auto"},
        {"z0", "0"},
        {"phi0", "0"},
        {"squeeze_t0", "0"},
        {"t_max", "auto"},
        {"time_points", "400"},
        {"observable", "site1"},
        {"shrink", "0.5"}},
       otoc_cmd},
      {"husimi",
       "Husimi frames of the evolving state",
       {{"output_dir", "out/husimi"},
        {"theta", "1.35"},
        {"n_particles", "1000"},
        {"backend", "auto"},
        {"z0", "0"},
        {"phi0", "0"},
        {"squeeze_t0", "0"},
        {"t_max", "auto"},
        {"frames", "8"},
        {"nz", "201"},
        {"nphi", "201"},
        {"binary", "false"}},
       husimi_cmd},
      {"scan",
       "fitted exponents over a theta grid",
       {{"output_dir", "out/scan"},
        {"thetas", "auto"},
        {"theta_min", "1.2"},
        {"theta_max", "1.5"},
        {"theta_points", "12"},
        {"n_list", "100,1000"},
        {"omega", "1"},
        {"time_points", "400"},
        {"shrink", "0.5"},
        {"max_tau_e", "60"}},
       scan_cmd},
      {"twa",
       "truncated Wigner estimate of the classical OTOC",
       {{"output_dir", "out/twa"},
        {"theta", "1.35"},
        {"n_particles", "1000"},
        {"omega", "1"},
        {"samples", "10000"},
        {"seed", "1"},
        {"tol", "1e-9"},
        {"t_max", "auto"},
        {"time_points", "20"}},
       twa_cmd},
  };
  return list;
}

}  // namespace dimer::cli
