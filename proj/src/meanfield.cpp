#include "dimer/meanfield.hpp"

#include <cmath>
#include <numbers>
#include <ostream>
#include <stdexcept>
#include <string>

#include "dimer/errors.hpp"
#include "dimer/ode.hpp"

namespace dimer {

namespace {

constexpr double kPoleGuard = 1e-10;

double wrap_angle(double phi) {
  double w = std::remainder(phi, 2.0 * std::numbers::pi);
  if (w <= -std::numbers::pi) w += 2.0 * std::numbers::pi;
  return w;
}

struct Coefficients {
  double c4;  // 4 cos(theta)
  double s2;  // 2 sin(theta)
};

Coefficients coefficients(const DimerParams& params) {
  return {4.0 * std::cos(params.theta()), 2.0 * std::sin(params.theta())};
}

void check_interior(double z) {
  if (!(std::abs(z) <= 1.0 - kPoleGuard)) {
    throw NumericalError("mean-field orbit reached the |z| = 1 coordinate singularity (z = " +
                         std::to_string(z) + ")");
  }
}

// Raw flow and variational system, signalling domain exits to the stepper.
struct Flow {
  Coefficients k;

  void operator()(const std::array<double, 2>& y, std::array<double, 2>& dy) const {
    const double z = y[0];
    if (!(std::abs(z) < 1.0)) throw ode::DomainError{"|z| >= 1"};
    const double r = std::sqrt(1.0 - z * z);
    dy[0] = -k.c4 * r * std::sin(y[1]);
    dy[1] = k.c4 * z * std::cos(y[1]) / r - k.s2 * z;
  }
};

struct TangentFlow {
  Coefficients k;

  // y = (z, phi, m00, m01, m10, m11)
  void operator()(const std::array<double, 6>& y, std::array<double, 6>& dy) const {
    const double z = y[0];
    if (!(std::abs(z) < 1.0)) throw ode::DomainError{"|z| >= 1"};
    const double r2 = 1.0 - z * z;
    const double r = std::sqrt(r2);
    const double sp = std::sin(y[1]);
    const double cp = std::cos(y[1]);
    dy[0] = -k.c4 * r * sp;
    dy[1] = k.c4 * z * cp / r - k.s2 * z;
    const double j00 = k.c4 * z * sp / r;
    const double j01 = -k.c4 * r * cp;
    const double j10 = k.c4 * cp / (r2 * r) - k.s2;
    const double j11 = -j00;
    dy[2] = j00 * y[2] + j01 * y[4];
    dy[3] = j00 * y[3] + j01 * y[5];
    dy[4] = j10 * y[2] + j11 * y[4];
    dy[5] = j10 * y[3] + j11 * y[5];
  }
};

ode::Options ode_options(double tol) {
  if (!(tol > 0.0)) throw std::invalid_argument("integration tolerance must be positive");
  ode::Options opt;
  // the local error target sits a decade below `tol` so that energy drift over
  // a few tens of time units stays at the requested level
  opt.rtol = 0.1 * tol;
  opt.atol = 0.1 * tol;
  opt.initial_step = 1e-3;
  opt.max_step = 0.05;
  return opt;
}

void check_times(std::span<const double> times) {
  for (std::size_t i = 0; i < times.size(); ++i) {
    if (!std::isfinite(times[i]) || times[i] < 0.0 || (i > 0 && times[i] < times[i - 1])) {
      throw std::invalid_argument("sample times must be finite, >= 0 and ascending");
    }
  }
}

}  // namespace

Mat2 Mat2::operator*(const Mat2& o) const {
  return {m00 * o.m00 + m01 * o.m10, m00 * o.m01 + m01 * o.m11, m10 * o.m00 + m11 * o.m10,
          m10 * o.m01 + m11 * o.m11};
}

Eigen2 eigenvalues(const Mat2& m) {
  const double half_tr = 0.5 * m.trace();
  const double disc = half_tr * half_tr - m.det();
  if (disc >= 0.0) {
    const double s = std::sqrt(disc);
    return {{half_tr + s, half_tr - s}, {0.0, 0.0}};
  }
  const double s = std::sqrt(-disc);
  return {{half_tr, half_tr}, {s, -s}};
}

double classical_energy(const DimerParams& params, PhasePoint p) {
  const double st = std::sin(params.theta());
  const double ct = std::cos(params.theta());
  const double r = std::sqrt(std::max(0.0, 1.0 - p.z * p.z));
  return 2.0 * ct * r * std::cos(p.phi) + st * (0.5 * p.z * p.z + 0.5);
}

std::pair<double, double> eom(const DimerParams& params, PhasePoint p) {
  if (!(std::abs(p.z) < 1.0)) {
    throw NumericalError("eom: dphi/dt is singular at |z| = 1 (z = " + std::to_string(p.z) + ")");
  }
  std::array<double, 2> dy;
  Flow{coefficients(params)}({p.z, p.phi}, dy);
  return {dy[0], dy[1]};
}

Mat2 jacobian(const DimerParams& params, PhasePoint p) {
  if (!(std::abs(p.z) < 1.0)) throw NumericalError("jacobian: singular at |z| = 1");
  const auto k = coefficients(params);
  const double r2 = 1.0 - p.z * p.z;
  const double r = std::sqrt(r2);
  const double sp = std::sin(p.phi);
  const double cp = std::cos(p.phi);
  const double j00 = k.c4 * p.z * sp / r;
  return {j00, -k.c4 * r * cp, k.c4 * cp / (r2 * r) - k.s2, -j00};
}

Trajectory integrate(const DimerParams& params, PhasePoint p0, double t_final, double tol) {
  if (!(t_final >= 0.0) || !std::isfinite(t_final)) {
    throw std::invalid_argument("integrate: t_final must be finite and >= 0");
  }
  check_interior(p0.z);
  ode::DormandPrince<2> stepper(ode_options(tol));
  std::array<double, 2> y{p0.z, p0.phi};
  Trajectory out{{0.0, p0}};
  stepper.advance(
      Flow{coefficients(params)}, y, 0.0, t_final,
      [&](double t, const std::array<double, 2>& s) { out.push_back({t, {s[0], s[1]}}); },
      [](const std::array<double, 2>& s) { check_interior(s[0]); });
  return out;
}

Trajectory integrate(const DimerParams& params, PhasePoint p0, std::span<const double> times,
                     double tol) {
  check_times(times);
  check_interior(p0.z);
  ode::DormandPrince<2> stepper(ode_options(tol));
  std::array<double, 2> y{p0.z, p0.phi};
  Trajectory out;
  out.reserve(times.size());
  double t = 0.0;
  for (double target : times) {
    stepper.advance(
        Flow{coefficients(params)}, y, t, target, [](double, const auto&) {},
        [](const std::array<double, 2>& s) { check_interior(s[0]); });
    t = target;
    out.push_back({t, {y[0], y[1]}});
  }
  return out;
}

std::vector<TangentFrame> monodromy(const DimerParams& params, PhasePoint p0,
                                    std::span<const double> times, double tol) {
  check_times(times);
  check_interior(p0.z);
  ode::DormandPrince<6> stepper(ode_options(tol));
  std::array<double, 6> y{p0.z, p0.phi, 1.0, 0.0, 0.0, 1.0};
  std::vector<TangentFrame> out;
  out.reserve(times.size());
  double t = 0.0;
  for (double target : times) {
    stepper.advance(
        TangentFlow{coefficients(params)}, y, t, target, [](double, const auto&) {},
        [](const std::array<double, 6>& s) { check_interior(s[0]); });
    t = target;
    out.push_back({t, {y[0], y[1]}, {y[2], y[3], y[4], y[5]}});
  }
  return out;
}

std::vector<TangentFrame> monodromy(const DimerParams& params, PhasePoint p0, double t_final,
                                    double tol) {
  if (!(t_final >= 0.0)) throw std::invalid_argument("monodromy: t_final must be >= 0");
  check_interior(p0.z);
  ode::DormandPrince<6> stepper(ode_options(tol));
  std::array<double, 6> y{p0.z, p0.phi, 1.0, 0.0, 0.0, 1.0};
  std::vector<TangentFrame> out{{0.0, p0, Mat2::identity()}};
  stepper.advance(
      TangentFlow{coefficients(params)}, y, 0.0, t_final,
      [&](double t, const std::array<double, 6>& s) {
        out.push_back({t, {s[0], s[1]}, {s[2], s[3], s[4], s[5]}});
      },
      [](const std::array<double, 6>& s) { check_interior(s[0]); });
  return out;
}

FixedPointReport classify_fixed_point(const DimerParams& params, PhasePoint p) {
  const Mat2 jac = jacobian(params, p);
  const double det = jac.det();
  constexpr double marginal = 1e-12;
  if (det < -marginal) return {p, FixedPointKind::hyperbolic, std::sqrt(-det), jac};
  if (det > marginal) return {p, FixedPointKind::stable_center, std::sqrt(det), jac};
  return {p, FixedPointKind::marginal, 0.0, jac};
}

FixedPointSearch find_fixed_points(const DimerParams& params) {
  FixedPointSearch result;
  result.points.push_back(classify_fixed_point(params, {0.0, std::numbers::pi}));
  result.points.push_back(classify_fixed_point(params, {0.0, 0.0}));

  auto is_known = [&](PhasePoint p) {
    for (const auto& fp : result.points) {
      const double dz = p.z - fp.location.z;
      const double dphi = wrap_angle(p.phi - fp.location.phi);
      if (std::hypot(dz, dphi) < 1e-6) return true;
    }
    return false;
  };

  constexpr int grid = 64;
  for (int iz = 0; iz < grid; ++iz) {
    for (int ip = 0; ip < grid; ++ip) {
      PhasePoint p{-1.0 + (iz + 0.5) * 2.0 / grid,
                   -std::numbers::pi + ip * 2.0 * std::numbers::pi / grid};
      bool converged = false;
      for (int iter = 0; iter < 60; ++iter) {
        const auto [f0, f1] = eom(params, p);
        const Mat2 jac = jacobian(params, p);
        const double det = jac.det();
        if (std::abs(det) < 1e-300) break;
        double dz = -(jac.m11 * f0 - jac.m01 * f1) / det;
        double dphi = -(-jac.m10 * f0 + jac.m00 * f1) / det;
        // damp steps that would leave the open strip |z| < 1
        while (std::abs(p.z + dz) >= 1.0 - 1e-9) {
          dz *= 0.5;
          dphi *= 0.5;
        }
        p.z += dz;
        p.phi += dphi;
        if (std::hypot(dz, dphi) < 1e-13) {
          const auto [g0, g1] = eom(params, p);
          converged = std::hypot(g0, g1) < 1e-10;
          break;
        }
      }
      if (!converged) {
        ++result.nonconverged_seeds;
        continue;
      }
      p.phi = wrap_angle(p.phi);
      if (!is_known(p)) result.points.push_back(classify_fixed_point(params, p));
    }
  }
  return result;
}

StabilityExponent stability_exponent(double theta) {
  const double gamma = std::tan(theta);
  if (!(gamma > 2.0 + 1e-12)) return {0.0, false};
  return {4.0 * std::cos(theta) * std::sqrt(gamma / 2.0 - 1.0), true};
}

StabilityExponent stability_exponent(const DimerParams& params) {
  return stability_exponent(params.theta());
}

PhasePoint linearized_evolution(const DimerParams& params, PhasePoint p0, double t) {
  const auto ls = stability_exponent(params);
  if (!ls.unstable) {
    throw ConfigError("linearized_evolution: requires gamma > 2 (unstable antihom. point)");
  }
  const double lam = ls.value;
  const double c4 = 4.0 * std::cos(params.theta());
  const double ch = std::cosh(lam * t);
  const double sh = std::sinh(lam * t);
  return {p0.z * ch - (c4 * p0.phi / lam) * sh, p0.phi * ch - (lam * p0.z / c4) * sh};
}

void write_trajectory_csv(std::ostream& os, const DimerParams& params, const Trajectory& traj) {
  os.precision(17);
  os << "t,z,phi,h\n";
  for (const auto& s : traj) {
    os << s.t << ',' << s.point.z << ',' << s.point.phi << ','
       << classical_energy(params, s.point) << '\n';
  }
}

}  // namespace dimer
