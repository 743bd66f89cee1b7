#include "detwave/profiles.hpp"
#include "detwave/errors.hpp"
#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <boost/math/tools/roots.hpp>
#include <boost/numeric/odeint.hpp>
#include <gsl/gsl_errno.h>
#include <gsl/gsl_odeiv2.h>

namespace detwave {

namespace {

namespace tools = boost::math::tools;
namespace odeint = boost::numeric::odeint;

struct Launch {
  double u_minus, alpha_minus, nu;
  std::array<double, 2> y0;
  double zstar;
};

Launch weak_launch(const ModelConfig& cfg, double u_plus, double s, double eps)
{
  auto r = rh_states(cfg, u_plus, s, Branch::Detonation);
  const auto& ig = cfg.ignition;
  Launch L;
  L.u_minus = r.weak;
  if (!(L.u_minus > ig.u_i && L.u_minus < ig.u_sup))
    fail(ErrorKind::IgnitionPlacement, "weak Rankine-Hugoniot root lies outside the ignition band");
  L.alpha_minus = flux_eval(cfg.flux, L.u_minus).df - s;
  L.nu = cfg.k / s * ignition_eval(ig, L.u_minus).phi;
  double vu = -s * cfg.q, vz = L.nu - L.alpha_minus;
  double n = std::hypot(vu, vz);
  L.y0 = {L.u_minus + eps * vu / n, eps * vz / n};
  double fp = flux_eval(cfg.flux, u_plus).f;
  L.zstar = 1.0 + (flux_eval(cfg.flux, ig.u_i).f - fp - s * (ig.u_i - u_plus)) / (s * cfg.q);
  return L;
}

// state: u, z, T = int tr, I = int e^{-T} delta_s
struct Augmented {
  const ModelConfig* cfg;
  TWField tw;
  double fplus;
  void operator()(const std::array<double, 4>& y, std::array<double, 4>& dy, double) const
  {
    double u = y[0], z = y[1];
    double F = tw.F(u, z), G = tw.G(u, z);
    auto fv = flux_eval(cfg->flux, u);
    auto ph = ignition_eval(cfg->ignition, u);
    dy[0] = F;
    dy[1] = G;
    dy[2] = fv.df - tw.s + cfg->k / tw.s * ph.phi;
    dy[3] = std::exp(-y[2]) * (-(G / tw.s) * (2 * F - (fv.f - fplus)));
  }
  double delta_s(double u, double z) const
  {
    double F = tw.F(u, z), G = tw.G(u, z);
    return -(G / tw.s) * (2 * F - (flux_eval(cfg->flux, u).f - fplus));
  }
};

struct Stall {
  double u, z;
};

// u decreases strictly along the orbit, so z, T and the Melnikov integral are integrated against u
struct GraphSystem {
  Augmented aug;
  bool integrals;
  void operator()(const std::array<double, 3>& y, std::array<double, 3>& dy, double u) const
  {
    std::array<double, 4> full{u, y[0], 0.0, y[2]}, d;
    aug(full, d, 0.0);
    if (!(d[0] < 0)) throw Stall{u, y[0]};
    dy = {d[1] / d[0], 0.0, 0.0};
    if (integrals) {
      dy[1] = d[2] / d[0];
      dy[2] = std::exp(-y[1]) * aug.delta_s(u, y[0]) / d[0];
    }
  }
};

struct GraphEnd {
  Launch L;
  std::array<double, 3> y;   // z, T, I at u = u_i
  bool stalled = false;
};

GraphEnd shoot_graph(const ModelConfig& cfg, double u_plus, double s, bool integrals)
{
  GraphEnd g{weak_launch(cfg, u_plus, s, 1e-7), {}};
  Augmented aug{&cfg, TWField{&cfg, u_plus, 1.0, s, true}, flux_eval(cfg.flux, u_plus).f};
  g.y = {g.L.y0[1], 0.0, 0.0};
  auto ctrl = odeint::make_controlled(1e-14, 1e-12, odeint::runge_kutta_dopri5<std::array<double, 3>>());
  std::size_t steps = 0;
  auto obs = [&](const std::array<double, 3>&, double) {
    if (++steps > 20000) fail(ErrorKind::NonConvergence, "weak-saddle orbit integration exceeded the step limit");
  };
  try {
    odeint::integrate_adaptive(ctrl, GraphSystem{aug, integrals}, g.y, g.L.y0[0], cfg.ignition.u_i, -1e-4, obs);
  } catch (const Stall& st) {
    // F vanishes only at the rest point (u_i, z*), which the orbit can approach but not pass
    g.stalled = true;
    g.y[0] = st.z;
  }
  for (double v : g.y)
    if (!std::isfinite(v)) fail(ErrorKind::Solve, "weak-saddle orbit integration produced a non-finite state");
  if (g.y[0] < 0) fail(ErrorKind::Solve, "weak-saddle orbit left the trapping region {F <= 0, z >= 0}");
  return g;
}

// z(u) alone, implicit: near the slow curve F = 0 the graph equation is stiff like 1/(k phi)
struct StiffGraph {
  const ModelConfig* cfg;
  TWField tw;
  bool stalled = false;
  double stall_z = 0;

  static int rhs(double u, const double y[], double dy[], void* self)
  {
    auto* g = static_cast<StiffGraph*>(self);
    double F = g->tw.F(u, y[0]);
    if (!(F < 0)) return g->stall(y[0]);
    dy[0] = g->tw.G(u, y[0]) / F;
    return GSL_SUCCESS;
  }
  static int jac(double u, const double y[], double* J, double dfdu[], void* self)
  {
    auto* g = static_cast<StiffGraph*>(self);
    double s = g->tw.s, ks = g->cfg->k / s;
    double F = g->tw.F(u, y[0]), G = g->tw.G(u, y[0]);
    if (!(F < 0)) return g->stall(y[0]);
    auto ph = ignition_eval(g->cfg->ignition, u);
    double Gz = ks * ph.phi, Gu = ks * ph.dphi * y[0];
    double Fu = flux_eval(g->cfg->flux, u).df - s, Fz = -s * g->cfg->q;
    J[0] = (Gz * F - G * Fz) / (F * F);
    dfdu[0] = (Gu * F - G * Fu) / (F * F);
    return GSL_SUCCESS;
  }
  int stall(double z)
  {
    stalled = true;
    stall_z = z;
    return GSL_EBADFUNC;
  }
};

double shoot_z_stiff(const ModelConfig& cfg, double u_plus, const Launch& L, double s, bool& stalled)
{
  StiffGraph g{&cfg, TWField{&cfg, u_plus, 1.0, s, true}};
  gsl_odeiv2_system sys{&StiffGraph::rhs, &StiffGraph::jac, 1, &g};
  std::unique_ptr<gsl_odeiv2_driver, decltype(&gsl_odeiv2_driver_free)> drv(
      gsl_odeiv2_driver_alloc_y_new(&sys, gsl_odeiv2_step_msbdf, -1e-6, 1e-13, 1e-12), &gsl_odeiv2_driver_free);
  gsl_odeiv2_driver_set_nmax(drv.get(), 200000);
  double u = L.y0[0], y[1] = {L.y0[1]};
  int st = gsl_odeiv2_driver_apply(drv.get(), &u, cfg.ignition.u_i, y);
  stalled = g.stalled;
  if (g.stalled) return g.stall_z;
  if (st == GSL_EMAXITER) fail(ErrorKind::NonConvergence, "weak-saddle orbit integration exceeded the step limit");
  if (st != GSL_SUCCESS) fail(ErrorKind::Solve, "weak-saddle orbit integration failed");
  return y[0];
}
}

ShootResult shoot_weak_manifold(const ModelConfig& cfg, double u_plus, double s)
{
  auto L = weak_launch(cfg, u_plus, s, 1e-7);
  bool stalled = false;
  ShootResult r;
  r.u_minus = L.u_minus;
  try {
    auto g = shoot_graph(cfg, u_plus, s, false);
    stalled = g.stalled;
    r.zhat = g.y[0];
  } catch (const Error&) {
    r.zhat = shoot_z_stiff(cfg, u_plus, L, s, stalled);
  }
  if (!std::isfinite(r.zhat) || r.zhat < 0)
    fail(ErrorKind::Solve, "weak-saddle orbit left the trapping region {F <= 0, z >= 0}");
  // the orbit converges onto the rest point (u_i, z*) instead of crossing u = u_i
  r.trapped = stalled || r.zhat - L.zstar <= 1e-7;
  if (r.trapped) r.zhat = L.zstar;
  r.d = r.zhat - 1.0;
  return r;
}

std::vector<std::array<double, 2>> weak_manifold_orbit(const ModelConfig& cfg, double u_plus, double s, int n)
{
  if (n < 2) fail(ErrorKind::Validation, "orbit needs at least two samples");
  auto L = weak_launch(cfg, u_plus, s, 1e-7);
  StiffGraph g{&cfg, TWField{&cfg, u_plus, 1.0, s, true}};
  gsl_odeiv2_system sys{&StiffGraph::rhs, &StiffGraph::jac, 1, &g};
  std::unique_ptr<gsl_odeiv2_driver, decltype(&gsl_odeiv2_driver_free)> drv(
      gsl_odeiv2_driver_alloc_y_new(&sys, gsl_odeiv2_step_msbdf, -1e-6, 1e-13, 1e-12), &gsl_odeiv2_driver_free);
  gsl_odeiv2_driver_set_nmax(drv.get(), 200000);
  std::vector<std::array<double, 2>> out{{L.u_minus, 0.0}, {L.y0[0], L.y0[1]}};
  double u = L.y0[0], y[1] = {L.y0[1]};
  for (int j = 1; j < n; ++j) {
    double u1 = L.y0[0] + (cfg.ignition.u_i - L.y0[0]) * j / (n - 1);
    int st = gsl_odeiv2_driver_apply(drv.get(), &u, u1, y);
    if (g.stalled) {
      out.push_back({u, g.stall_z});
      break;
    }
    if (st != GSL_SUCCESS) fail(ErrorKind::Solve, "weak-saddle orbit integration failed");
    out.push_back({u, y[0]});
  }
  return out;
}

double melnikov_separation(const ModelConfig& cfg, double u_plus, double s)
{
  return shoot_weak_manifold(cfg, u_plus, s).d;
}

double melnikov_fd_s(const ModelConfig& cfg, double u_plus, double s)
{
  double h = 1e-4 * s;
  auto d = [&](double v) { return melnikov_separation(cfg, u_plus, v); };
  if (s - h < cj_speeds(cfg, u_plus).first) return (-3 * d(s) + 4 * d(s + h) - d(s + 2 * h)) / (2 * h);
  return (d(s + h) - d(s - h)) / (2 * h);
}

// integrand nodes on the stored grid; composite Simpson with a 3/8 closing panel
static double simpson(const std::vector<double>& f, double h)
{
  std::size_t n = f.size() - 1;
  if (n == 0) return 0.0;
  if (n == 1) return 0.5 * h * (f[0] + f[1]);
  double acc = 0;
  std::size_t m = n;
  if (n % 2 == 1) {
    m = n - 3;
    acc += 3.0 * h / 8.0 * (f[m] + 3 * f[m + 1] + 3 * f[m + 2] + f[m + 3]);
  }
  for (std::size_t j = 0; j + 1 < m; j += 2) acc += h / 3.0 * (f[j] + 4 * f[j + 1] + f[j + 2]);
  return acc;
}

MelnikovPartials melnikov_partials(const Profile& p)
{
  if (p.degenerate) fail(ErrorKind::DegenerateProfile, "Melnikov quadrature requires a nondegenerate profile");
  if (p.wave.cls != WaveClass::WeakDetonation)
    fail(ErrorKind::NotAWave, "Melnikov quadrature applies to weak detonations");
  const ModelConfig& cfg = p.cfg;
  double s = p.wave.s, up = p.wave.u_plus, k = cfg.k;
  TWField tw{&cfg, up, 1.0, s, true};
  double fplus = flux_eval(cfg.flux, up).f;
  double ap = p.wave.alpha_plus;
  std::size_t r = 0;
  while (r + 1 < p.x.size() && p.x[r] < p.x_ignition - 1e-12 * p.dx) ++r;
  std::size_t n = r + 1;
  std::vector<double> T(n, 0.0), tr(n), dtr(n);
  for (std::size_t j = 0; j < n; ++j) {
    auto fv = flux_eval(cfg.flux, p.u[j]);
    auto ph = ignition_eval(cfg.ignition, p.u[j]);
    tr[j] = fv.df - s + k / s * ph.phi;
    dtr[j] = (fv.d2f + k / s * ph.dphi) * p.ux[j];
  }
  double h = p.dx;
  for (std::size_t j = 1; j < n; ++j)
    T[j] = T[j - 1] + 0.5 * h * (tr[j - 1] + tr[j]) + h * h / 12.0 * (dtr[j - 1] - dtr[j]);
  std::vector<double> Is(n), Ik(n), Iq(n), Iu(n);
  for (std::size_t j = 0; j < n; ++j) {
    double u = p.u[j], z = p.z[j];
    double F = tw.F(u, z), G = tw.G(u, z);
    double w = std::exp(T[r] - T[j]);
    Is[j] = w * (-(G / s) * (2 * F - (flux_eval(cfg.flux, u).f - fplus)));
    Ik[j] = w * F * G / k;
    Iq[j] = w * s * (z - 1) * G;
    Iu[j] = w * ap * G;
  }
  double am = std::abs(p.wave.alpha_minus);
  double scale = 1.0 / p.ux[r];
  auto integ = [&](const std::vector<double>& I) { return scale * (simpson(I, h) + I[0] / am); };
  return {integ(Is), integ(Iu), integ(Ik), integ(Iq)};
}

double melnikov_derivative_s(const Profile& p)
{
  return melnikov_partials(p).dd_ds;
}

MelnikovResult melnikov_full(const ModelConfig& cfg, double u_plus, double s)
{
  MelnikovResult out;
  auto sh = shoot_weak_manifold(cfg, u_plus, s);
  out.d = sh.d;
  out.dd_ds_fd = melnikov_fd_s(cfg, u_plus, s);
  out.dd_ds = std::numeric_limits<double>::quiet_NaN();
  if (sh.trapped) return out;
  if (std::abs(sh.d) <= 1e-6) {
    auto w = classify_wave(cfg, sh.u_minus, u_plus, s);
    auto prof = compute_profile(cfg, w);
    auto parts = melnikov_partials(prof);
    out.dd_ds = parts.dd_ds;
    out.partials = parts;
    return out;
  }
  // off the root the same integral runs along the shooting orbit up to u = u_i
  auto g = shoot_graph(cfg, u_plus, s, true);
  Augmented aug{&cfg, TWField{&cfg, u_plus, 1.0, s, true}, flux_eval(cfg.flux, u_plus).f};
  double tail = aug.delta_s(g.L.y0[0], g.L.y0[1]) / std::abs(g.L.alpha_minus);
  double ux = aug.tw.F(cfg.ignition.u_i, g.y[0]);
  out.dd_ds = std::exp(g.y[1]) * (g.y[2] + tail) / ux;
  return out;
}

WeakSpeed find_weak_detonation_speed(const ModelConfig& cfg, double u_plus, double s_lo, double s_hi)
{
  double s_star = cj_speeds(cfg, u_plus).first;
  if (s_lo < s_star * (1 - 1e-12)) fail(ErrorKind::Validation, "bracket starts below the CJ speed s_*");
  double dlo = melnikov_separation(cfg, u_plus, s_lo);
  if (dlo <= 0) return {false, s_star, dlo};
  double dhi = melnikov_separation(cfg, u_plus, s_hi);
  if (dhi > 0) fail(ErrorKind::Bracket, "d does not change sign on the speed bracket");
  auto d = [&](double s) { return melnikov_separation(cfg, u_plus, s); };
  boost::uintmax_t it = 200;
  auto tol = [](double a, double b) { return std::abs(b - a) <= 1e-15 * std::max(1.0, std::abs(a)); };
  auto res = tools::toms748_solve(d, s_lo, s_hi, dlo, dhi, tol, it);
  double a = res.first, b = res.second;
  double da = d(a), db = d(b);
  double s_hat = std::abs(da) <= std::abs(db) ? a : b;
  double dv = std::min(std::abs(da), std::abs(db)) == std::abs(da) ? da : db;
  if (std::abs(dv) > 1e-8) fail(ErrorKind::NonConvergence, "weak detonation speed not resolved to |d| <= 1e-8");
  return {true, s_hat, dv};
}

WeakSpeed find_weak_detonation_speed(const ModelConfig& cfg, double u_plus)
{
  double s_star = cj_speeds(cfg, u_plus).first;
  double s_lo = s_star * (1 + 1e-9);
  double dlo = melnikov_separation(cfg, u_plus, s_lo);
  if (dlo <= 0) return {false, s_star, dlo};
  for (int j = 0; j < 30; ++j) {
    double s_hi = s_star * (1 + 0.05 * std::ldexp(1.0, j));
    if (melnikov_separation(cfg, u_plus, s_hi) <= 0) return find_weak_detonation_speed(cfg, u_plus, s_lo, s_hi);
  }
  fail(ErrorKind::Bracket, "no speed with d < 0 found above s_*");
}

}
