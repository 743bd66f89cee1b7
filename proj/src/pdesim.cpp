#include "detwave/pdesim.hpp"
#include "detwave/errors.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numbers>
#include <memory>
#include <boost/math/interpolators/cardinal_cubic_b_spline.hpp>
#include <boost/math/tools/minima.hpp>
#include <spdlog/spdlog.h>

namespace detwave {

std::string boundary_name(Boundary b)
{
  switch (b) {
  case Boundary::EndstateDirichlet: return "EndstateDirichlet";
  case Boundary::ZeroGradient: return "ZeroGradient";
  case Boundary::Periodic: return "Periodic";
  }
  return "?";
}

Boundary boundary_from_name(const std::string& s)
{
  for (auto b : {Boundary::EndstateDirichlet, Boundary::ZeroGradient, Boundary::Periodic})
    if (boundary_name(b) == s) return b;
  fail(ErrorKind::Validation, "unknown boundary '" + s + "'");
}

void check_grid(const SimGrid& g)
{
  if (!(g.n_cells >= 3) || !(g.x_max > g.x_min) || !std::isfinite(g.dx()))
    fail(ErrorKind::Validation, "simulation grid needs x_min < x_max and at least 3 cells");
}

double conserved_total(const ModelConfig& cfg, const SimState& st, const SimGrid& g)
{
  std::size_t n = st.u.size();
  double acc = 0;
  for (std::size_t i = 0; i < n; ++i) {
    double w = st.u[i] + cfg.q * st.z[i];
    acc += (g.boundary != Boundary::Periodic && (i == 0 || i + 1 == n)) ? 0.5 * w : w;
  }
  return acc * g.dx();
}

double cfl_bound(const ModelConfig& cfg, const SimState& st, const SimGrid& g)
{
  double s = g.frame_speed, a = 0;
  auto upd = [&](double u) { a = std::max(a, std::abs(flux_eval(cfg.flux, u).df) + std::abs(s)); };
  for (double u : st.u) upd(u);
  if (g.boundary == Boundary::EndstateDirichlet) {
    upd(g.left.u);
    upd(g.right.u);
  }
  double dx = g.dx();
  double adv = a > 0 ? dx / a : std::numeric_limits<double>::infinity();
  return 0.45 * std::min(adv, 0.5 * dx * dx);
}

namespace {

// cell values padded with one ghost cell on each side
struct Padded {
  std::vector<double> u, z;
};

Padded pad(const SimState& st, const SimGrid& g)
{
  std::size_t n = st.u.size();
  Padded p;
  p.u.resize(n + 2);
  p.z.resize(n + 2);
  std::copy(st.u.begin(), st.u.end(), p.u.begin() + 1);
  std::copy(st.z.begin(), st.z.end(), p.z.begin() + 1);
  switch (g.boundary) {
  case Boundary::EndstateDirichlet:
    p.u[0] = g.left.u;
    p.z[0] = g.left.z;
    p.u[n + 1] = g.right.u;
    p.z[n + 1] = g.right.z;
    break;
  case Boundary::ZeroGradient:
    p.u[0] = st.u[0];
    p.z[0] = st.z[0];
    p.u[n + 1] = st.u[n - 1];
    p.z[n + 1] = st.z[n - 1];
    break;
  case Boundary::Periodic:
    p.u[0] = st.u[n - 1];
    p.z[0] = st.z[n - 1];
    p.u[n + 1] = st.u[0];
    p.z[n + 1] = st.z[0];
    break;
  }
  return p;
}

}

SimState step(const ModelConfig& cfg, const SimState& st, const SimGrid& g, double dt)
{
  check_grid(g);
  std::size_t n = st.u.size();
  if (n != static_cast<std::size_t>(g.n_cells) || st.z.size() != n)
    fail(ErrorKind::Validation, "state size does not match the grid");
  for (std::size_t i = 0; i < n; ++i)
    if (!std::isfinite(st.u[i]) || !std::isfinite(st.z[i]))
      fail(ErrorKind::NonFiniteState, "non-finite input state at cell " + std::to_string(i));
  double bound = cfl_bound(cfg, st, g);
  if (!(dt > 0) || dt > bound * (1 + 1e-12))
    fail(ErrorKind::CFLViolation, "time step " + std::to_string(dt) + " exceeds the CFL bound " + std::to_string(bound));
  const double q = cfg.q, s = g.frame_speed, dx = g.dx(), r = dt / dx;
  Padded p = pad(st, g);

  // interface j sits between padded cells j and j+1
  std::vector<double> flux(n + 1), zflux(n + 1);
  for (std::size_t j = 0; j <= n; ++j) {
    double ul = p.u[j], ur = p.u[j + 1];
    double fl = flux_eval(cfg.flux, ul).f, fr = flux_eval(cfg.flux, ur).f;
    double a = ur != ul ? (fr - fl) / (ur - ul) : flux_eval(cfg.flux, ul).df;
    double fup = a >= 0 ? fl : fr;
    // frame term -s*(u + q z) moves with speed -s
    std::size_t jw = s > 0 ? j + 1 : j;
    double zf = -s * p.z[jw];
    double wf = -s * (p.u[jw] + q * p.z[jw]);
    flux[j] = fup + wf - (ur - ul) / dx;
    zflux[j] = zf;
  }

  SimState out;
  out.t = st.t + dt;
  out.u.resize(n);
  out.z.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    double w = st.u[i] + q * st.z[i] - r * (flux[i + 1] - flux[i]);
    double z = st.z[i] - r * (zflux[i + 1] - zflux[i]);
    // exact reaction with u frozen; w is untouched by the source
    double uz = w - q * z;
    z *= std::exp(-cfg.k * ignition_eval(cfg.ignition, uz).phi * dt);
    out.z[i] = z;
    out.u[i] = w - q * z;
    if (!std::isfinite(out.u[i]) || !std::isfinite(out.z[i]))
      fail(ErrorKind::NonFiniteState, "non-finite state at cell " + std::to_string(i) + ", t = " + std::to_string(out.t));
  }
  out.conserved_total = conserved_total(cfg, out, g);
  return out;
}

SimState evolve(const ModelConfig& cfg, SimState st, const SimGrid& g, double t_end, double cfl_fraction,
                const SimObserver& obs)
{
  if (!(cfl_fraction > 0 && cfl_fraction <= 1)) fail(ErrorKind::Validation, "cfl_fraction must lie in (0, 1]");
  while (st.t < t_end * (1 - 1e-14)) {
    double dt = std::min(cfl_fraction * cfl_bound(cfg, st, g), t_end - st.t);
    st = step(cfg, st, g, dt);
    if (obs) obs(st);
  }
  return st;
}

SimState riemann_initial(const SimGrid& g, RiemannState L, RiemannState R)
{
  SimState st;
  st.u.resize(g.n_cells);
  st.z.resize(g.n_cells);
  for (int i = 0; i < g.n_cells; ++i) {
    bool left = g.center(i) < 0;
    st.u[i] = left ? L.u : R.u;
    st.z[i] = left ? L.z : R.z;
  }
  return st;
}

WaveShape profile_shape(const Profile& p)
{
  return [&p](double x) {
    auto P = p.at(x);
    return std::make_pair(P.u, P.z);
  };
}

WaveShape state_shape(const SimState& st, const SimGrid& g)
{
  using Spline = boost::math::interpolators::cardinal_cubic_b_spline<double>;
  auto su = std::make_shared<Spline>(st.u.begin(), st.u.end(), g.center(0), g.dx());
  auto sz = std::make_shared<Spline>(st.z.begin(), st.z.end(), g.center(0), g.dx());
  double lo = g.center(0), hi = g.center(g.n_cells - 1);
  std::pair<double, double> left{st.u.front(), st.z.front()}, right{st.u.back(), st.z.back()};
  return [=](double x) {
    if (x <= lo) return left;
    if (x >= hi) return right;
    return std::make_pair((*su)(x), (*sz)(x));
  };
}

double translate_fit(const WaveShape& ref, const SimState& st, const SimGrid& g, double& shift)
{
  double dx = g.dx();
  auto dist2 = [&](double a) {
    double acc = 0;
    for (int i = 0; i < g.n_cells; ++i) {
      auto [u, z] = ref(g.center(i) - a);
      double du = st.u[i] - u, dz = st.z[i] - z;
      acc += du * du + dz * dz;
    }
    return acc * dx;
  };
  // coarse scan, then Brent around the best node
  double best = shift, fbest = dist2(shift);
  for (int j = -20; j <= 20; ++j) {
    double a = shift + 0.25 * j;
    double fa = dist2(a);
    if (fa < fbest) {
      fbest = fa;
      best = a;
    }
  }
  boost::uintmax_t it = 100;
  auto res = boost::math::tools::brent_find_minima(dist2, best - 0.25, best + 0.25, 40, it);
  shift = res.first;
  return std::sqrt(std::max(0.0, res.second));
}

DecayReport perturbation_decay_test(const ModelConfig& cfg, const Profile& p, double amplitude, double T,
                                    const DecayOptions& opt, const SampleHook& hook)
{
  if (p.degenerate) fail(ErrorKind::DegenerateProfile, "perturbation test requires a nondegenerate profile");
  double jump = std::abs(p.wave.u_minus - p.wave.u_plus);
  if (std::abs(amplitude) > 0.05 * jump * (1 + 1e-12))
    fail(ErrorKind::Validation, "perturbation amplitude exceeds 0.05 |[u]|");
  if (!(T > 0) || opt.n_samples < 2 || opt.relax_time < 0)
    fail(ErrorKind::Validation, "perturbation test needs T > 0, relax_time >= 0 and two samples");
  SimGrid g;
  double lo = p.x_min(), hi = p.x_max();
  if (opt.half_length > 0) {
    lo = std::max(lo, -opt.half_length);
    hi = std::min(hi, opt.half_length);
  }
  g.n_cells = static_cast<int>(std::ceil((hi - lo) / opt.dx));
  g.x_min = lo;
  g.x_max = lo + g.n_cells * opt.dx;
  g.frame_speed = p.wave.s;
  g.boundary = Boundary::EndstateDirichlet;
  g.left = {p.wave.u_minus, p.wave.z_minus};
  g.right = {p.wave.u_plus, p.wave.z_plus};
  check_grid(g);

  SimState st;
  st.u.resize(g.n_cells);
  st.z.resize(g.n_cells);
  for (int i = 0; i < g.n_cells; ++i) {
    auto P = p.at(g.center(i));
    st.u[i] = P.u;
    st.z[i] = P.z;
  }
  if (opt.relax_time > 0) st = evolve(cfg, st, g, opt.relax_time);
  st.t = 0;

  DecayReport rep;
  rep.n_cells = g.n_cells;
  rep.dt = cfl_bound(cfg, st, g);
  double shift = 0;
  rep.discretization_gap = translate_fit(profile_shape(p), st, g, shift);
  auto ref = state_shape(st, g);
  double center = opt.center + shift;
  for (int i = 0; i < g.n_cells; ++i) {
    double y = (g.center(i) - center) / opt.width;
    if (std::abs(y) < 1) st.u[i] += amplitude * std::pow(std::cos(0.5 * std::numbers::pi * y), 2);
  }

  shift = 0;
  auto sample = [&](const SimState& s) {
    rep.norms.push_back(translate_fit(ref, s, g, shift));
    rep.times.push_back(s.t);
    rep.shifts.push_back(shift);
    if (hook) hook(s, g);
  };
  sample(st);
  for (int j = 1; j < opt.n_samples; ++j) {
    st = evolve(cfg, st, g, T * j / (opt.n_samples - 1));
    sample(st);
    spdlog::debug("perturbation run t={} norm={} shift={}", st.t, rep.norms.back(), shift);
  }
  rep.initial_norm = rep.norms.front();
  rep.final_norm = rep.norms.back();
  rep.decayed = rep.final_norm <= 0.5 * rep.initial_norm;
  return rep;
}

std::vector<double> level_crossings(const SimState& st, const SimGrid& g, double level)
{
  std::vector<double> xs;
  for (int i = 0; i + 1 < g.n_cells; ++i) {
    double a = st.u[i] - level, b = st.u[i + 1] - level;
    if ((a < 0) != (b < 0) && a != b) xs.push_back(g.center(i) + g.dx() * a / (a - b));
  }
  return xs;
}

RiemannRunReport riemann_asymptotic_test(const ModelConfig& cfg, RiemannState L, RiemannState R, double T,
                                         int n_cells, const SampleHook& hook)
{
  auto t0 = std::chrono::steady_clock::now();
  RiemannRunReport rep;
  RiemannSolution sol;
  double smin = 0, smax = 0;
  try {
    sol = solve_riemann(cfg, L, R);
    rep.case_label = sol.case_label;
    for (const auto& w : sol.waves) {
      smin = std::min(smin, w.speed_lo);
      smax = std::max(smax, w.speed_hi);
    }
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::NoSolution) throw;
    rep.solvable = false;
    rep.error = e.what();
    for (double u : {L.u, R.u}) {
      double a = flux_eval(cfg.flux, u).df;
      smin = std::min(smin, a);
      smax = std::max(smax, a);
    }
  }
  double span = (smax - smin) * T;
  double padw = 0.1 * span + 20;
  SimGrid& g = rep.grid;
  g.x_min = smin * T - padw;
  g.x_max = smax * T + padw;
  g.n_cells = n_cells;
  g.boundary = Boundary::EndstateDirichlet;
  g.left = L;
  g.right = R;
  check_grid(g);

  rep.level = 0.5 * (L.u + R.u);
  std::vector<double> ts;
  const int ns = 11;
  for (int j = 0; j < ns; ++j) ts.push_back(T * (0.5 + 0.5 * j / (ns - 1)));

  std::vector<std::vector<double>> pos(sol.waves.size());
  SimState st = riemann_initial(g, L, R);
  for (double t1 : ts) {
    st = evolve(cfg, st, g, t1);
    rep.times.push_back(st.t);
    rep.crossings.push_back(level_crossings(st, g, rep.level));
    if (hook) hook(st, g);
    for (std::size_t w = 0; w < sol.waves.size(); ++w) {
      const auto& wv = sol.waves[w];
      double lev = 0.5 * (wv.spec.u_minus + wv.spec.u_plus);
      double guess = 0.5 * (wv.speed_lo + wv.speed_hi) * st.t;
      auto xs = level_crossings(st, g, lev);
      double best = std::numeric_limits<double>::quiet_NaN();
      for (double x : xs)
        if (!(std::abs(x - guess) >= std::abs(best - guess))) best = x;
      pos[w].push_back(best);
    }
  }
  for (std::size_t w = 0; w < sol.waves.size(); ++w) {
    const auto& wv = sol.waves[w];
    MeasuredWave m;
    m.cls = wv.spec.cls;
    m.level = 0.5 * (wv.spec.u_minus + wv.spec.u_plus);
    m.predicted_speed = wv.spec.cls == WaveClass::InertRarefaction ? flux_eval(cfg.flux, m.level).df : wv.spec.s;
    // least-squares slope of position against time
    double mt = 0, mx = 0;
    for (std::size_t j = 0; j < ts.size(); ++j) {
      mt += rep.times[j];
      mx += pos[w][j];
    }
    mt /= ts.size();
    mx /= ts.size();
    double num = 0, den = 0;
    for (std::size_t j = 0; j < ts.size(); ++j) {
      num += (rep.times[j] - mt) * (pos[w][j] - mx);
      den += (rep.times[j] - mt) * (rep.times[j] - mt);
    }
    m.measured_speed = num / den;
    rep.waves.push_back(m);
  }
  rep.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return rep;
}

nlohmann::json to_json(const SimGrid& g)
{
  return {{"x_min", g.x_min}, {"x_max", g.x_max}, {"n_cells", g.n_cells}, {"dx", g.dx()},
          {"frame_speed", g.frame_speed}, {"boundary", boundary_name(g.boundary)},
          {"left", {{"u", g.left.u}, {"z", g.left.z}}}, {"right", {{"u", g.right.u}, {"z", g.right.z}}}};
}

nlohmann::json to_json(const DecayReport& r)
{
  return {{"times", r.times}, {"norms", r.norms}, {"shifts", r.shifts}, {"initial_norm", r.initial_norm},
          {"final_norm", r.final_norm}, {"decayed", r.decayed}, {"n_cells", r.n_cells}, {"dt", r.dt}};
}

nlohmann::json to_json(const RiemannRunReport& r)
{
  nlohmann::json j{{"solvable", r.solvable}, {"case", r.case_label}, {"grid", to_json(r.grid)},
                   {"times", r.times}, {"level", r.level}, {"crossings", r.crossings},
                   {"wall_seconds", r.wall_seconds}};
  if (!r.solvable) j["error"] = r.error;
  j["waves"] = nlohmann::json::array();
  for (const auto& w : r.waves)
    j["waves"].push_back({{"class", wave_class_name(w.cls)}, {"level", w.level},
                          {"predicted_speed", w.predicted_speed}, {"measured_speed", w.measured_speed}});
  return j;
}

}
