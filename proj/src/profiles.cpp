#include "detwave/profiles.hpp"
#include "detwave/errors.hpp"
#include "detwave/ode.hpp"
#include "detwave/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <sstream>
#include <boost/math/tools/roots.hpp>
#include <Eigen/Dense>

namespace detwave {

using State = std::array<double, 2>;
namespace tools = boost::math::tools;

std::string wave_class_name(WaveClass c)
{
  switch (c) {
  case WaveClass::StrongDetonation: return "StrongDetonation";
  case WaveClass::WeakDetonation: return "WeakDetonation";
  case WaveClass::CJDetonation: return "CJDetonation";
  case WaveClass::WeakDeflagration: return "WeakDeflagration";
  case WaveClass::CJDeflagration: return "CJDeflagration";
  case WaveClass::StrongDeflagration: return "StrongDeflagration";
  case WaveClass::InertShock: return "InertShock";
  case WaveClass::InertRarefaction: return "InertRarefaction";
  }
  return "?";
}

bool is_combustion(WaveClass c)
{
  return c != WaveClass::InertShock && c != WaveClass::InertRarefaction;
}

nlohmann::json to_json(const WaveSpec& w)
{
  return {{"class", wave_class_name(w.cls)},
          {"u_minus", w.u_minus},
          {"u_plus", w.u_plus},
          {"z_minus", w.z_minus},
          {"z_plus", w.z_plus},
          {"s", w.s},
          {"alpha_minus", w.alpha_minus},
          {"alpha_plus", w.alpha_plus}};
}

double TWField::F(double u, double z) const
{
  double v = flux_eval(cfg->flux, u).f - flux_eval(cfg->flux, u_plus).f - s * (u - u_plus);
  if (reactive) v -= s * cfg->q * (z - z_plus);
  return v;
}

double TWField::G(double u, double z) const
{
  if (!reactive) return 0.0;
  return cfg->k / s * ignition_eval(cfg->ignition, u).phi * z;
}

static double fval(const ModelConfig& cfg, double u) { return flux_eval(cfg.flux, u).f; }
static double fprime(const ModelConfig& cfg, double u) { return flux_eval(cfg.flux, u).df; }

// ---------------------------------------------------------------- RH and CJ

RHStates rh_states(const ModelConfig& cfg, double u_plus, double s, Branch branch)
{
  if (!(s > 0)) fail(ErrorKind::Validation, "wave speed must be positive");
  double ap = fprime(cfg, u_plus);
  double q = cfg.q;
  bool det = branch == Branch::Detonation;
  if (det && !(s > ap)) fail(ErrorKind::NoBranch, "no detonation branch: s <= f'(u_+)");
  if (!det && !(s < ap)) fail(ErrorKind::NoBranch, "no deflagration branch: s >= f'(u_+)");
  double tol = 1e-9 * std::max(1.0, s * s);
  RHStates r{};
  if (cfg.flux.kind == FluxKind::Burgers) {
    double disc = (s - u_plus) * (s - u_plus) - 2.0 * s * q;
    if (disc < -tol) fail(ErrorKind::NoBranch, det ? "no detonation branch: s < s_*" : "no deflagration branch: s > s^*");
    double sq = std::sqrt(std::max(disc, 0.0));
    if (det) r = {s + sq, s - sq};
    else r = {s - sq, s + sq};
  } else {
    double uc = flux_slope_inverse(cfg.flux, s);
    auto g = [&](double u) { return fval(cfg, u) - fval(cfg, u_plus) - s * (u - u_plus - q); };
    double gc = g(uc);
    if (gc > tol) fail(ErrorKind::NoBranch, det ? "no detonation branch: s < s_*" : "no deflagration branch: s > s^*");
    if (gc >= -tol) {
      r = {uc, uc};
    } else {
      auto solve = [&](double a, double b) {
        boost::uintmax_t it = 200;
        double ga = g(a), gb = g(b);
        if (a > b) {
          std::swap(a, b);
          std::swap(ga, gb);
        }
        auto res = tools::toms748_solve(g, a, b, ga, gb, tools::eps_tolerance<double>(52), it);
        return 0.5 * (res.first + res.second);
      };
      double inner = solve(u_plus, uc);
      double dir = det ? 1.0 : -1.0;
      double step = std::max(std::abs(uc - u_plus), 1e-3);
      double b = uc + dir * step;
      int n = 0;
      while (true) {
        if (!cfg.flux.contains(b)) fail(ErrorKind::Domain, "RH root leaves the flux domain");
        if (g(b) > 0) break;
        step *= 2;
        b = uc + dir * step;
        if (++n > 200) fail(ErrorKind::Solve, "cannot bracket RH root");
      }
      double outer = solve(uc, b);
      r = {outer, inner};
    }
  }
  if (!cfg.flux.contains(r.strong) || !cfg.flux.contains(r.weak))
    fail(ErrorKind::Domain, "RH root leaves the flux domain");
  return r;
}

double cj_state(const ModelConfig& cfg, double s_cj)
{
  return flux_slope_inverse(cfg.flux, s_cj);
}

std::pair<double, double> cj_speeds(const ModelConfig& cfg, double u_plus)
{
  double q = cfg.q;
  if (cfg.flux.kind == FluxKind::Burgers) {
    if (!(u_plus > 0)) fail(ErrorKind::Domain, "u_plus outside flux domain");
    double b = u_plus + q;
    double sq = std::sqrt(b * b - u_plus * u_plus);
    return {b + sq, b - sq};
  }
  double s0 = fprime(cfg, u_plus);
  auto h = [&](double s) {
    double uc = flux_slope_inverse(cfg.flux, s);
    return fval(cfg, uc) - fval(cfg, u_plus) - s * (uc - u_plus - q);
  };
  auto solve = [&](double a, double b) {
    boost::uintmax_t it = 200;
    double ha = h(a), hb = h(b);
    if (a > b) {
      std::swap(a, b);
      std::swap(ha, hb);
    }
    auto res = tools::toms748_solve(h, a, b, ha, hb, tools::eps_tolerance<double>(52), it);
    return 0.5 * (res.first + res.second);
  };
  double d = std::max(s0, 1.0) * 0.5;
  double hi = s0 + d;
  int n = 0;
  try {
    while (h(hi) >= 0) {
      d *= 2;
      hi = s0 + d;
      if (++n > 60) fail(ErrorKind::Solve, "cannot bracket s_*");
    }
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::Domain) fail(ErrorKind::Solve, "cannot bracket s_*: tangency leaves flux domain");
    throw;
  }
  double s_lower = solve(s0, hi);
  double lo = 0.5 * s0;
  n = 0;
  try {
    while (h(lo) >= 0) {
      lo *= 0.5;
      if (++n > 200) fail(ErrorKind::Solve, "cannot bracket s^*");
    }
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::Domain) fail(ErrorKind::Solve, "cannot bracket s^*: tangency leaves flux domain");
    throw;
  }
  double s_upper = solve(lo, s0);
  return {s_lower, s_upper};
}

WaveSpec classify_wave(const ModelConfig& cfg, double u_minus, double u_plus, double s)
{
  double fm = fval(cfg, u_minus), fp = fval(cfg, u_plus);
  double res = std::abs(fp - fm - s * (u_plus - u_minus + cfg.q));
  if (res > 1e-10 * std::max(1.0, std::abs(fm)) || u_minus == u_plus) {
    std::ostringstream os;
    os << "Rankine-Hugoniot residual " << res << " exceeds tolerance";
    fail(ErrorKind::NotAWave, os.str());
  }
  WaveSpec w;
  w.u_minus = u_minus;
  w.u_plus = u_plus;
  w.z_minus = 0;
  w.z_plus = 1;
  w.s = s;
  double am = fprime(cfg, u_minus), ap = fprime(cfg, u_plus);
  w.alpha_minus = am - s;
  w.alpha_plus = ap - s;
  bool cj = std::abs(am - s) <= 1e-8 * std::max(1.0, s);
  if (u_minus > u_plus) {
    if (cj) w.cls = WaveClass::CJDetonation;
    else if (am > s && s > ap) w.cls = WaveClass::StrongDetonation;
    else if (s > am && s > ap) w.cls = WaveClass::WeakDetonation;
    else fail(ErrorKind::NotAWave, "detonation endstates violate the characteristic ordering");
  } else {
    if (cj) w.cls = WaveClass::CJDeflagration;
    else if (am > s && ap > s) w.cls = WaveClass::WeakDeflagration;
    else if (am < s && s < ap) w.cls = WaveClass::StrongDeflagration;
    else fail(ErrorKind::NotAWave, "deflagration endstates violate the characteristic ordering");
  }
  const auto& ig = cfg.ignition;
  double tol = 1e-12 * std::max(1.0, std::abs(ig.u_sup));
  bool left_ok = u_minus > ig.u_i && u_minus < ig.u_sup;
  bool right_ok = u_plus <= ig.u_i + tol || u_plus >= ig.u_sup - tol;
  if (!left_ok || !right_ok)
    fail(ErrorKind::IgnitionPlacement, "endstates violate ignition placement u_i < u_- < u^i, u_+ outside (u_i,u^i)");
  return w;
}

std::string rest_type_name(RestType t)
{
  switch (t) {
  case RestType::Repellor: return "Repellor";
  case RestType::Saddle: return "Saddle";
  case RestType::SaddleAttractor: return "SaddleAttractor";
  case RestType::SaddleRepellor: return "SaddleRepellor";
  case RestType::DegenerateCenter: return "DegenerateCenter";
  }
  return "?";
}

RestPointAnalysis rest_point_analysis(const ModelConfig& cfg, double u, double z, double s)
{
  auto ph = ignition_eval(cfg.ignition, u);
  if (std::abs(ph.phi * z) > 1e-10) fail(ErrorKind::NotRestPoint, "phi(u) z does not vanish");
  double a = fprime(cfg, u) - s;
  double nu = cfg.k / s * ph.phi;
  RestPointAnalysis r;
  r.eigenvalues = {a, nu};
  r.eigenvectors[0] = {1.0, 0.0};
  double vu = s * cfg.q, vz = a - nu;
  double nrm = std::hypot(vu, vz);
  r.eigenvectors[1] = {vu / nrm, vz / nrm};
  double tol = 1e-12;
  auto sgn = [&](double v) { return v > tol ? 1 : (v < -tol ? -1 : 0); };
  int sa = sgn(a), sn = sgn(nu);
  if (sa > 0 && sn > 0) r.rest_type = RestType::Repellor;
  else if (sa * sn < 0) r.rest_type = RestType::Saddle;
  else if (sa == 0 && sn == 0) r.rest_type = RestType::DegenerateCenter;
  else if (sa + sn < 0) r.rest_type = RestType::SaddleAttractor;
  else r.rest_type = RestType::SaddleRepellor;
  if (sn == 0) r.center_direction = std::array<double, 2>{s * cfg.q, a};
  return r;
}

// ---------------------------------------------------------------- profiles

static double hermite5(double t, double h, double p0, double m0, double a0, double p1, double m1, double a1,
                       double* dp)
{
  double t2 = t * t, t3 = t2 * t, t4 = t3 * t, t5 = t4 * t;
  double H0 = 1 - 10 * t3 + 15 * t4 - 6 * t5;
  double H1 = t - 6 * t3 + 8 * t4 - 3 * t5;
  double H2 = 0.5 * (t2 - 3 * t3 + 3 * t4 - t5);
  double H3 = 10 * t3 - 15 * t4 + 6 * t5;
  double H4 = -4 * t3 + 7 * t4 - 3 * t5;
  double H5 = 0.5 * (t3 - 2 * t4 + t5);
  if (dp) {
    double D0 = -30 * t2 + 60 * t3 - 30 * t4;
    double D1 = 1 - 18 * t2 + 32 * t3 - 15 * t4;
    double D2 = 0.5 * (2 * t - 9 * t2 + 12 * t3 - 5 * t4);
    double D3 = 30 * t2 - 60 * t3 + 30 * t4;
    double D4 = -12 * t2 + 28 * t3 - 15 * t4;
    double D5 = 0.5 * (3 * t2 - 8 * t3 + 5 * t4);
    *dp = (p0 * D0 + h * m0 * D1 + h * h * a0 * D2 + p1 * D3 + h * m1 * D4 + h * h * a1 * D5) / h;
  }
  return p0 * H0 + h * m0 * H1 + h * h * a0 * H2 + p1 * H3 + h * m1 * H4 + h * h * a1 * H5;
}

Profile::Point Profile::at(double xq) const
{
  if (xq <= x.front()) return {wave.u_minus, wave.z_minus, 0.0, 0.0};
  if (xq >= x.back()) return {wave.u_plus, wave.z_plus, 0.0, 0.0};
  std::size_t i = static_cast<std::size_t>((xq - x.front()) / dx);
  if (i >= x.size() - 1) i = x.size() - 2;
  double t = (xq - x[i]) / dx;
  Point p;
  p.u = hermite5(t, dx, u[i], ux[i], uxx[i], u[i + 1], ux[i + 1], uxx[i + 1], &p.ux);
  p.z = hermite5(t, dx, z[i], zx[i], zxx[i], z[i + 1], zx[i + 1], zxx[i + 1], &p.zx);
  return p;
}

std::size_t Profile::index_of_zero() const
{
  long i = std::lround(-x.front() / dx);
  return static_cast<std::size_t>(std::clamp<long>(i, 0, static_cast<long>(x.size()) - 1));
}

namespace {

struct Piece {
  double lo, hi;        // interval of validity
  bool anchor_hi;       // integrate downward from hi when true
  std::function<std::vector<State>(const std::vector<double>&)> sample;
};

struct Field {
  const ModelConfig& cfg;
  TWField tw;
  void operator()(const State& y, State& dy, double) const
  {
    dy[0] = tw.F(y[0], y[1]);
    dy[1] = tw.G(y[0], y[1]);
  }
};

ode::Options shoot_opts()
{
  ode::Options o;
  o.rtol = 1e-12;
  o.atol = 1e-14;
  o.h0 = 1e-3;
  return o;
}

Piece ode_piece(const Field& fld, State y0, double x0, double x1)
{
  Piece p;
  p.lo = std::min(x0, x1);
  p.hi = std::max(x0, x1);
  p.anchor_hi = x1 < x0;
  p.sample = [fld, y0, x0](const std::vector<double>& xs) {
    return ode::sample<2>(fld, y0, x0, xs, shoot_opts());
  };
  return p;
}

// log e = rate*x + c + beta*log|x|; the algebraic factor absorbs near-resonant tails
double fit_rate(const std::vector<double>& xs, const std::vector<double>& es, double lo, double hi)
{
  std::vector<int> idx;
  for (std::size_t j = 0; j < xs.size(); ++j)
    if (es[j] >= lo && es[j] <= hi && xs[j] != 0) idx.push_back(static_cast<int>(j));
  if (idx.size() < 4) return std::numeric_limits<double>::quiet_NaN();
  Eigen::MatrixXd A(idx.size(), 3);
  Eigen::VectorXd b(idx.size());
  for (std::size_t m = 0; m < idx.size(); ++m) {
    double x = xs[idx[m]];
    A(m, 0) = x;
    A(m, 1) = 1.0;
    A(m, 2) = std::log(std::abs(x));
    b(m) = std::log(es[idx[m]]);
  }
  Eigen::VectorXd c = A.colPivHouseholderQr().solve(b);
  return c(0);
}
}

std::array<std::vector<double>, 2> expected_tail_rates(const Profile& p)
{
  const auto& w = p.wave;
  std::array<std::vector<double>, 2> r;
  double nu = p.cfg.k / w.s * ignition_eval(p.cfg.ignition, w.u_minus).phi;
  if (!is_combustion(w.cls)) nu = 0;
  if (w.alpha_minus > 0) r[0].push_back(w.alpha_minus);
  if (nu > 0) r[0].push_back(nu);
  if (w.alpha_plus < 0) r[1].push_back(w.alpha_plus);
  return r;
}

static void fill_derivatives(Profile& p)
{
  TWField tw{&p.cfg, p.wave.u_plus, p.wave.z_plus, p.wave.s, is_combustion(p.wave.cls)};
  std::size_t n = p.x.size();
  p.ux.resize(n);
  p.zx.resize(n);
  p.uxx.resize(n);
  p.zxx.resize(n);
  for (std::size_t j = 0; j < n; ++j) {
    double u = p.u[j], z = p.z[j];
    double F = tw.F(u, z), G = tw.G(u, z);
    auto fv = flux_eval(p.cfg.flux, u);
    double Fz = tw.reactive ? -p.wave.s * p.cfg.q : 0.0;
    p.ux[j] = F;
    p.zx[j] = G;
    p.uxx[j] = (fv.df - p.wave.s) * F + Fz * G;
    if (tw.reactive) {
      auto ph = ignition_eval(p.cfg.ignition, u);
      p.zxx[j] = p.cfg.k / p.wave.s * (ph.dphi * F * z + ph.phi * G);
    } else {
      p.zxx[j] = 0.0;
    }
  }
}

Profile compute_profile(const ModelConfig& cfg, const WaveSpec& wave, const LPolicy& pol)
{
  Profile prof;
  prof.cfg = cfg;
  prof.wave = wave;
  const ModelConfig& C = prof.cfg;
  const auto& ig = C.ignition;
  double s = wave.s, um = wave.u_minus, up = wave.u_plus, q = C.q;
  double eps = pol.launch_eps;
  double dtail = pol.delta_tail;
  bool reactive = is_combustion(wave.cls);
  Field fld{C, TWField{&C, up, wave.z_plus, s, reactive}};
  double tol_th = 1e-12 * std::max(1.0, std::abs(ig.u_sup));
  bool degenerate = reactive && (std::abs(up - ig.u_i) <= tol_th || std::abs(up - ig.u_sup) <= tol_th);

  std::vector<Piece> pieces;
  double x_ign = std::numeric_limits<double>::quiet_NaN();
  double zhat = 1.0;

  auto rates = expected_tail_rates(prof);
  double min_rate = std::numeric_limits<double>::infinity();
  for (auto& v : rates)
    for (double r : v) min_rate = std::min(min_rate, std::abs(r));
  double cap = pol.cap_factor / min_rate;
  auto check_cap = [&](double len) {
    if (len > 2.0 * cap) fail(ErrorKind::NoConnection, "profile truncation cap reached before endstate proximity");
  };

  switch (wave.cls) {
  case WaveClass::StrongDeflagration:
    fail(ErrorKind::NoConnection, "strong deflagrations have no viscous profile");
  case WaveClass::CJDetonation:
  case WaveClass::CJDeflagration:
    fail(ErrorKind::NoConnection, "Chapman-Jouguet waves are excluded from profile construction");
  case WaveClass::InertRarefaction:
    fail(ErrorKind::NoConnection, "rarefactions have no traveling-wave profile");
  case WaveClass::InertShock: {
    double umid = 0.5 * (um + up);
    State y0{umid, wave.z_minus};
    auto fwd = ode::integrate_until<2>(fld, y0, 0.0, cap,
                                       {{[&](double, const State& y) { return (y[0] - up) - 0.1 * dtail; }}},
                                       shoot_opts());
    auto bwd = ode::integrate_until<2>(fld, y0, 0.0, -cap,
                                       {{[&](double, const State& y) { return (um - y[0]) - 0.1 * dtail; }}},
                                       shoot_opts());
    if (fwd.index < 0 || bwd.index < 0) check_cap(3 * cap);
    pieces.push_back(ode_piece(fld, y0, 0.0, bwd.x));
    pieces.push_back(ode_piece(fld, y0, 0.0, fwd.x));
    break;
  }
  case WaveClass::StrongDetonation: {
    if (degenerate) fail(ErrorKind::DegenerateProfile, "degenerate endstate u_+ at an ignition threshold");
    State y0{up + eps, 1.0};
    auto toig = ode::integrate_until<2>(fld, y0, 0.0, -cap,
                                        {{[&](double, const State& y) { return ig.u_i - y[0]; }}}, shoot_opts());
    if (toig.index < 0) fail(ErrorKind::NoConnection, "stable manifold does not reach the ignition threshold");
    x_ign = toig.x;
    State yi{ig.u_i, 1.0};
    auto fwd = ode::integrate_until<2>(fld, yi, x_ign, x_ign + 2 * cap,
                                       {{[&](double, const State& y) { return (y[0] - up) - 0.1 * dtail; }}},
                                       shoot_opts());
    if (fwd.index < 0) check_cap(3 * cap);
    Piece upper = ode_piece(fld, yi, x_ign, fwd.x);
    upper.lo = std::nextafter(x_ign, 1e300);
    pieces.push_back(upper);
    std::vector<ode::Event<2>> ev = {
        {[&](double, const State& y) { return std::abs(y[0] - um) + std::abs(y[1]) - 0.1 * dtail; }},
        {[&](double, const State& y) { return ig.u_sup - y[0]; }}};
    auto back = ode::integrate_until<2>(fld, yi, x_ign, x_ign - 2 * cap, ev, shoot_opts());
    if (back.index == 1)
      fail(ErrorKind::NoConnection,
           "stable manifold of (u_+,1) passes the upper ignition threshold and stalls on the rest-point segment beyond u^i");
    if (back.index < 0) check_cap(3 * cap);
    pieces.push_back(ode_piece(fld, yi, x_ign, back.x));
    break;
  }
  case WaveClass::WeakDetonation: {
    if (degenerate) fail(ErrorKind::DegenerateProfile, "degenerate endstate u_+ at an ignition threshold");
    double am = wave.alpha_minus;
    double nu = C.k / s * ignition_eval(ig, um).phi;
    double vu = -s * q, vz = nu - am;
    double nrm = std::hypot(vu, vz);
    vu /= nrm;
    vz /= nrm;
    State y0{um + eps * vu, eps * vz};
    double zstar = 1.0 + (fval(C, ig.u_i) - fval(C, up) - s * (ig.u_i - up)) / (s * q);
    std::vector<ode::Event<2>> ev = {
        {[&](double, const State& y) { return y[0] - ig.u_i; }},
        {[&](double, const State& y) { return (y[0] - ig.u_i > 1e-5 || y[1] >= zstar) ? 1.0 : -1.0; }, false}};
    auto hit = ode::integrate_until<2>(fld, y0, 0.0, 2 * cap, ev, shoot_opts());
    if (hit.index != 0) fail(ErrorKind::NoConnection, "weak-saddle unstable manifold does not reach u_i");
    zhat = hit.y[1];
    if (std::abs(zhat - 1.0) > 1e-6)
      fail(ErrorKind::NoConnection, "speed is not a root of the Melnikov separation (|zhat-1| > 1e-6)");
    x_ign = hit.x;
    pieces.push_back(ode_piece(fld, y0, 0.0, x_ign));
    State yi{ig.u_i, 1.0};
    auto fwd = ode::integrate_until<2>(fld, yi, x_ign, x_ign + 2 * cap,
                                       {{[&](double, const State& y) { return (y[0] - up) - 0.1 * dtail; }}},
                                       shoot_opts());
    if (fwd.index < 0) check_cap(3 * cap);
    Piece tail = ode_piece(fld, yi, x_ign, fwd.x);
    tail.lo = std::nextafter(x_ign, 1e300);
    pieces.push_back(tail);
    double xa = std::log(0.1 * dtail / (eps * (std::abs(vu) + std::abs(vz)))) / nu;
    Piece lin;
    lin.lo = xa;
    lin.hi = 0.0;
    lin.anchor_hi = true;
    lin.sample = [=](const std::vector<double>& xs) {
      std::vector<State> out;
      for (double x : xs) {
        double e = eps * std::exp(nu * x);
        out.push_back({um + e * vu, e * vz});
      }
      return out;
    };
    pieces.push_back(lin);
    break;
  }
  case WaveClass::WeakDeflagration: {
    if (std::abs(up - ig.u_sup) > tol_th)
      fail(ErrorKind::NoConnection, "weak deflagrations connect only to u^i");
    degenerate = true;
    double ap = wave.alpha_plus;
    auto nullcline_u = [&](double z) {
      // root of F(u,z)=0 just below u^i
      double a = um, b = up;
      auto F = [&](double u) { return fld.tw.F(u, z); };
      boost::uintmax_t it = 200;
      auto r = tools::toms748_solve(F, a, b, F(a), F(b), tools::eps_tolerance<double>(52), it);
      return 0.5 * (r.first + r.second);
    };
    auto cm_u = [&, nullcline_u](double z) {
      double h0 = nullcline_u(z);
      double dh = s * q / (fprime(C, h0) - s);
      auto H = [&](double u) { return fld.tw.F(u, z) - dh * fld.tw.G(u, z); };
      double a = um, b = up;
      boost::uintmax_t it = 200;
      auto r = tools::toms748_solve(H, a, b, H(a), H(b), tools::eps_tolerance<double>(52), it);
      return 0.5 * (r.first + r.second);
    };
    (void)ap;
    double eta0 = 1e-3;
    double z0 = 1.0 - eta0;
    State y0{cm_u(z0), z0};
    std::vector<ode::Event<2>> ev = {
        {[&](double, const State& y) { return std::abs(y[0] - um) + std::abs(y[1]) - pol.defl_delta; }}};
    auto back = ode::integrate_until<2>(fld, y0, 0.0, -1e7, ev, shoot_opts());
    if (back.index < 0) fail(ErrorKind::NoConnection, "center manifold of (u^i,1) does not reach (u_-,0)");
    pieces.push_back(ode_piece(fld, y0, 0.0, back.x));
    double lnom = std::log(1.0 / dtail) / min_rate;
    double ldefl = pol.defl_factor * lnom;
    const ModelConfig* cp = &C;
    TWField tw = fld.tw;
    Piece red;
    red.lo = std::nextafter(0.0, 1.0);
    red.hi = ldefl;
    red.anchor_hi = false;
    red.sample = [=](const std::vector<double>& xs) {
      auto sys = [&](const std::array<double, 1>& y, std::array<double, 1>& dy, double) {
        double zz = std::min(y[0], 1.0);
        double uu = cm_u(zz);
        dy[0] = tw.G(uu, zz);
      };
      auto zs = ode::sample<1>(sys, std::array<double, 1>{z0}, 0.0, xs, shoot_opts());
      std::vector<State> out;
      for (auto& zz : zs) out.push_back({cm_u(std::min(zz[0], 1.0)), zz[0]});
      (void)cp;
      return out;
    };
    pieces.push_back(red);
    zhat = 1.0;
    break;
  }
  }

  // locate the midpoint crossing
  double umid = 0.5 * (um + up);
  double xm = 0.0;
  if (wave.cls != WaveClass::InertShock) {
    bool found = false;
    for (auto& pc : pieces) {
      // coarse scan of the piece
      int n = 400;
      std::vector<double> xs;
      for (int j = 0; j <= n; ++j) {
        double t = double(j) / n;
        xs.push_back(pc.anchor_hi ? pc.hi - t * (pc.hi - pc.lo) : pc.lo + t * (pc.hi - pc.lo));
      }
      auto ys = pc.sample(xs);
      for (int j = 0; j < n && !found; ++j) {
        double g0 = ys[j][0] - umid, g1 = ys[j + 1][0] - umid;
        if (g0 == 0) {
          xm = xs[j];
          found = true;
        } else if (g0 * g1 < 0) {
          auto g = [&](double xx) { return pc.sample({xx})[0][0] - umid; };
          double a = std::min(xs[j], xs[j + 1]), b = std::max(xs[j], xs[j + 1]);
          boost::uintmax_t it = 100;
          auto r = tools::toms748_solve(g, a, b, g(a), g(b), tools::eps_tolerance<double>(50), it);
          xm = 0.5 * (r.first + r.second);
          found = true;
        }
      }
      if (found) break;
    }
    if (!found) fail(ErrorKind::Solve, "midpoint crossing not found");
  }

  double dx = pol.dx;
  if (std::isfinite(x_ign)) {
    double dist = std::abs(x_ign - xm);
    if (dist >= dx) dx = dist / std::round(dist / dx);
  }
  double X_lo = 1e300, X_hi = -1e300;
  for (auto& pc : pieces) {
    X_lo = std::min(X_lo, pc.lo);
    X_hi = std::max(X_hi, pc.hi);
  }
  long j0 = static_cast<long>(std::ceil((X_lo - xm) / dx - 1e-9));
  long j1 = static_cast<long>(std::floor((X_hi - xm) / dx + 1e-9));
  std::size_t n = static_cast<std::size_t>(j1 - j0 + 1);
  std::vector<double> X(n);
  for (std::size_t j = 0; j < n; ++j) X[j] = xm + (j0 + long(j)) * dx;
  if (std::isfinite(x_ign)) {
    for (auto& v : X)
      if (std::abs(v - x_ign) < 1e-9 * dx) v = x_ign;
  }
  std::vector<double> U(n), Z(n);
  std::vector<char> done(n, 0);
  for (auto& pc : pieces) {
    std::vector<std::size_t> idx;
    for (std::size_t j = 0; j < n; ++j)
      if (!done[j] && X[j] >= pc.lo - 1e-9 * dx && X[j] <= pc.hi + 1e-9 * dx) idx.push_back(j);
    if (idx.empty()) continue;
    if (pc.anchor_hi) std::reverse(idx.begin(), idx.end());
    std::vector<double> xs;
    for (auto j : idx) xs.push_back(X[j]);
    auto ys = pc.sample(xs);
    for (std::size_t m = 0; m < idx.size(); ++m) {
      U[idx[m]] = ys[m][0];
      Z[idx[m]] = ys[m][1];
      done[idx[m]] = 1;
    }
  }
  for (std::size_t j = 0; j < n; ++j)
    if (!done[j]) fail(ErrorKind::Solve, "profile grid node not covered");

  prof.dx = dx;
  prof.x.resize(n);
  for (std::size_t j = 0; j < n; ++j) prof.x[j] = (j0 + long(j)) * dx;
  prof.u = U;
  prof.z = Z;
  for (double& zv : prof.z) zv = std::clamp(zv, 0.0, 1.0);
  prof.L = std::max(std::abs(prof.x.front()), std::abs(prof.x.back()));
  prof.degenerate = degenerate;
  prof.zhat = zhat;
  prof.x_ignition = std::isfinite(x_ign) ? x_ign - xm : std::numeric_limits<double>::quiet_NaN();
  fill_derivatives(prof);

  std::vector<double> em(n), ep(n);
  for (std::size_t j = 0; j < n; ++j) {
    em[j] = std::abs(prof.u[j] - wave.u_minus) + std::abs(prof.z[j] - wave.z_minus);
    ep[j] = std::abs(prof.u[j] - wave.u_plus) + std::abs(prof.z[j] - wave.z_plus);
  }
  std::vector<double> xl, el, xr, er;
  for (std::size_t j = 0; j < n; ++j) {
    if (prof.x[j] < 0) {
      xl.push_back(prof.x[j]);
      el.push_back(em[j]);
    } else {
      xr.push_back(prof.x[j]);
      er.push_back(ep[j]);
    }
  }
  prof.tail_decay_rates = {fit_rate(xl, el, dtail, 1e-5), fit_rate(xr, er, dtail, 1e-5)};
  return prof;
}

// 5-point first-derivative weights (times 12 dx); row r evaluates at stencil position 4 - r
static const double kStencil[5][5] = {{3, -16, 36, -48, 25},
                                      {-1, 6, -18, 10, 3},
                                      {1, -8, 0, 8, -1},
                                      {-3, -10, 18, -6, 1},
                                      {-25, 48, -36, 16, -3}};

double profile_residual(const Profile& p)
{
  TWField tw{&p.cfg, p.wave.u_plus, p.wave.z_plus, p.wave.s, is_combustion(p.wave.cls)};
  long n = static_cast<long>(p.x.size());
  // stencils do not straddle the ignition node, where the third derivative jumps
  long kink = -1;
  if (std::isfinite(p.x_ignition)) kink = std::lround((p.x_ignition - p.x.front()) / p.dx);
  double r = 0;
  for (long j = 0; j < n; ++j) {
    long start = j - 2;
    if (kink >= 0 && j < kink && j + 2 > kink) start = kink - 4;
    if (kink >= 0 && j > kink && j - 2 < kink) start = kink;
    start = std::clamp(start, 0L, n - 5);
    const double* w = kStencil[4 - (j - start)];
    double du = 0, dz = 0;
    for (int m = 0; m < 5; ++m) {
      du += w[m] * p.u[start + m];
      dz += w[m] * p.z[start + m];
    }
    du /= 12 * p.dx;
    dz /= 12 * p.dx;
    r = std::max(r, std::abs(du - tw.F(p.u[j], p.z[j])));
    r = std::max(r, std::abs(dz - tw.G(p.u[j], p.z[j])));
  }
  return r;
}

double endstate_gap(const Profile& p)
{
  double a = std::abs(p.u.front() - p.wave.u_minus) + std::abs(p.z.front() - p.wave.z_minus);
  double b = std::abs(p.u.back() - p.wave.u_plus) + std::abs(p.z.back() - p.wave.z_plus);
  return std::max(a, b);
}

std::vector<CJRow> cj_diagram(const ModelConfig& cfg, double u_plus, const std::vector<double>& s_grid, int jobs)
{
  std::vector<CJRow> rows(s_grid.size());
  parallel_for(s_grid.size(), jobs, [&](std::size_t i) {
    rows[i].s = s_grid[i];
    try {
      auto r = rh_states(cfg, u_plus, s_grid[i], Branch::Detonation);
      rows[i].strong = r.strong;
      rows[i].weak = r.weak;
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::NoBranch) throw;
    }
  });
  return rows;
}

nlohmann::json profile_sidecar(const Profile& p)
{
  nlohmann::json j;
  j["wave"] = to_json(p.wave);
  j["L"] = p.L;
  j["dx"] = p.dx;
  j["n"] = p.x.size();
  j["x_min"] = p.x.front();
  j["x_max"] = p.x.back();
  j["tail_decay_rates"] = {p.tail_decay_rates[0], p.tail_decay_rates[1]};
  j["degenerate"] = p.degenerate;
  j["zhat"] = p.zhat;
  if (std::isfinite(p.x_ignition)) j["x_ignition"] = p.x_ignition;
  return j;
}

}
