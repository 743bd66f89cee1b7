#include "detwave/evans.hpp"
#include "detwave/errors.hpp"
#include "detwave/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/numeric/odeint.hpp>
#include <spdlog/spdlog.h>

namespace detwave {

namespace odeint = boost::numeric::odeint;
using V6 = std::array<double, 6>;
using C3 = std::array<cplx, 3>;

namespace {

C3 unpack(const V6& v) { return {cplx(v[0], v[1]), cplx(v[2], v[3]), cplx(v[4], v[5])}; }

V6 pack(const C3& c)
{
  return {c[0].real(), c[0].imag(), c[1].real(), c[1].imag(), c[2].real(), c[2].imag()};
}

struct Rates {
  cplx mu1, mu2, mu3;
};

Rates endstate_rates(double alpha, double k, double phi, double s, cplx lambda)
{
  if (std::abs(alpha) <= 1e-10) fail(ErrorKind::Sonic, "sonic endstate: |a - s| <= 1e-10");
  cplx disc = alpha * alpha + 4.0 * lambda;
  if (std::abs(disc) <= 4e-12) fail(ErrorKind::Branch, "lambda at the branch point -alpha^2/4");
  cplx sq = std::sqrt(disc);
  return {0.5 * (alpha - sq), 0.5 * (alpha + sq), (k * phi + lambda) / s};
}

// A(x; lambda) entries
struct Mat3 {
  cplx a[3][3];
};

Mat3 system_matrix(const EvansSystem& es, const EvansCoeffs& c, cplx lambda)
{
  Mat3 m{};
  double qk = es.q * es.k;
  m.a[0][1] = 1.0;
  m.a[1][0] = c.dalpha + lambda - qk * c.dphi * c.zbar;
  m.a[1][1] = c.alpha;
  m.a[1][2] = -qk * c.phi;
  m.a[2][0] = es.k * c.dphi * c.zbar / es.s;
  m.a[2][2] = (es.k * c.phi + lambda) / es.s;
  return m;
}

double sgn(double v) { return v > 0 ? 1.0 : (v < 0 ? -1.0 : 0.0); }

}

LimitingModes limiting_modes(const ModelConfig& cfg, double u, double z, double s, cplx lambda)
{
  auto ph = ignition_eval(cfg.ignition, u);
  if (std::abs(ph.phi * z) > 1e-10) fail(ErrorKind::NotRestPoint, "endstate is not a rest point");
  double alpha = flux_eval(cfg.flux, u).df - s;
  auto r = endstate_rates(alpha, cfg.k, ph.phi, s, lambda);
  LimitingModes m;
  m.mu = {r.mu1, r.mu2, r.mu3};
  m.vec[0] = {1.0, r.mu1, 0.0};
  m.vec[1] = {1.0, r.mu2, 0.0};
  cplx a = 0.0;
  double qkphi = cfg.q * cfg.k * ph.phi;
  if (qkphi != 0.0) a = -qkphi / ((r.mu3 - r.mu1) * (r.mu3 - r.mu2));
  m.vec[2] = {a, a * r.mu3, 1.0};
  return m;
}

EvansSystem EvansSystem::from_profile(const Profile& p, double extend)
{
  if (p.degenerate) fail(ErrorKind::DegenerateProfile, "Evans function requires exponential tails");
  if (p.wave.cls != WaveClass::StrongDetonation && p.wave.cls != WaveClass::WeakDetonation)
    fail(ErrorKind::NotAWave, "Evans function implemented for strong and weak detonations");
  EvansSystem es;
  es.profile = std::make_shared<const Profile>(p);
  es.q = p.cfg.q;
  es.k = p.cfg.k;
  es.s = p.wave.s;
  es.x_minus = extend * p.x_min();
  es.x_plus = extend * p.x_max();
  std::size_t n = p.x.size();
  es.orientation = sgn(p.ux[n - 2]);
  if (p.wave.cls == WaveClass::WeakDetonation) es.orientation *= sgn(p.zx[1]);
  es.minus = es.coeffs(-1e300);
  es.plus = es.coeffs(1e300);
  return es;
}

EvansSystem EvansSystem::constant(double alpha0, double s, double half_length)
{
  EvansSystem es;
  es.q = 0;
  es.k = 0;
  es.s = s;
  es.x_minus = -half_length;
  es.x_plus = half_length;
  es.alpha_const = alpha0;
  es.minus = es.plus = {alpha0, 0, 0, 0, 0};
  return es;
}

EvansCoeffs EvansSystem::coeffs(double x) const
{
  if (!profile) return {alpha_const, 0, 0, 0, 0};
  const Profile& p = *profile;
  auto pt = p.at(x);
  auto fv = flux_eval(p.cfg.flux, pt.u);
  auto ph = ignition_eval(p.cfg.ignition, pt.u);
  return {fv.df - s, fv.d2f * pt.ux, ph.phi, ph.dphi, pt.z};
}

EvansEvaluation evans_eval(const EvansSystem& es, cplx lambda, const EvansOptions& opt)
{
  auto rp = endstate_rates(es.plus.alpha, es.k, es.plus.phi, es.s, lambda);
  auto rm = endstate_rates(es.minus.alpha, es.k, es.minus.phi, es.s, lambda);

  auto ctrl = [&]() { return odeint::make_controlled(opt.atol, opt.rtol, odeint::runge_kutta_dopri5<V6>()); };
  auto guard = [](const V6& v) {
    for (double c : v)
      if (!std::isfinite(c) || std::abs(c) > 1e100) fail(ErrorKind::Integration, "Evans solution left [1e-100, 1e100]");
  };

  // stable solution at +inf, growth e^{mu1 x} factored out
  auto w_rhs = [&](const V6& y, V6& dy, double x) {
    auto m = system_matrix(es, es.coeffs(x), lambda);
    C3 w = unpack(y), d;
    for (int i = 0; i < 3; ++i) d[i] = m.a[i][0] * w[0] + m.a[i][1] * w[1] + m.a[i][2] * w[2] - rp.mu1 * w[i];
    dy = pack(d);
  };
  V6 W = pack({1.0, rp.mu1, 0.0});
  if (es.x_plus > 0) odeint::integrate_adaptive(ctrl(), w_rhs, W, es.x_plus, 0.0, -1e-2);
  guard(W);

  // unstable wedge at -inf in the basis (e1^e2, e1^e3, e2^e3), rate mu2 + mu3 factored out
  cplx shift = rm.mu2 + rm.mu3;
  auto y_rhs = [&](const V6& y, V6& dy, double x) {
    auto m = system_matrix(es, es.coeffs(x), lambda);
    const auto& a = m.a;
    C3 w = unpack(y), d;
    d[0] = (a[0][0] + a[1][1]) * w[0] + a[1][2] * w[1] - a[0][2] * w[2];
    d[1] = a[2][1] * w[0] + (a[0][0] + a[2][2]) * w[1] + a[0][1] * w[2];
    d[2] = -a[2][0] * w[0] + a[1][0] * w[1] + (a[1][1] + a[2][2]) * w[2];
    for (int i = 0; i < 3; ++i) d[i] -= shift * w[i];
    dy = pack(d);
  };
  cplx y12 = 0.0;
  double qkphi = es.q * es.k * es.minus.phi;
  if (qkphi != 0.0) y12 = -qkphi / (rm.mu3 - rm.mu1);
  V6 Y = pack({y12, 1.0, rm.mu2});
  if (es.x_minus < 0) odeint::integrate_adaptive(ctrl(), y_rhs, Y, es.x_minus, 0.0, 1e-2);
  guard(Y);

  C3 w = unpack(W), y = unpack(Y);
  cplx D = es.orientation * (w[0] * y[2] - w[1] * y[1] + w[2] * y[0]);
  EvansEvaluation ev;
  ev.lambda = lambda;
  ev.D = D;
  ev.normalization = {{"x_minus", es.x_minus},
                      {"x_plus", es.x_plus},
                      {"orientation", es.orientation},
                      {"plus_basis", "(1, mu1, 0) exp(mu1 x)"},
                      {"minus_wedge", "(-qk phi/(mu3-mu1), 1, mu2) exp((mu2+mu3) x)"},
                      {"evaluated_at", 0.0}};
  return ev;
}

EvansEvaluation evans_eval(const Profile& p, cplx lambda, const EvansOptions& opt)
{
  return evans_eval(EvansSystem::from_profile(p), lambda, opt);
}

double dprime_zero_numeric(const EvansSystem& es, const EvansOptions& opt)
{
  auto C = [&](double h) { return (evans_eval(es, h, opt).D.real() - evans_eval(es, -h, opt).D.real()) / (2 * h); };
  double c1 = C(1e-3), c2 = C(5e-4), c3 = C(2.5e-4);
  double r1 = (4 * c2 - c1) / 3, r2 = (4 * c3 - c2) / 3;
  if (std::abs(r1 - r2) > 1e-4 * std::abs(r2))
    fail(ErrorKind::NonConvergence, "Richardson estimates of D'(0) disagree beyond 1e-4");
  return r2;
}

namespace {

// cumulative int tr over nodes [j0, j1] with endpoint-derivative correction
double trace_integral(const Profile& p, std::size_t j0, std::size_t j1, double shift)
{
  double s = p.wave.s, k = p.cfg.k;
  auto tr = [&](std::size_t j, double& dtr) {
    auto fv = flux_eval(p.cfg.flux, p.u[j]);
    auto ph = ignition_eval(p.cfg.ignition, p.u[j]);
    dtr = (fv.d2f + k / s * ph.dphi) * p.ux[j];
    return fv.df - s + k / s * ph.phi - shift;
  };
  double acc = 0, h = p.dx;
  double d0, d1;
  double t0 = tr(j0, d0);
  for (std::size_t j = j0 + 1; j <= j1; ++j) {
    double t1 = tr(j, d1);
    acc += 0.5 * h * (t0 + t1) + h * h / 12.0 * (d0 - d1);
    t0 = t1;
    d0 = d1;
  }
  return acc;
}

// int_{u_r}^{u_+} (f'(v) - f'(u_+)) / F(v, 1) dv
double scalar_tail_integral(const Profile& p, double u_r)
{
  TWField tw{&p.cfg, p.wave.u_plus, 1.0, p.wave.s, true};
  double up = p.wave.u_plus;
  double ap = flux_eval(p.cfg.flux, up).df;
  auto f = [&](double v) { return (flux_eval(p.cfg.flux, v).df - ap) / tw.F(v, 1.0); };
  double lo = std::min(u_r, up), hi = std::max(u_r, up);
  double val = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, lo, hi, 15, 1e-13);
  return u_r > up ? -val : val;
}

}

DPrimeFormula dprime_zero_formula(const Profile& p)
{
  if (p.degenerate) fail(ErrorKind::DegenerateProfile, "D'(0) formula requires a nondegenerate profile");
  const auto& w = p.wave;
  double s = w.s, k = p.cfg.k;
  DPrimeFormula out;
  out.delta = w.u_plus - w.u_minus + p.cfg.q;
  double nu = k / s * ignition_eval(p.cfg.ignition, w.u_minus).phi;
  std::size_t j0 = p.index_of_zero();
  std::size_t r = 0;
  while (r + 1 < p.x.size() && p.x[r] < p.x_ignition - 1e-12 * p.dx) ++r;
  double xr = p.x[r];
  double tail = scalar_tail_integral(p, p.u[r]);
  double ur_x = TWField{&p.cfg, w.u_plus, 1.0, s, true}.F(p.u[r], 1.0);
  if (w.cls == WaveClass::StrongDetonation) {
    double tr_minus = w.alpha_minus + nu;
    double full = trace_integral(p, 0, j0, tr_minus);
    double half = trace_integral(p, j0 / 2, j0, tr_minus);
    double w0 = std::exp(full);
    if (std::abs(std::exp(half) / w0 - 1.0) > 1e-4)
      fail(ErrorKind::Plateau, "Abel-formula limit not stabilized to 1e-4 by x = -L");
    double c_plus = ur_x * std::exp(-w.alpha_plus * xr + tail);
    out.gamma = w0 / std::abs(c_plus);
    out.value = out.delta * out.gamma;
    out.dd_ds = std::numeric_limits<double>::quiet_NaN();
    out.parts = {{"w0", w0}, {"c_plus", c_plus}, {"plateau_half_vs_full", std::exp(half) / w0 - 1.0}};
  } else if (w.cls == WaveClass::WeakDetonation) {
    out.dd_ds = melnikov_derivative_s(p);
    double c_minus = p.zx[0] * std::exp(-nu * p.x[0]);
    double T = trace_integral(p, j0, r, 0.0);
    double E_plus = std::exp(T - w.alpha_plus * xr + tail);
    out.gamma = std::numeric_limits<double>::quiet_NaN();
    out.value = std::abs(w.alpha_minus) * out.dd_ds / (std::abs(c_minus) * E_plus);
    out.parts = {{"c_minus", c_minus}, {"E_plus", E_plus}, {"abs_alpha_minus", std::abs(w.alpha_minus)}};
  } else {
    fail(ErrorKind::NotAWave, "D'(0) formula implemented for strong and weak detonations");
  }
  return out;
}

SignAtInfinity sign_at_infinity(const EvansSystem& es, double lambda_max, int jobs)
{
  double base = std::max({1.0, es.minus.alpha * es.minus.alpha, es.plus.alpha * es.plus.alpha,
                          es.k * es.minus.phi / es.s});
  double l0 = 25.0 * base;
  double lmax = lambda_max > 0 ? lambda_max : 16.0 * l0;
  for (int attempt = 0; attempt < 2; ++attempt) {
    std::vector<double> ls;
    for (double l = l0; l <= lmax * (1 + 1e-12); l *= 2) ls.push_back(l);
    std::vector<cplx> Ds(ls.size());
    parallel_for(ls.size(), jobs, [&](std::size_t i) { Ds[i] = evans_eval(es, ls[i]).D; });
    bool ok = true;
    int sg = 0;
    for (auto& D : Ds) {
      if (std::abs(D.imag()) > 1e-8 * std::abs(D)) ok = false;
      int si = D.real() > 0 ? 1 : -1;
      if (sg == 0) sg = si;
      if (si != sg || D.real() == 0) ok = false;
    }
    if (ok) return {sg, ls.front(), ls.back()};
    spdlog::debug("sign at infinity: no plateau on [{}, {}], escalating", l0, lmax);
    l0 *= 4;
    lmax *= 4;
  }
  fail(ErrorKind::NoPlateau, "sign of D(lambda) for large real lambda did not stabilize");
}

WindingResult winding_number(const EvansSystem& es, double r, double R, int n_samples, int jobs)
{
  constexpr double pi = std::numbers::pi;
  auto lam = [&](double t) -> cplx {
    if (t <= 1.0) return std::polar(R, 0.5 * pi * t);
    if (t <= 2.0) return cplx(0.0, std::exp(std::log(R) + (std::log(r) - std::log(R)) * (t - 1.0)));
    return std::polar(r, 0.5 * pi * (3.0 - t));
  };
  std::vector<double> ts;
  int n = std::max(n_samples, 8);
  for (int j = 0; j < n; ++j) ts.push_back(double(j) / n);
  for (int j = 0; j < 2 * n; ++j) ts.push_back(1.0 + double(j) / (2 * n));
  for (int j = 0; j <= n / 2; ++j) ts.push_back(2.0 + double(j) / (n / 2));
  std::vector<cplx> Ds(ts.size());
  parallel_for(ts.size(), jobs, [&](std::size_t i) { Ds[i] = evans_eval(es, lam(ts[i])).D; });
  for (int pass = 0; pass < 30; ++pass) {
    std::vector<double> nt;
    for (std::size_t j = 0; j + 1 < ts.size(); ++j)
      if (std::abs(std::arg(Ds[j + 1] / Ds[j])) >= 0.5 * pi) nt.push_back(0.5 * (ts[j] + ts[j + 1]));
    if (nt.empty()) break;
    std::vector<cplx> nD(nt.size());
    parallel_for(nt.size(), jobs, [&](std::size_t i) { nD[i] = evans_eval(es, lam(nt[i])).D; });
    std::vector<double> mt;
    std::vector<cplx> mD;
    std::size_t a = 0, b = 0;
    while (a < ts.size() || b < nt.size()) {
      if (b >= nt.size() || (a < ts.size() && ts[a] < nt[b])) {
        mt.push_back(ts[a]);
        mD.push_back(Ds[a++]);
      } else {
        mt.push_back(nt[b]);
        mD.push_back(nD[b++]);
      }
    }
    ts.swap(mt);
    Ds.swap(mD);
  }
  WindingResult wr;
  std::vector<double> mags;
  double darg = 0;
  for (std::size_t j = 0; j < ts.size(); ++j) {
    mags.push_back(std::abs(Ds[j]));
    wr.samples.emplace_back(lam(ts[j]), Ds[j]);
    if (j + 1 < ts.size()) darg += std::arg(Ds[j + 1] / Ds[j]);
  }
  wr.n_evals = ts.size();
  wr.min_abs = *std::min_element(mags.begin(), mags.end());
  std::nth_element(mags.begin(), mags.begin() + mags.size() / 2, mags.end());
  wr.median_abs = mags[mags.size() / 2];
  if (wr.min_abs <= 1e-6 * wr.median_abs)
    fail(ErrorKind::ContourTooClose, "|D| on the contour falls below 1e-6 of its median");
  double total = 2.0 * darg;
  double m = std::round(total / (2 * pi));
  if (std::abs(total - 2 * pi * m) > 1e-3) fail(ErrorKind::NonIntegerWinding, "accumulated argument is not a multiple of 2 pi");
  wr.count = static_cast<int>(m);
  return wr;
}

StabilityReport stability_index(const Profile& p, int jobs, double r, double R)
{
  auto es = EvansSystem::from_profile(p);
  StabilityReport rep;
  rep.D0_abs = std::abs(evans_eval(es, 0.0).D);
  rep.dprime0_numeric = dprime_zero_numeric(es);
  rep.formula = dprime_zero_formula(p);
  if (sgn(rep.dprime0_numeric) != sgn(rep.formula.value))
    fail(ErrorKind::InconsistentIndex, "numeric and formula D'(0) disagree in sign");
  rep.at_infinity = sign_at_infinity(es, 0.0, jobs);
  rep.Gamma = static_cast<int>(sgn(rep.dprime0_numeric) * rep.at_infinity.sign);
  auto wn = winding_number(es, r, R, 64, jobs);
  rep.winding_count = wn.count;
  double rel = std::abs(rep.dprime0_numeric - rep.formula.value) / std::abs(rep.formula.value);
  rep.residuals = {{"dprime_rel_diff", rel},
                   {"D0_over_dprime", rep.D0_abs / std::abs(rep.dprime0_numeric)},
                   {"parity_consistent", (wn.count % 2 == 0) == (rep.Gamma > 0)},
                   {"winding_min_abs", wn.min_abs},
                   {"winding_median_abs", wn.median_abs},
                   {"winding_evals", wn.n_evals}};
  return rep;
}

nlohmann::json to_json(const StabilityReport& r)
{
  auto num = [](double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); };
  return {{"dprime0_numeric", r.dprime0_numeric},
          {"dprime0_formula", r.formula.value},
          {"gamma", num(r.formula.gamma)},
          {"delta", r.formula.delta},
          {"dd_ds", num(r.formula.dd_ds)},
          {"formula_parts", r.formula.parts},
          {"sign_at_infinity", r.at_infinity.sign},
          {"plateau", {r.at_infinity.lambda_lo, r.at_infinity.lambda_hi}},
          {"Gamma", r.Gamma},
          {"winding_count", r.winding_count},
          {"D0_abs", r.D0_abs},
          {"residuals", r.residuals}};
}

}
