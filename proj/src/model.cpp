#include "detwave/model.hpp"
#include "detwave/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <boost/math/tools/roots.hpp>
#include <Eigen/Dense>

namespace detwave {

double FluxSpec::lo() const
{
  switch (kind) {
  case FluxKind::Burgers: return 0.0;
  case FluxKind::Exponential: return -std::numeric_limits<double>::infinity();
  case FluxKind::TabulatedCubic: return knots.empty() ? 0.0 : knots.front();
  }
  return 0.0;
}

double FluxSpec::hi() const
{
  if (kind == FluxKind::TabulatedCubic)
    return knots.empty() ? 0.0 : knots.back();
  return std::numeric_limits<double>::infinity();
}

bool FluxSpec::contains(double u) const
{
  if (!std::isfinite(u)) return false;
  switch (kind) {
  case FluxKind::Burgers: return u > 0.0;
  case FluxKind::Exponential: return true;
  case FluxKind::TabulatedCubic: return u >= lo() && u <= hi();
  }
  return false;
}

static FluxValue spline_eval(const FluxSpec& fl, double u)
{
  const auto& x = fl.knots;
  const auto& y = fl.values;
  const auto& m = fl.m;
  std::size_t n = x.size();
  std::size_t j = std::upper_bound(x.begin(), x.end(), u) - x.begin();
  if (j == 0) j = 1;
  if (j >= n) j = n - 1;
  std::size_t i = j - 1;
  double h = x[j] - x[i];
  double a = (x[j] - u) / h, b = (u - x[i]) / h;
  double f = a * y[i] + b * y[j] + ((a * a * a - a) * m[i] + (b * b * b - b) * m[j]) * h * h / 6.0;
  double df = (y[j] - y[i]) / h - (3 * a * a - 1) * h * m[i] / 6.0 + (3 * b * b - 1) * h * m[j] / 6.0;
  double d2f = a * m[i] + b * m[j];
  return {f, df, d2f};
}

FluxValue flux_eval(const FluxSpec& flux, double u)
{
  if (!flux.contains(u)) {
    std::ostringstream os;
    os << "u=" << u << " outside flux domain";
    fail(ErrorKind::Domain, os.str());
  }
  switch (flux.kind) {
  case FluxKind::Burgers: return {0.5 * u * u, u, 1.0};
  case FluxKind::Exponential: {
    double e = std::exp(u);
    return {e, e, e};
  }
  case FluxKind::TabulatedCubic: return spline_eval(flux, u);
  }
  return {0, 0, 0};
}

double flux_slope_inverse(const FluxSpec& flux, double a)
{
  switch (flux.kind) {
  case FluxKind::Burgers:
    if (a <= 0) fail(ErrorKind::Domain, "no Burgers state with nonpositive characteristic speed");
    return a;
  case FluxKind::Exponential:
    if (a <= 0) fail(ErrorKind::Domain, "no exponential-flux state with nonpositive characteristic speed");
    return std::log(a);
  case FluxKind::TabulatedCubic: {
    double lo = flux.lo(), hi = flux.hi();
    double glo = flux_eval(flux, lo).df - a, ghi = flux_eval(flux, hi).df - a;
    if (glo > 0 || ghi < 0) fail(ErrorKind::Domain, "characteristic speed outside tabulated range");
    if (glo == 0) return lo;
    if (ghi == 0) return hi;
    boost::uintmax_t it = 200;
    auto r = boost::math::tools::toms748_solve([&](double u) { return flux_eval(flux, u).df - a; },
                                               lo, hi, glo, ghi, boost::math::tools::eps_tolerance<double>(52), it);
    return 0.5 * (r.first + r.second);
  }
  }
  return a;
}

double IgnitionSpec::temperature(double u) const
{
  double gm = gamma_gas * mach * mach;
  return -gm * u * u + (gm + 1.0) * u;
}

IgnitionValue ignition_eval(const IgnitionSpec& ig, double u)
{
  if (!(u > ig.u_i && u < ig.u_sup)) return {0.0, 0.0};
  if (ig.mode == IgnitionMode::PolynomialBump) {
    double w = ig.u_sup - ig.u_i;
    double c = ig.amplitude * std::pow(2.0 / w, 4);
    double p = (u - ig.u_i) * (ig.u_sup - u);
    double dp = ig.u_sup + ig.u_i - 2.0 * u;
    return {c * p * p, 2.0 * c * p * dp};
  }
  double gm = ig.gamma_gas * ig.mach * ig.mach;
  double tmax = (gm + 1.0) * (gm + 1.0) / (4.0 * gm);
  double den = (tmax - ig.T_i) * (tmax - ig.T_i);
  double dT = ig.temperature(u) - ig.T_i;
  if (dT <= 0) return {0.0, 0.0};
  double Tp = -2.0 * gm * u + gm + 1.0;
  return {ig.amplitude * dT * dT / den, 2.0 * ig.amplitude * dT * Tp / den};
}

static void build_spline(FluxSpec& fl, std::vector<std::string>& errs)
{
  auto& x = fl.knots;
  auto& y = fl.values;
  std::size_t n = x.size();
  if (n != y.size()) {
    errs.push_back("tabulated flux: knots and values differ in length");
    return;
  }
  if (n < (fl.clamped ? 2u : 4u)) {
    errs.push_back("tabulated flux: too few knots");
    return;
  }
  for (std::size_t i = 1; i < n; ++i)
    if (!(x[i] > x[i - 1])) {
      errs.push_back("tabulated flux: knots must be strictly increasing");
      return;
    }
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(n, n);
  Eigen::VectorXd r = Eigen::VectorXd::Zero(n);
  for (std::size_t i = 1; i + 1 < n; ++i) {
    double h0 = x[i] - x[i - 1], h1 = x[i + 1] - x[i];
    A(i, i - 1) = h0 / 6.0;
    A(i, i) = (h0 + h1) / 3.0;
    A(i, i + 1) = h1 / 6.0;
    r(i) = (y[i + 1] - y[i]) / h1 - (y[i] - y[i - 1]) / h0;
  }
  if (fl.clamped) {
    double h0 = x[1] - x[0], hn = x[n - 1] - x[n - 2];
    A(0, 0) = h0 / 3.0;
    A(0, 1) = h0 / 6.0;
    r(0) = (y[1] - y[0]) / h0 - fl.slope_left;
    A(n - 1, n - 2) = hn / 6.0;
    A(n - 1, n - 1) = hn / 3.0;
    r(n - 1) = fl.slope_right - (y[n - 1] - y[n - 2]) / hn;
  } else {
    // not-a-knot: third derivative continuous at the second and penultimate knots
    double h0 = x[1] - x[0], h1 = x[2] - x[1];
    A(0, 0) = h1;
    A(0, 1) = -(h0 + h1);
    A(0, 2) = h0;
    double g0 = x[n - 2] - x[n - 3], g1 = x[n - 1] - x[n - 2];
    A(n - 1, n - 3) = g1;
    A(n - 1, n - 2) = -(g0 + g1);
    A(n - 1, n - 1) = g0;
  }
  Eigen::VectorXd m = A.fullPivLu().solve(r);
  fl.m.assign(m.data(), m.data() + n);
}

ModelConfig validate_config(ModelConfig cfg)
{
  std::vector<std::string> errs;
  if (!(cfg.q > 0)) errs.push_back("q must be positive");
  if (!(cfg.k > 0)) errs.push_back("k must be positive");
  auto& ig = cfg.ignition;
  if (ig.mode == IgnitionMode::ZNDTemperature) {
    if (!(ig.mach > 0 && ig.mach < 1)) errs.push_back("Mach number must lie in (0,1)");
    if (!(ig.gamma_gas > 1)) errs.push_back("gamma_gas must exceed 1");
    if (errs.empty()) {
      double gm = ig.gamma_gas * ig.mach * ig.mach;
      double b = gm + 1.0;
      double disc = b * b - 4.0 * gm * ig.T_i;
      if (!(disc > 0)) {
        errs.push_back("ZND temperature map: T(u)=T_i has no two distinct real roots");
      } else {
        double sq = std::sqrt(disc);
        double r1 = (b - sq) / (2.0 * gm);
        double r2 = (b + sq) / (2.0 * gm);
        ig.u_i = r1;
        ig.u_sup = r2;
      }
    }
  }
  if (!(ig.u_sup > ig.u_i)) errs.push_back("u_sup must exceed u_i");
  if (!(ig.amplitude > 0)) errs.push_back("ignition amplitude must be positive");
  if (cfg.flux.kind == FluxKind::TabulatedCubic) build_spline(cfg.flux, errs);

  if (errs.empty()) {
    if (!cfg.flux.contains(ig.u_i) || !cfg.flux.contains(ig.u_sup))
      errs.push_back("ignition band must lie inside the flux domain");
  }
  if (errs.empty()) {
    double w = ig.u_sup - ig.u_i;
    double a = std::max(ig.u_i - w, cfg.flux.lo()), b = std::min(ig.u_sup + w, cfg.flux.hi());
    if (cfg.flux.kind == FluxKind::Burgers) a = std::max(a, 1e-3 * ig.u_i);
    for (int j = 0; j < 1000; ++j) {
      double u = a + (b - a) * j / 999.0;
      if (!cfg.flux.contains(u)) continue;
      auto fv = flux_eval(cfg.flux, u);
      if (!(fv.df > 0) || !(fv.d2f > 0)) {
        std::ostringstream os;
        os << "flux must satisfy f'>0 and f''>0 (violated at u=" << u << ")";
        errs.push_back(os.str());
        break;
      }
    }
    double h = 1e-9 * w;
    double tol = 1e-6 * ig.amplitude / w;
    for (double ut : {ig.u_i, ig.u_sup}) {
      double left = (ignition_eval(ig, ut).phi - ignition_eval(ig, ut - h).phi) / h;
      double right = (ignition_eval(ig, ut + h).phi - ignition_eval(ig, ut).phi) / h;
      if (std::abs(left) > tol || std::abs(right) > tol) {
        errs.push_back("ignition function is not C1 at a threshold");
        break;
      }
    }
  }
  if (!errs.empty()) {
    std::string msg;
    for (std::size_t i = 0; i < errs.size(); ++i) msg += (i ? "; " : "") + errs[i];
    fail(ErrorKind::Validation, msg);
  }
  return cfg;
}

ModelConfig p0_config()
{
  return validate_config(ModelConfig{});
}

std::string flux_kind_name(FluxKind k)
{
  switch (k) {
  case FluxKind::Burgers: return "Burgers";
  case FluxKind::Exponential: return "Exponential";
  case FluxKind::TabulatedCubic: return "TabulatedCubic";
  }
  return "?";
}

std::string ignition_mode_name(IgnitionMode m)
{
  return m == IgnitionMode::PolynomialBump ? "PolynomialBump" : "ZNDTemperature";
}

nlohmann::json to_json(const ModelConfig& cfg)
{
  nlohmann::json j;
  j["schema_version"] = 1;
  j["flux"]["kind"] = flux_kind_name(cfg.flux.kind);
  j["flux"]["params"] = nlohmann::json::object();
  if (cfg.flux.kind == FluxKind::TabulatedCubic) {
    j["flux"]["params"]["knots"] = cfg.flux.knots;
    j["flux"]["params"]["values"] = cfg.flux.values;
    if (cfg.flux.clamped) {
      j["flux"]["params"]["slope_left"] = cfg.flux.slope_left;
      j["flux"]["params"]["slope_right"] = cfg.flux.slope_right;
    }
  }
  const auto& ig = cfg.ignition;
  j["ignition"]["mode"] = ignition_mode_name(ig.mode);
  j["ignition"]["u_i"] = ig.u_i;
  j["ignition"]["u_sup"] = ig.u_sup;
  j["ignition"]["amplitude"] = ig.amplitude;
  if (ig.mode == IgnitionMode::ZNDTemperature) {
    j["ignition"]["M"] = ig.mach;
    j["ignition"]["gamma_gas"] = ig.gamma_gas;
    j["ignition"]["T_i"] = ig.T_i;
  }
  j["q"] = cfg.q;
  j["k"] = cfg.k;
  return j;
}

ModelConfig config_from_json(const nlohmann::json& j)
{
  ModelConfig cfg;
  try {
    if (j.contains("schema_version") && j["schema_version"].get<int>() != 1)
      fail(ErrorKind::Validation, "unsupported schema_version");
    if (j.contains("flux")) {
      const auto& f = j["flux"];
      std::string kind = f.value("kind", std::string("Burgers"));
      if (kind == "Burgers") cfg.flux.kind = FluxKind::Burgers;
      else if (kind == "Exponential") cfg.flux.kind = FluxKind::Exponential;
      else if (kind == "TabulatedCubic") cfg.flux.kind = FluxKind::TabulatedCubic;
      else fail(ErrorKind::Validation, "unknown flux kind " + kind);
      if (f.contains("params")) {
        const auto& p = f["params"];
        if (p.contains("knots")) cfg.flux.knots = p["knots"].get<std::vector<double>>();
        if (p.contains("values")) cfg.flux.values = p["values"].get<std::vector<double>>();
        if (p.contains("slope_left") && p.contains("slope_right")) {
          cfg.flux.clamped = true;
          cfg.flux.slope_left = p["slope_left"].get<double>();
          cfg.flux.slope_right = p["slope_right"].get<double>();
        }
      }
    }
    if (j.contains("ignition")) {
      const auto& g = j["ignition"];
      std::string mode = g.value("mode", std::string("PolynomialBump"));
      if (mode == "PolynomialBump") cfg.ignition.mode = IgnitionMode::PolynomialBump;
      else if (mode == "ZNDTemperature") cfg.ignition.mode = IgnitionMode::ZNDTemperature;
      else fail(ErrorKind::Validation, "unknown ignition mode " + mode);
      cfg.ignition.u_i = g.value("u_i", cfg.ignition.u_i);
      cfg.ignition.u_sup = g.value("u_sup", cfg.ignition.u_sup);
      cfg.ignition.amplitude = g.value("amplitude", cfg.ignition.amplitude);
      cfg.ignition.mach = g.value("M", 0.0);
      cfg.ignition.gamma_gas = g.value("gamma_gas", 0.0);
      cfg.ignition.T_i = g.value("T_i", 0.0);
    }
    cfg.q = j.value("q", cfg.q);
    cfg.k = j.value("k", cfg.k);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::Validation, std::string("malformed config: ") + e.what());
  }
  return cfg;
}

}
