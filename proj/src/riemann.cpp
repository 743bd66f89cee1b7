#include "detwave/riemann.hpp"
#include "detwave/errors.hpp"
#include "detwave/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace detwave {

namespace {

double tol_of(double v) { return 1e-12 * std::max(1.0, std::abs(v)); }

RiemannWave combustion(const ModelConfig& cfg, double um, double up, double s, WaveClass cls)
{
  RiemannWave w;
  w.spec.u_minus = um;
  w.spec.u_plus = up;
  w.spec.z_minus = 0;
  w.spec.z_plus = 1;
  w.spec.s = s;
  w.spec.cls = cls;
  w.spec.alpha_minus = flux_eval(cfg.flux, um).df - s;
  w.spec.alpha_plus = flux_eval(cfg.flux, up).df - s;
  w.speed_lo = w.speed_hi = s;
  w.has_profile = cls != WaveClass::CJDetonation && cls != WaveClass::CJDeflagration;
  // strong detonations whose reaction zone would run past u^i have no connecting orbit
  if (cls == WaveClass::StrongDetonation) {
    try {
      compute_profile(cfg, w.spec);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::NoConnection) throw;
      w.has_profile = false;
    }
  }
  return w;
}

void push(std::vector<RiemannWave>& ws, const RiemannWave& w)
{
  if (!w.zero_strength) ws.push_back(w);
}

// left-state chord speed of a combustion wave from um to up
double chord_speed(const ModelConfig& cfg, double um, double up)
{
  return (flux_eval(cfg.flux, up).f - flux_eval(cfg.flux, um).f) / (up - um + cfg.q);
}

}

RiemannWave gas_dynamical_wave(const ModelConfig& cfg, double u_l, double u_r, double z_frozen)
{
  RiemannWave w;
  w.spec.u_minus = u_l;
  w.spec.u_plus = u_r;
  w.spec.z_minus = w.spec.z_plus = z_frozen;
  auto fl = flux_eval(cfg.flux, u_l), fr = flux_eval(cfg.flux, u_r);
  if (u_l == u_r) {
    w.zero_strength = true;
    w.spec.cls = WaveClass::InertShock;
    w.spec.s = fl.df;
    w.speed_lo = w.speed_hi = fl.df;
  } else if (u_l > u_r) {
    w.spec.cls = WaveClass::InertShock;
    w.spec.s = (fl.f - fr.f) / (u_l - u_r);
    w.speed_lo = w.speed_hi = w.spec.s;
  } else {
    w.spec.cls = WaveClass::InertRarefaction;
    w.speed_lo = fl.df;
    w.speed_hi = fr.df;
    w.spec.s = 0.5 * (fl.df + fr.df);
  }
  w.spec.alpha_minus = fl.df - w.spec.s;
  w.spec.alpha_plus = fr.df - w.spec.s;
  return w;
}

RiemannSolution solve_riemann(const ModelConfig& cfg, RiemannState L, RiemannState R)
{
  const auto& ig = cfg.ignition;
  double ui = ig.u_i, usup = ig.u_sup;
  double uL = L.u, uR = R.u;
  flux_eval(cfg.flux, uL);
  flux_eval(cfg.flux, uR);
  RiemannSolution sol;

  if (L.z == R.z) {
    if (L.z != 0.0 && L.z != 1.0) fail(ErrorKind::UnsupportedData, "z must be 0 or 1 at both ends");
    if (L.z == 1.0) {
      bool lo = uL <= ui && uR <= ui, hi = uL >= usup && uR >= usup;
      if (!lo && !hi)
        fail(ErrorKind::UnsupportedData,
             "z = 1 on both sides with states in different components of the non-reacting set (diffusive scaling)");
    }
    sol.case_label = "inert";
    push(sol.waves, gas_dynamical_wave(cfg, uL, uR, L.z));
    return sol;
  }
  if (!(L.z == 0.0 && R.z == 1.0))
    fail(ErrorKind::UnsupportedData, "only z_L = 0, z_R = 1 or z_L = z_R admit a Riemann solution");

  if (uL >= usup && uR > ui) fail(ErrorKind::NoSolution, "no Riemann solution (case IV)");
  if (uR > ui + tol_of(ui) && uR < usup - tol_of(usup))
    fail(ErrorKind::UnsupportedData, "right state (u_R, 1) is not a rest state: u_R lies inside the ignition band");

  // Case I: deflagration
  if (uL < usup && uR >= usup - tol_of(usup)) {
    double s_up = cj_speeds(cfg, usup).second;
    double u_cj = cj_state(cfg, s_up);
    if (uL > u_cj) {
      if (uL <= ui) fail(ErrorKind::NoSolution, "weak deflagration left state must lie in the ignition band");
      sol.case_label = "Ia";
      double s = chord_speed(cfg, uL, usup);
      push(sol.waves, combustion(cfg, uL, usup, s, WaveClass::WeakDeflagration));
      push(sol.waves, gas_dynamical_wave(cfg, usup, uR, 1.0));
    } else {
      sol.case_label = "Ib";
      push(sol.waves, gas_dynamical_wave(cfg, uL, u_cj, 0.0));
      push(sol.waves, combustion(cfg, u_cj, usup, s_up, WaveClass::CJDeflagration));
      push(sol.waves, gas_dynamical_wave(cfg, usup, uR, 1.0));
    }
    return sol;
  }

  bool limiting = std::abs(uR - ui) <= tol_of(ui);
  double s_star = cj_speeds(cfg, uR).first;
  double u_cj = cj_state(cfg, s_star);
  WeakSpeed ws{false, s_star, 0.0};
  if (!limiting) ws = find_weak_detonation_speed(cfg, uR);

  if (uL >= usup) {
    // Case V
    if (!ws.found) fail(ErrorKind::NoSolution, "no Riemann solution (case V never occurs in detonation case (i))");
    auto rh = rh_states(cfg, uR, ws.s_hat, Branch::Detonation);
    if (uL > rh.strong)
      fail(ErrorKind::NoSolution, "no Riemann solution (case V: u_L exceeds the shock companion u^*)");
    sol.case_label = "V";
    sol.s_hat = ws.s_hat;
    push(sol.waves, gas_dynamical_wave(cfg, uL, rh.weak, 0.0));
    push(sol.waves, combustion(cfg, rh.weak, uR, ws.s_hat, WaveClass::WeakDetonation));
    return sol;
  }

  // Case II / III
  if (!ws.found) {
    if (uL > u_cj) {
      sol.case_label = limiting ? "III" : "IIa";
      double s = chord_speed(cfg, uL, uR);
      push(sol.waves, combustion(cfg, uL, uR, s, WaveClass::StrongDetonation));
      if (limiting) {
        auto rh = rh_states(cfg, uR, s, Branch::Detonation);
        std::vector<RiemannWave> alt;
        push(alt, gas_dynamical_wave(cfg, uL, rh.weak, 0.0));
        push(alt, combustion(cfg, rh.weak, uR, s, WaveClass::WeakDetonation));
        sol.side_list.push_back(alt);
      }
    } else {
      sol.case_label = limiting ? "III" : "IIb";
      push(sol.waves, gas_dynamical_wave(cfg, uL, u_cj, 0.0));
      push(sol.waves, combustion(cfg, u_cj, uR, s_star, WaveClass::CJDetonation));
    }
    return sol;
  }
  sol.s_hat = ws.s_hat;
  auto rh = rh_states(cfg, uR, ws.s_hat, Branch::Detonation);
  if (uL > rh.strong) {
    sol.case_label = "IIa'";
    push(sol.waves, combustion(cfg, uL, uR, chord_speed(cfg, uL, uR), WaveClass::StrongDetonation));
  } else {
    sol.case_label = "IIb'";
    push(sol.waves, gas_dynamical_wave(cfg, uL, rh.weak, 0.0));
    push(sol.waves, combustion(cfg, rh.weak, uR, ws.s_hat, WaveClass::WeakDetonation));
  }
  return sol;
}

std::vector<std::string> check_solution(const ModelConfig& cfg, const RiemannSolution& sol, RiemannState L,
                                        RiemannState R)
{
  std::vector<std::string> bad;
  const auto& ig = cfg.ignition;
  if (sol.waves.empty()) {
    if (L.u != R.u || L.z != R.z) bad.push_back("empty wave list for distinct states");
    return bad;
  }
  auto close = [](double a, double b) { return std::abs(a - b) <= 1e-10 * std::max(1.0, std::abs(a)); };
  if (!close(sol.waves.front().spec.u_minus, L.u) || sol.waves.front().spec.z_minus != L.z)
    bad.push_back("leftmost state differs from U_L");
  if (!close(sol.waves.back().spec.u_plus, R.u) || sol.waves.back().spec.z_plus != R.z)
    bad.push_back("rightmost state differs from U_R");
  for (std::size_t j = 0; j < sol.waves.size(); ++j) {
    const auto& w = sol.waves[j];
    if (w.zero_strength) bad.push_back("zero-strength wave listed");
    if (w.speed_lo > w.speed_hi + 1e-12) bad.push_back("fan edges out of order");
    if (j + 1 < sol.waves.size()) {
      const auto& nx = sol.waves[j + 1];
      if (!close(w.spec.u_plus, nx.spec.u_minus) || w.spec.z_plus != nx.spec.z_minus)
        bad.push_back("wave chaining broken at index " + std::to_string(j));
      if (w.speed_hi > nx.speed_lo + 1e-10) bad.push_back("speeds decrease at index " + std::to_string(j));
      double u = w.spec.u_plus, z = w.spec.z_plus;
      if (u > ig.u_i + 1e-12 && u < ig.u_sup - 1e-12 && z != 0.0)
        bad.push_back("intermediate state is not a rest state at index " + std::to_string(j));
    }
  }
  return bad;
}

RiemannState sample_solution(const ModelConfig& cfg, const RiemannSolution& sol, RiemannState L, double xi)
{
  RiemannState st = L;
  for (const auto& w : sol.waves) {
    if (xi < w.speed_lo) return st;
    if (w.spec.cls == WaveClass::InertRarefaction && xi < w.speed_hi) {
      return {flux_slope_inverse(cfg.flux, xi), w.spec.z_minus};
    }
    st = {w.spec.u_plus, w.spec.z_plus};
  }
  return st;
}

CJShiftReport cj_shift_report(const ModelConfig& cfg, double u_R, const std::vector<double>& k_grid, int jobs)
{
  if (u_R > cfg.ignition.u_i) fail(ErrorKind::Validation, "cj shift report requires u_R <= u_i");
  auto eval = [&](double k) {
    ModelConfig c = cfg;
    c.k = k;
    double s_star = cj_speeds(c, u_R).first;
    double d0 = melnikov_separation(c, u_R, s_star * (1 + 1e-9));
    CJShiftRow row{k, d0 > 0, s_star, d0};
    if (row.case_ii) row.speed = find_weak_detonation_speed(c, u_R).s_hat;
    return row;
  };
  CJShiftReport rep;
  std::vector<double> ks = k_grid;
  std::sort(ks.begin(), ks.end());
  rep.rows.resize(ks.size());
  parallel_for(ks.size(), jobs, [&](std::size_t i) { rep.rows[i] = eval(ks[i]); });
  int esc = 0;
  while (!rep.rows.empty() && !rep.rows.back().case_ii && esc++ < 20) rep.rows.push_back(eval(2 * rep.rows.back().k));
  double lo = -1, hi = -1;
  for (const auto& r : rep.rows) {
    if (!r.case_ii) lo = r.k;
    else if (hi < 0 && lo > 0) hi = r.k;
  }
  if (lo > 0 && hi > 0) {
    auto case_ii = [&](double k) {
      ModelConfig c = cfg;
      c.k = k;
      return melnikov_separation(c, u_R, cj_speeds(c, u_R).first * (1 + 1e-9)) > 0;
    };
    while (hi - lo > 1e-3 * lo) {
      double mid = 0.5 * (lo + hi);
      (case_ii(mid) ? hi : lo) = mid;
    }
    rep.k0_lo = lo;
    rep.k0_hi = hi;
  }
  return rep;
}

nlohmann::json to_json(const RiemannWave& w)
{
  auto j = to_json(w.spec);
  j["speed_lo"] = w.speed_lo;
  j["speed_hi"] = w.speed_hi;
  j["has_profile"] = w.has_profile;
  return j;
}

nlohmann::json to_json(const RiemannSolution& s)
{
  nlohmann::json j;
  j["case"] = s.case_label;
  j["waves"] = nlohmann::json::array();
  for (const auto& w : s.waves) j["waves"].push_back(to_json(w));
  j["side_list"] = nlohmann::json::array();
  for (const auto& alt : s.side_list) {
    auto a = nlohmann::json::array();
    for (const auto& w : alt) a.push_back(to_json(w));
    j["side_list"].push_back(a);
  }
  if (s.s_hat) j["s_hat"] = *s.s_hat;
  return j;
}

nlohmann::json to_json(const CJShiftReport& r)
{
  nlohmann::json j;
  j["rows"] = nlohmann::json::array();
  for (const auto& row : r.rows)
    j["rows"].push_back({{"k", row.k}, {"case", row.case_ii ? "ii" : "i"}, {"speed", row.speed}, {"d_at_sstar", row.d_at_sstar}});
  if (r.k0_lo) j["k0_bracket"] = {*r.k0_lo, *r.k0_hi};
  return j;
}

}
