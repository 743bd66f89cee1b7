#include "detwave/cli.hpp"
#include "detwave/errors.hpp"
#include "detwave/evans.hpp"
#include "detwave/io.hpp"
#include "detwave/parallel.hpp"
#include "detwave/pdesim.hpp"
#include "detwave/riemann.hpp"

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <functional>
#include <iostream>
#include <optional>
#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

namespace detwave {

void init_logging()
{
  static bool done = false;
  if (!done) {
    auto lg = spdlog::stderr_color_mt("detwave");
    spdlog::set_default_logger(lg);
    done = true;
  }
  const char* env = std::getenv("DETWAVE_LOG");
  spdlog::set_level(env ? spdlog::level::from_str(env) : spdlog::level::warn);
}

namespace {

using json = nlohmann::json;

struct Globals {
  std::string config_path;
  std::string out = "detwave-out";
  int jobs = 1;
  std::optional<double> q, k;
};

struct WaveArgs {
  std::string wave = "strong";
  double uplus = 0.2;
  std::optional<double> s, uminus;
};

struct Context {
  ModelConfig cfg;
  std::string config_sha;
  Globals g;
};

Context load(const Globals& g)
{
  Context c;
  c.g = g;
  json j = json::object();
  if (!g.config_path.empty()) {
    std::string text = read_text(g.config_path);
    c.config_sha = sha256_hex(text);
    try {
      j = json::parse(text);
    } catch (const json::exception& e) {
      fail(ErrorKind::Validation, std::string("config is not valid JSON: ") + e.what());
    }
    if (!j.contains("schema_version")) fail(ErrorKind::Validation, "config lacks schema_version");
  }
  ModelConfig cfg = config_from_json(j);
  if (g.q) cfg.q = *g.q;
  if (g.k) cfg.k = *g.k;
  c.cfg = validate_config(cfg);
  if (c.config_sha.empty()) c.config_sha = sha256_hex(to_json(c.cfg).dump());
  return c;
}

double combustion_chord(const ModelConfig& cfg, double um, double up)
{
  return (flux_eval(cfg.flux, up).f - flux_eval(cfg.flux, um).f) / (up - um + cfg.q);
}

WaveSpec select_wave(const ModelConfig& cfg, const WaveArgs& a)
{
  if (a.wave == "strong" || a.wave == "weak") {
    double s;
    if (a.s) s = *a.s;
    else if (a.wave == "weak") {
      auto ws = find_weak_detonation_speed(cfg, a.uplus);
      if (!ws.found) fail(ErrorKind::NoConnection, "detonation case (i): no weak detonation with a profile");
      s = ws.s_hat;
    } else
      fail(ErrorKind::Validation, "--s is required for a strong detonation");
    auto rh = rh_states(cfg, a.uplus, s, Branch::Detonation);
    return classify_wave(cfg, a.wave == "strong" ? rh.strong : rh.weak, a.uplus, s);
  }
  if (!a.uminus) fail(ErrorKind::Validation, "--uminus is required for wave '" + a.wave + "'");
  if (a.wave == "deflagration") {
    double up = cfg.ignition.u_sup;
    return classify_wave(cfg, *a.uminus, up, combustion_chord(cfg, *a.uminus, up));
  }
  if (a.wave == "shock") return gas_dynamical_wave(cfg, *a.uminus, a.uplus, 0.0).spec;
  fail(ErrorKind::Validation, "unknown wave '" + a.wave + "' (strong, weak, deflagration, shock)");
}

void add_wave_opts(CLI::App* sc, WaveArgs& w)
{
  sc->add_option("--wave", w.wave, "strong | weak | deflagration | shock");
  sc->add_option("--uplus", w.uplus, "right state u_+");
  sc->add_option("--s", w.s, "wave speed (weak: defaults to the root of d)");
  sc->add_option("--uminus", w.uminus, "left state (deflagration, shock)");
}

json wave_params(const WaveArgs& w)
{
  json j{{"wave", w.wave}, {"uplus", w.uplus}};
  if (w.s) j["s"] = *w.s;
  if (w.uminus) j["uminus"] = *w.uminus;
  return j;
}

std::vector<double> linspace(double a, double b, int n)
{
  if (n < 1) fail(ErrorKind::Validation, "grid needs at least one point");
  std::vector<double> v(n);
  for (int i = 0; i < n; ++i) v[i] = n == 1 ? a : a + (b - a) * i / (n - 1);
  return v;
}

struct Runner {
  std::string name;
  json params;
  std::function<json(const Context&, OutputDir&)> run;
};

int emit_error(ErrorKind k, const std::string& msg)
{
  json e{{"error", kind_name(k)}, {"message", msg}, {"exit_code", exit_code(k)}};
  std::cerr << e.dump() << "\n";
  return exit_code(k);
}

}

int dispatch(const std::vector<std::string>& args)
{
  std::vector<char*> argv;
  std::vector<std::string> copy = args;
  for (auto& s : copy) argv.push_back(s.data());
  return dispatch(static_cast<int>(argv.size()), argv.data());
}

int dispatch(int argc, char** argv)
{
  init_logging();
  CLI::App app{"Traveling combustion waves of the Majda model: profiles, Evans function, Riemann catalog"};
  app.set_version_flag("--version", kVersion);
  Globals g;
  app.add_option("--config", g.config_path, "model config JSON (schema_version 1); default is the P0 instance");
  app.add_option("--out", g.out, "output directory");
  app.add_option("--jobs", g.jobs, "threads for independent grid points")->check(CLI::PositiveNumber);
  app.add_option("--q", g.q, "override heat release q");
  app.add_option("--k", g.k, "override reaction rate k");
  app.require_subcommand(1);
  app.fallthrough();

  Runner runner;

  // rh
  double rh_uplus = 0.2, rh_s = 1.5;
  std::string rh_branch = "detonation";
  auto* rh = app.add_subcommand("rh", "Rankine-Hugoniot left states for (u_+, s)");
  rh->add_option("--uplus", rh_uplus);
  rh->add_option("--s", rh_s);
  rh->add_option("--branch", rh_branch)->check(CLI::IsMember({"detonation", "deflagration"}));
  rh->callback([&] {
    runner = {"rh", {{"uplus", rh_uplus}, {"s", rh_s}, {"branch", rh_branch}}, [&](const Context& c, OutputDir&) {
                auto r = rh_states(c.cfg, rh_uplus, rh_s,
                                   rh_branch == "detonation" ? Branch::Detonation : Branch::Deflagration);
                return json{{"uplus", rh_uplus}, {"s", rh_s}, {"branch", rh_branch}, {"strong", r.strong},
                            {"weak", r.weak}};
              }};
  });

  // cj
  double cj_uplus = 0.2;
  auto* cj = app.add_subcommand("cj", "Chapman-Jouguet speeds s_* and s^* for u_+");
  cj->add_option("--uplus", cj_uplus);
  cj->callback([&] {
    runner = {"cj", {{"uplus", cj_uplus}}, [&](const Context& c, OutputDir&) {
                auto [sd, sf] = cj_speeds(c.cfg, cj_uplus);
                return json{{"uplus", cj_uplus}, {"s_detonation", sd}, {"s_deflagration", sf},
                            {"u_cj_detonation", cj_state(c.cfg, sd)}, {"u_cj_deflagration", cj_state(c.cfg, sf)}};
              }};
  });

  // cjdiagram
  double cd_uplus = 0.2, cd_smin = 0.05, cd_smax = 3.0;
  int cd_n = 301;
  auto* cd = app.add_subcommand("cjdiagram", "left states u_- against speed s (detonation branch)");
  cd->add_option("--uplus", cd_uplus);
  cd->add_option("--smin", cd_smin);
  cd->add_option("--smax", cd_smax);
  cd->add_option("--n", cd_n);
  cd->callback([&] {
    runner = {"cjdiagram", {{"uplus", cd_uplus}, {"smin", cd_smin}, {"smax", cd_smax}, {"n", cd_n}},
              [&](const Context& c, OutputDir& out) {
                auto rows = cj_diagram(c.cfg, cd_uplus, linspace(cd_smin, cd_smax, cd_n), c.g.jobs);
                std::vector<std::vector<double>> csv;
                json arr = json::array();
                for (const auto& r : rows) {
                  double nan = std::nan("");
                  csv.push_back({r.s, r.strong.value_or(nan), r.weak.value_or(nan)});
                  arr.push_back({{"s", r.s}, {"strong", r.strong ? json(*r.strong) : json(nullptr)},
                                 {"weak", r.weak ? json(*r.weak) : json(nullptr)}});
                }
                out.write_csv("cjdiagram.csv", {"s", "u_strong", "u_weak"}, csv);
                auto [sd, sf] = cj_speeds(c.cfg, cd_uplus);
                return json{{"s_detonation", sd}, {"s_deflagration", sf}, {"rows", arr}};
              }};
  });

  // phase
  double ph_uplus = 0.2, ph_s = 1.5;
  int ph_n = 200;
  auto* ph = app.add_subcommand("phase", "nullcline F = 0 and traveling-wave orbits in the (u, z) plane");
  ph->add_option("--uplus", ph_uplus);
  ph->add_option("--s", ph_s);
  ph->add_option("--n", ph_n);
  ph->callback([&] {
    runner = {"phase", {{"uplus", ph_uplus}, {"s", ph_s}, {"n", ph_n}}, [&](const Context& c, OutputDir& out) {
                const auto& cfg = c.cfg;
                auto rh = rh_states(cfg, ph_uplus, ph_s, Branch::Detonation);
                TWField tw{&cfg, ph_uplus, 1.0, ph_s, true};
                std::vector<std::vector<double>> ncl;
                for (double u : linspace(ph_uplus, std::max(rh.strong, cfg.ignition.u_sup), ph_n)) {
                  // F is affine in z
                  double z = 1.0 + tw.F(u, 1.0) / (ph_s * cfg.q);
                  ncl.push_back({u, z});
                }
                out.write_csv("nullcline.csv", {"u", "z"}, ncl);
                json res{{"uplus", ph_uplus}, {"s", ph_s}, {"u_strong", rh.strong}, {"u_weak", rh.weak}};
                std::vector<std::vector<double>> orb;
                for (auto [u, z] : weak_manifold_orbit(cfg, ph_uplus, ph_s, ph_n)) orb.push_back({u, z});
                out.write_csv("orbit_weak_saddle.csv", {"u", "z"}, orb);
                auto sh = shoot_weak_manifold(cfg, ph_uplus, ph_s);
                res["weak_saddle"] = {{"zhat", sh.zhat}, {"d", sh.d}, {"trapped", sh.trapped}};
                try {
                  auto p = compute_profile(cfg, classify_wave(cfg, rh.strong, ph_uplus, ph_s));
                  std::vector<std::vector<double>> sp;
                  std::size_t stride = std::max<std::size_t>(1, p.x.size() / ph_n);
                  for (std::size_t i = 0; i < p.x.size(); i += stride) sp.push_back({p.u[i], p.z[i]});
                  out.write_csv("orbit_strong.csv", {"u", "z"}, sp);
                  res["strong_profile"] = true;
                } catch (const Error& e) {
                  res["strong_profile"] = false;
                  res["strong_profile_error"] = e.what();
                }
                return res;
              }};
  });

  // profile
  WaveArgs pw;
  double pr_dx = 0.005;
  auto* pr = app.add_subcommand("profile", "traveling-wave profile (CSV x,u,z plus JSON sidecar)");
  add_wave_opts(pr, pw);
  pr->add_option("--dx", pr_dx, "output grid spacing");
  pr->callback([&] {
    json prm = wave_params(pw);
    prm["dx"] = pr_dx;
    runner = {"profile", prm, [&](const Context& c, OutputDir& out) {
                LPolicy pol;
                pol.dx = pr_dx;
                auto p = compute_profile(c.cfg, select_wave(c.cfg, pw), pol);
                std::vector<std::vector<double>> rows;
                for (std::size_t i = 0; i < p.x.size(); ++i) rows.push_back({p.x[i], p.u[i], p.z[i]});
                out.write_csv("profile.csv", {"x", "u", "z"}, rows);
                json side = profile_sidecar(p);
                side["residual"] = profile_residual(p);
                side["endstate_gap"] = endstate_gap(p);
                out.write_json("profile.json", side);
                return side;
              }};
  });

  // melnikov
  double me_uplus = 0.2;
  std::optional<double> me_s;
  double me_smin = 0, me_smax = 0;
  int me_n = 5;
  auto* me = app.add_subcommand("melnikov", "separation d(s) and its s-derivative");
  me->add_option("--uplus", me_uplus);
  me->add_option("--s", me_s, "single speed");
  me->add_option("--smin", me_smin, "scan start (default s_*)");
  me->add_option("--smax", me_smax, "scan end (default 1.2 s_*)");
  me->add_option("--n", me_n);
  me->callback([&] {
    json prm{{"uplus", me_uplus}, {"n", me_n}, {"smin", me_smin}, {"smax", me_smax}};
    if (me_s) prm["s"] = *me_s;
    runner = {"melnikov", prm, [&](const Context& c, OutputDir& out) {
                std::vector<double> ss;
                double sd = cj_speeds(c.cfg, me_uplus).first;
                if (me_s) ss = {*me_s};
                else ss = linspace(me_smin > 0 ? me_smin : sd * (1 + 1e-9), me_smax > 0 ? me_smax : 1.2 * sd, me_n);
                std::vector<MelnikovResult> res(ss.size());
                std::vector<bool> trapped(ss.size());
                parallel_for(ss.size(), c.g.jobs, [&](std::size_t i) {
                  res[i] = melnikov_full(c.cfg, me_uplus, ss[i]);
                  trapped[i] = shoot_weak_manifold(c.cfg, me_uplus, ss[i]).trapped;
                });
                std::vector<std::vector<double>> rows;
                json arr = json::array();
                for (std::size_t i = 0; i < ss.size(); ++i) {
                  rows.push_back({ss[i], res[i].d, res[i].dd_ds, res[i].dd_ds_fd, trapped[i] ? 1.0 : 0.0});
                  json r{{"s", ss[i]}, {"d", res[i].d}, {"dd_ds", res[i].dd_ds}, {"dd_ds_fd", res[i].dd_ds_fd},
                         {"trapped", static_cast<bool>(trapped[i])}};
                  if (res[i].partials)
                    r["partials"] = {{"dd_ds", res[i].partials->dd_ds}, {"dd_duplus", res[i].partials->dd_duplus},
                                     {"dd_dk", res[i].partials->dd_dk}, {"dd_dq", res[i].partials->dd_dq}};
                  arr.push_back(r);
                }
                out.write_csv("melnikov.csv", {"s", "d", "dd_ds", "dd_ds_fd", "trapped"}, rows);
                return json{{"uplus", me_uplus}, {"s_detonation", sd}, {"rows", arr}};
              }};
  });

  // weakspeed
  double ws_uplus = 0.2;
  std::optional<double> ws_lo, ws_hi;
  auto* ws = app.add_subcommand("weakspeed", "weak-detonation speed: root of d above s_*");
  ws->add_option("--uplus", ws_uplus);
  ws->add_option("--slo", ws_lo);
  ws->add_option("--shi", ws_hi);
  ws->callback([&] {
    json prm{{"uplus", ws_uplus}};
    if (ws_lo) prm["slo"] = *ws_lo;
    if (ws_hi) prm["shi"] = *ws_hi;
    runner = {"weakspeed", prm, [&](const Context& c, OutputDir&) {
                if (ws_lo.has_value() != ws_hi.has_value())
                  fail(ErrorKind::Validation, "--slo and --shi go together");
                auto r = ws_lo ? find_weak_detonation_speed(c.cfg, ws_uplus, *ws_lo, *ws_hi)
                               : find_weak_detonation_speed(c.cfg, ws_uplus);
                return json{{"uplus", ws_uplus}, {"found", r.found}, {"case", r.found ? "ii" : "i"},
                            {"s_hat", r.s_hat}, {"d", r.d}, {"s_detonation", cj_speeds(c.cfg, ws_uplus).first}};
              }};
  });

  // evans
  WaveArgs ew;
  std::string ev_mode = "grid";
  double ev_re0 = 0, ev_re1 = 2, ev_im0 = 0, ev_im1 = 2, ev_r = 1e-3, ev_R = 50;
  int ev_nre = 11, ev_nim = 11, ev_n = 64;
  auto* ev = app.add_subcommand("evans", "Evans function scans over a lambda grid or contour");
  add_wave_opts(ev, ew);
  ev->add_option("--mode", ev_mode)->check(CLI::IsMember({"grid", "contour"}));
  ev->add_option("--re-min", ev_re0);
  ev->add_option("--re-max", ev_re1);
  ev->add_option("--im-min", ev_im0);
  ev->add_option("--im-max", ev_im1);
  ev->add_option("--nre", ev_nre);
  ev->add_option("--nim", ev_nim);
  ev->add_option("--r", ev_r, "contour inner radius");
  ev->add_option("--R", ev_R, "contour outer radius");
  ev->add_option("--n", ev_n, "contour samples per arc");
  ev->callback([&] {
    json prm = wave_params(ew);
    prm.update({{"mode", ev_mode}, {"re", {ev_re0, ev_re1, ev_nre}}, {"im", {ev_im0, ev_im1, ev_nim}},
                {"r", ev_r}, {"R", ev_R}, {"n", ev_n}});
    runner = {"evans", prm, [&](const Context& c, OutputDir& out) {
                auto p = compute_profile(c.cfg, select_wave(c.cfg, ew));
                auto sys = EvansSystem::from_profile(p);
                std::vector<std::pair<cplx, cplx>> pts;
                if (ev_mode == "grid") {
                  for (double re : linspace(ev_re0, ev_re1, ev_nre))
                    for (double im : linspace(ev_im0, ev_im1, ev_nim)) pts.push_back({cplx(re, im), 0.0});
                  parallel_for(pts.size(), c.g.jobs,
                               [&](std::size_t i) { pts[i].second = evans_eval(sys, pts[i].first).D; });
                } else {
                  pts = winding_number(sys, ev_r, ev_R, ev_n, c.g.jobs).samples;
                }
                std::vector<std::vector<double>> rows;
                for (auto [l, d] : pts) rows.push_back({l.real(), l.imag(), d.real(), d.imag()});
                out.write_csv("evans.csv", {"re_lambda", "im_lambda", "re_D", "im_D"}, rows);
                return json{{"wave", to_json(p.wave)}, {"n_points", pts.size()}, {"csv", "evans.csv"}};
              }};
  });

  // index
  WaveArgs iw;
  double ix_r = 1e-3, ix_R = 50;
  auto* ix = app.add_subcommand("index", "stability index report");
  add_wave_opts(ix, iw);
  ix->add_option("--r", ix_r);
  ix->add_option("--R", ix_R);
  ix->callback([&] {
    json prm = wave_params(iw);
    prm.update({{"r", ix_r}, {"R", ix_R}});
    runner = {"index", prm, [&](const Context& c, OutputDir& out) {
                auto p = compute_profile(c.cfg, select_wave(c.cfg, iw));
                auto rep = stability_index(p, c.g.jobs, ix_r, ix_R);
                json j = to_json(rep);
                j["wave"] = to_json(p.wave);
                out.write_json("stability_report.json", j);
                return j;
              }};
  });

  // winding
  WaveArgs ww;
  double wi_r = 1e-3, wi_R = 50;
  int wi_n = 64;
  auto* wi = app.add_subcommand("winding", "unstable-eigenvalue count by the argument principle");
  add_wave_opts(wi, ww);
  wi->add_option("--r", wi_r);
  wi->add_option("--R", wi_R);
  wi->add_option("--n", wi_n);
  wi->callback([&] {
    json prm = wave_params(ww);
    prm.update({{"r", wi_r}, {"R", wi_R}, {"n", wi_n}});
    runner = {"winding", prm, [&](const Context& c, OutputDir& out) {
                auto p = compute_profile(c.cfg, select_wave(c.cfg, ww));
                auto w = winding_number(EvansSystem::from_profile(p), wi_r, wi_R, wi_n, c.g.jobs);
                std::vector<std::vector<double>> rows;
                for (auto [l, d] : w.samples) rows.push_back({l.real(), l.imag(), d.real(), d.imag()});
                out.write_csv("contour.csv", {"re_lambda", "im_lambda", "re_D", "im_D"}, rows);
                return json{{"wave", to_json(p.wave)}, {"count", w.count}, {"min_abs", w.min_abs},
                            {"median_abs", w.median_abs}, {"n_evals", w.n_evals}};
              }};
  });

  // riemann
  double rl_u = 1.8, rl_z = 0, rr_u = 0.2, rr_z = 1, ri_xmin = -1, ri_xmax = 3;
  int ri_n = 401;
  auto* ri = app.add_subcommand("riemann", "Riemann solution from the wave catalog");
  ri->add_option("--uL", rl_u);
  ri->add_option("--zL", rl_z);
  ri->add_option("--uR", rr_u);
  ri->add_option("--zR", rr_z);
  ri->add_option("--xi-min", ri_xmin);
  ri->add_option("--xi-max", ri_xmax);
  ri->add_option("--n", ri_n);
  ri->callback([&] {
    runner = {"riemann",
              {{"uL", rl_u}, {"zL", rl_z}, {"uR", rr_u}, {"zR", rr_z}, {"xi", {ri_xmin, ri_xmax, ri_n}}},
              [&](const Context& c, OutputDir& out) {
                RiemannState L{rl_u, rl_z}, R{rr_u, rr_z};
                auto sol = solve_riemann(c.cfg, L, R);
                json j = to_json(sol);
                auto bad = check_solution(c.cfg, sol, L, R);
                j["invariant_violations"] = bad;
                std::vector<std::vector<double>> rows;
                for (double xi : linspace(ri_xmin, ri_xmax, ri_n)) {
                  auto st = sample_solution(c.cfg, sol, L, xi);
                  rows.push_back({xi, st.u, st.z});
                }
                out.write_csv("riemann.csv", {"xi", "u", "z"}, rows);
                out.write_json("riemann.json", j);
                return j;
              }};
  });

  // cjshift
  double cs_uR = 0.2, cs_kmin = 1e-3, cs_kmax = 5;
  int cs_n = 7;
  auto* cs = app.add_subcommand("cjshift", "case (i)/(ii) across k and the threshold k_0");
  cs->add_option("--uR", cs_uR);
  cs->add_option("--kmin", cs_kmin);
  cs->add_option("--kmax", cs_kmax);
  cs->add_option("--n", cs_n);
  cs->callback([&] {
    runner = {"cjshift", {{"uR", cs_uR}, {"kmin", cs_kmin}, {"kmax", cs_kmax}, {"n", cs_n}},
              [&](const Context& c, OutputDir& out) {
                if (!(cs_kmin > 0 && cs_kmax >= cs_kmin)) fail(ErrorKind::Validation, "need 0 < kmin <= kmax");
                std::vector<double> ks;
                for (double t : linspace(std::log(cs_kmin), std::log(cs_kmax), cs_n)) ks.push_back(std::exp(t));
                auto rep = cj_shift_report(c.cfg, cs_uR, ks, c.g.jobs);
                std::vector<std::vector<double>> rows;
                for (const auto& r : rep.rows) rows.push_back({r.k, r.case_ii ? 2.0 : 1.0, r.speed, r.d_at_sstar});
                out.write_csv("cjshift.csv", {"k", "case", "speed", "d_at_sstar"}, rows);
                return to_json(rep);
              }};
  });

  // simulate
  std::string sm_mode = "riemann";
  double sm_T = 200, sm_amp = 0.01, sm_dx = 0.05, sm_relax = 150;
  int sm_cells = 4000, sm_samples = 11;
  double sl_u = 1.8, sl_z = 0, sr_u = 0.2, sr_z = 1;
  WaveArgs sw;
  auto* sm = app.add_subcommand("simulate", "finite-difference runs: Riemann data or a perturbed profile");
  sm->add_option("--mode", sm_mode)->check(CLI::IsMember({"riemann", "decay"}));
  sm->add_option("--T", sm_T);
  sm->add_option("--cells", sm_cells, "cells (riemann mode)");
  sm->add_option("--uL", sl_u);
  sm->add_option("--zL", sl_z);
  sm->add_option("--uR", sr_u);
  sm->add_option("--zR", sr_z);
  add_wave_opts(sm, sw);
  sm->add_option("--amplitude", sm_amp, "perturbation amplitude (decay mode)");
  sm->add_option("--dx", sm_dx, "cell size (decay mode)");
  sm->add_option("--relax", sm_relax, "relaxation time before perturbing (decay mode)");
  sm->add_option("--samples", sm_samples, "snapshot count (decay mode)");
  sm->callback([&] {
    json prm{{"mode", sm_mode}, {"T", sm_T}, {"seeds", json::array()},
             {"dt_policy", "0.45 min(dx / max(|f'(u)| + |s_frame|), dx^2 / 2)"}};
    if (sm_mode == "riemann") prm.update({{"cells", sm_cells}, {"uL", sl_u}, {"zL", sl_z}, {"uR", sr_u}, {"zR", sr_z}});
    else prm.update({{"wave", wave_params(sw)}, {"amplitude", sm_amp}, {"dx", sm_dx}, {"relax", sm_relax},
                     {"samples", sm_samples}});
    runner = {"simulate", prm, [&](const Context& c, OutputDir& out) {
                std::vector<std::vector<double>> snaps;
                auto hook = [&](const SimState& st, const SimGrid& gr) {
                  for (int i = 0; i < gr.n_cells; ++i) snaps.push_back({st.t, gr.center(i), st.u[i], st.z[i]});
                };
                json j;
                if (sm_mode == "riemann") {
                  auto rep = riemann_asymptotic_test(c.cfg, {sl_u, sl_z}, {sr_u, sr_z}, sm_T, sm_cells, hook);
                  j = to_json(rep);
                  j.erase("wall_seconds");
                } else {
                  auto p = compute_profile(c.cfg, select_wave(c.cfg, sw));
                  DecayOptions opt;
                  opt.dx = sm_dx;
                  opt.relax_time = sm_relax;
                  opt.n_samples = sm_samples;
                  j = to_json(perturbation_decay_test(c.cfg, p, sm_amp, sm_T, opt, hook));
                }
                out.write_csv("snapshots.csv", {"t", "x", "u", "z"}, snaps);
                out.write_json("simulation.json", j);
                return j;
              }};
  });

  // unknown subcommand: the first bare word must name one
  if (argc > 1) {
    std::string first;
    for (int i = 1; i < argc; ++i) {
      std::string a = argv[i];
      if (a.rfind("-", 0) == 0) {
        if (a.find('=') == std::string::npos &&
            (a == "--config" || a == "--out" || a == "--jobs" || a == "--q" || a == "--k"))
          ++i;
        continue;
      }
      first = a;
      break;
    }
    if (!first.empty()) {
      bool known = false;
      for (const auto* sc : app.get_subcommands([](CLI::App*) { return true; }))
        if (sc->get_name() == first) known = true;
      if (!known) return emit_error(ErrorKind::UnknownSubcommand, "unknown subcommand '" + first + "'");
    }
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::RequiredError& e) {
    if (app.get_subcommands().empty())
      return emit_error(ErrorKind::UnknownSubcommand, "a subcommand is required");
    return emit_error(ErrorKind::Validation, e.what());
  } catch (const CLI::ParseError& e) {
    return emit_error(ErrorKind::Validation, e.what());
  }

  auto t0 = std::chrono::steady_clock::now();
  try {
    Context ctx = load(g);
    OutputDir out(g.out);
    json result = runner.run(ctx, out);
    out.write_json("result.json", result);
    RunManifest m;
    m.config_path = g.config_path;
    m.config_sha256 = ctx.config_sha;
    m.config = to_json(ctx.cfg);
    m.subcommand = runner.name;
    m.parameters = runner.params;
    m.parameters["jobs"] = g.jobs;
    m.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    write_manifest(out, m);
    std::cout << dump_json(result);
    return 0;
  } catch (const Error& e) {
    return emit_error(e.kind(), e.what());
  } catch (const std::exception& e) {
    return emit_error(ErrorKind::Solve, e.what());
  }
}

}
