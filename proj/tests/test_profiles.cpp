#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>

#include "detwave/errors.hpp"
#include "detwave/profiles.hpp"
#include "detwave/riemann.hpp"

using namespace detwave;

namespace {

ModelConfig p0() { return validate_config(p0_config()); }

ModelConfig p0k(double k)
{
  auto c = p0_config();
  c.k = k;
  return validate_config(c);
}

// Burgers RH quadratic u^2/2 - s u + (s u+ - u+^2/2 + s q) = 0
std::pair<double, double> rh_oracle(double up, double s, double q)
{
  double disc = (s - up) * (s - up) - 2 * s * q;
  return {s + std::sqrt(disc), s - std::sqrt(disc)};
}

// (s - u+)^2 = 2 s q
std::pair<double, double> cj_oracle(double up, double q)
{
  double b = up + q;
  double r = std::sqrt(b * b - up * up);
  return {b + r, b - r};
}

ErrorKind kind_of(const std::function<void()>& fn)
{
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("expected an error");
  return ErrorKind::Validation;
}

double slowest(const std::vector<double>& r)
{
  double best = r.front();
  for (double v : r)
    if (std::abs(v) < std::abs(best)) best = v;
  return best;
}

void check_profile_invariants(const Profile& p)
{
  double scale = std::max(1.0, std::abs(p.wave.u_minus));
  CHECK(profile_residual(p) <= 1e-6 * scale);
  CHECK(endstate_gap(p) <= 1e-8);
  for (std::size_t j = 0; j < p.z.size(); ++j) {
    CHECK(p.z[j] >= 0.0);
    CHECK(p.z[j] <= 1.0);
  }
  bool zmono = true, umono = true;
  for (std::size_t j = 1; j < p.z.size(); ++j) {
    zmono = zmono && p.z[j] >= p.z[j - 1];
    umono = umono && p.u[j] < p.u[j - 1];
  }
  CHECK(zmono);
  if (p.wave.cls == WaveClass::WeakDetonation) CHECK(umono);
  auto expect = expected_tail_rates(p);
  CHECK(std::abs(p.tail_decay_rates[0] - slowest(expect[0])) <= 0.05 * std::abs(slowest(expect[0])));
  CHECK(std::abs(p.tail_decay_rates[1] - slowest(expect[1])) <= 0.05 * std::abs(slowest(expect[1])));
}

}

TEST_CASE("RH examples")
{
  auto cfg = p0();
  auto r = rh_states(cfg, 0.2, 1.5);
  auto o = rh_oracle(0.2, 1.5, 0.5);
  CHECK(std::abs(r.strong - o.first) <= 1e-10);
  CHECK(std::abs(r.weak - o.second) <= 1e-10);
  CHECK(std::abs(r.strong - 1.9358898944) <= 1e-10);
  CHECK(std::abs(r.weak - 1.0641101056) <= 1e-10);

  double ss = cj_oracle(0.2, 0.5).first;
  auto t = rh_states(cfg, 0.2, ss);
  CHECK(std::abs(t.strong - 1.3708203932) <= 1e-7);
  CHECK(std::abs(t.weak - 1.3708203932) <= 1e-7);

  CHECK(kind_of([&] { rh_states(cfg, 0.2, 1.0); }) == ErrorKind::NoBranch);
}

TEST_CASE("CJ speeds")
{
  auto cfg = p0();
  auto c = cj_speeds(cfg, 0.2);
  auto o = cj_oracle(0.2, 0.5);
  CHECK(std::abs(c.first - o.first) <= 1e-10);
  CHECK(std::abs(c.second - o.second) <= 1e-10);
  CHECK(std::abs(c.first - 1.3708203932) <= 1e-10);
  CHECK(std::abs(c.second - 0.0291796068) <= 1e-10);
  CHECK(c.first > 0.2);
  CHECK(c.second < 0.2);
  // tangency: double root with a_- = s
  CHECK(std::abs(cj_state(cfg, c.first) - c.first) <= 1e-10);

  auto d = cj_speeds(cfg, 2.5);
  CHECK(std::abs(d.second - (6 - std::sqrt(11.0)) / 2) <= 1e-10);
  CHECK(std::abs(d.second - 1.3416876049) <= 1e-10);
}

TEST_CASE("random RH roots and classification")
{
  auto cfg = p0();
  std::mt19937 rng(2024);
  std::uniform_real_distribution<double> Uu(0.05, 0.5), Us(0.0, 1.0);
  int n = 0;
  while (n < 100) {
    double up = Uu(rng);
    double ss = cj_oracle(up, 0.5).first;
    double s = ss + 1e-3 + 0.8 * Us(rng);
    auto r = rh_states(cfg, up, s);
    auto o = rh_oracle(up, s, 0.5);
    CHECK(r.strong >= r.weak);
    CHECK(std::abs(r.strong - o.first) <= 1e-10 * std::max(1.0, o.first));
    CHECK(std::abs(r.weak - o.second) <= 1e-10 * std::max(1.0, o.second));
    for (double um : {r.strong, r.weak}) {
      double res = 0.5 * up * up - 0.5 * um * um - s * (up - um + 0.5);
      CHECK(std::abs(res) <= 1e-12 * std::max(1.0, 0.5 * um * um));
      if (um > 0.5 && um < 2.5) {
        auto w = classify_wave(cfg, um, up, s);
        if (um > s) CHECK(w.cls == WaveClass::StrongDetonation);
        else CHECK(w.cls == WaveClass::WeakDetonation);
      }
    }
    ++n;
  }
}

TEST_CASE("classification examples")
{
  auto cfg = p0();
  CHECK(classify_wave(cfg, 1.9358898944, 0.2, 1.5).cls == WaveClass::StrongDetonation);
  CHECK(classify_wave(cfg, 1.0641101056, 0.2, 1.5).cls == WaveClass::WeakDetonation);
  double s = (0.5 * 1.8 * 1.8 - 0.5 * 2.5 * 2.5) / (1.8 - 2.5 - 0.5);
  CHECK(s == doctest::Approx(1.2541666667).epsilon(1e-10));
  CHECK(classify_wave(cfg, 1.8, 2.5, s).cls == WaveClass::WeakDeflagration);
  CHECK(kind_of([&] { classify_wave(cfg, 1.8, 0.2, 1.0); }) == ErrorKind::NotAWave);
  // right state inside the ignition band
  auto r = rh_states(cfg, 1.0, 3.0);
  CHECK(kind_of([&] { classify_wave(cfg, r.strong, 1.0, 3.0); }) == ErrorKind::IgnitionPlacement);
}

TEST_CASE("rest point analysis")
{
  auto cfg = p0();
  auto a = rest_point_analysis(cfg, 0.2, 1.0, 1.5);
  CHECK(a.rest_type == RestType::SaddleAttractor);
  std::array<double, 2> ev = a.eigenvalues;
  std::sort(ev.begin(), ev.end());
  CHECK(ev[0] == doctest::Approx(-1.3).epsilon(1e-12));
  CHECK(std::abs(ev[1]) <= 1e-14);
  REQUIRE(a.center_direction.has_value());
  CHECK((*a.center_direction)[0] == doctest::Approx(0.75).epsilon(1e-12));
  CHECK((*a.center_direction)[1] == doctest::Approx(-1.3).epsilon(1e-12));

  auto o = rh_oracle(0.2, 1.5, 0.5);
  auto b = rest_point_analysis(cfg, o.first, 0.0, 1.5);
  CHECK(b.rest_type == RestType::Repellor);
  CHECK(b.eigenvalues[0] > 0);
  CHECK(b.eigenvalues[1] > 0);
  auto c = rest_point_analysis(cfg, o.second, 0.0, 1.5);
  CHECK(c.rest_type == RestType::Saddle);
  CHECK(std::min(c.eigenvalues[0], c.eigenvalues[1]) == doctest::Approx(o.second - 1.5).epsilon(1e-10));
  CHECK(kind_of([&] { rest_point_analysis(cfg, 1.0, 0.5, 1.5); }) == ErrorKind::NotRestPoint);
}

TEST_CASE("strong detonation profile")
{
  auto cfg = p0();
  auto w = classify_wave(cfg, rh_oracle(0.2, 1.5, 0.5).first, 0.2, 1.5);
  auto p = compute_profile(cfg, w);
  CHECK_FALSE(p.degenerate);
  check_profile_invariants(p);
  CHECK(w.alpha_minus == doctest::Approx(0.4358898944).epsilon(1e-9));
  CHECK(w.alpha_plus == doctest::Approx(-1.3).epsilon(1e-12));
  // reaction-zone maximum of u above u_- behind the lead rise
  double umax = *std::max_element(p.u.begin(), p.u.end());
  CHECK(umax > w.u_minus);
  CHECK(umax < cfg.ignition.u_sup);
  // u crosses the midpoint at the origin
  auto mid = p.at(0.0);
  CHECK(std::abs(mid.u - 0.5 * (w.u_minus + w.u_plus)) <= 1e-6);

  auto p2 = compute_profile(cfg, w);
  double dev = 0;
  for (std::size_t j = 0; j < std::min(p.u.size(), p2.u.size()); ++j) dev = std::max(dev, std::abs(p.u[j] - p2.u[j]));
  CHECK(dev <= 1e-8);
}

TEST_CASE("weak detonation profile at the threshold speed")
{
  auto cfg = p0k(5);
  auto ws = find_weak_detonation_speed(cfg, 0.2);
  REQUIRE(ws.found);
  auto w = classify_wave(cfg, rh_states(cfg, 0.2, ws.s_hat).weak, 0.2, ws.s_hat);
  CHECK(w.cls == WaveClass::WeakDetonation);
  auto p = compute_profile(cfg, w);
  check_profile_invariants(p);
  CHECK(std::abs(p.z.back() - 1.0) <= 1e-6);
  CHECK(std::abs(p.zhat - 1.0) <= 1e-8);
  // orbit stays in the region F <= 0
  TWField tw{&p.cfg, w.u_plus, 1.0, w.s, true};
  double fmax = -1;
  for (std::size_t j = 0; j < p.u.size(); ++j) fmax = std::max(fmax, tw.F(p.u[j], p.z[j]));
  CHECK(fmax <= 1e-10);
}

TEST_CASE("deflagration and excluded waves")
{
  auto cfg = p0();
  double s = (0.5 * 1.8 * 1.8 - 0.5 * 2.5 * 2.5) / (1.8 - 2.5 - 0.5);
  auto w = classify_wave(cfg, 1.8, 2.5, s);
  auto p = compute_profile(cfg, w);
  CHECK(p.degenerate);
  bool inc = true;
  for (std::size_t j = 1; j < p.u.size(); ++j) inc = inc && p.u[j] > p.u[j - 1];
  CHECK(inc);

  WaveSpec sd = w;
  sd.cls = WaveClass::StrongDeflagration;
  CHECK(kind_of([&] { compute_profile(cfg, sd); }) == ErrorKind::NoConnection);
  WaveSpec cj = classify_wave(cfg, 1.3708203932499368, 0.2, 1.3708203932499368);
  CHECK(cj.cls == WaveClass::CJDetonation);
  CHECK(kind_of([&] { compute_profile(cfg, cj); }) == ErrorKind::NoConnection);
}

TEST_CASE("inert shock profile")
{
  auto cfg = p0();
  auto w = gas_dynamical_wave(cfg, 0.45, 0.2, 1.0).spec;
  CHECK(w.cls == WaveClass::InertShock);
  CHECK(w.s == doctest::Approx(0.325).epsilon(1e-14));
  auto p = compute_profile(cfg, w);
  CHECK(profile_residual(p) <= 1e-6);
  CHECK(endstate_gap(p) <= 1e-8);
}

TEST_CASE("CJ diagram")
{
  auto cfg = p0();
  double ss = cj_oracle(0.2, 0.5).first;
  std::vector<double> grid{1.0, 1.2, ss, 1.4, 1.5, 1.7, 2.0};
  auto rows = cj_diagram(cfg, 0.2, grid, 2);
  CHECK_FALSE(rows[0].strong.has_value());
  CHECK_FALSE(rows[1].strong.has_value());
  REQUIRE(rows[2].strong.has_value());
  CHECK(std::abs(*rows[2].strong - *rows[2].weak) <= 1e-6);
  for (std::size_t i = 3; i < rows.size(); ++i) {
    CHECK(*rows[i].strong >= *rows[i - 1].strong);
    CHECK(*rows[i].weak <= *rows[i - 1].weak);
    auto o = rh_oracle(0.2, rows[i].s, 0.5);
    CHECK(std::abs(*rows[i].strong - o.first) <= 1e-10);
  }
}
