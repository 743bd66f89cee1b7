#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <functional>

#include "detwave/errors.hpp"
#include "detwave/profiles.hpp"

using namespace detwave;

namespace {

ModelConfig p0k(double k)
{
  auto c = p0_config();
  c.k = k;
  return validate_config(c);
}

double sstar(double up, double q) { return (up + q) + std::sqrt((up + q) * (up + q) - up * up); }

// fixed-step RK4 on the graph z(u) of the weak saddle's unstable manifold, Burgers + bump
double rk4_oracle(double up, double s, double k, int n = 40000)
{
  const double ui = 0.5, us = 2.5, q = 0.5;
  auto f = [](double u) { return 0.5 * u * u; };
  auto phi = [&](double u) {
    if (u <= ui || u >= us) return 0.0;
    double g = (u - ui) * (us - u);
    return g * g;
  };
  double um = s - std::sqrt((s - up) * (s - up) - 2 * s * q);
  double am = um - s, mu = k * phi(um) / s;
  double vu = -s * q, vz = mu - am, nv = std::hypot(vu, vz);
  double u = um + 1e-7 * vu / nv, z = 1e-7 * vz / nv;
  double zstar = 1.0 + (f(ui) - f(up) - s * (ui - up)) / (s * q);
  auto F = [&](double uu, double zz) { return f(uu) - f(um) - s * q * zz - s * (uu - um); };
  auto rhs = [&](double uu, double zz) { return (k / s) * phi(uu) * zz / F(uu, zz); };
  double h = (ui - u) / n;
  for (int i = 0; i < n; ++i) {
    if (F(u, z) >= 0) return zstar - 1.0;
    double k1 = rhs(u, z);
    double k2 = rhs(u + h / 2, z + h / 2 * k1);
    double k3 = rhs(u + h / 2, z + h / 2 * k2);
    double k4 = rhs(u + h, z + h * k3);
    z += h / 6 * (k1 + 2 * k2 + 2 * k3 + k4);
    u += h;
  }
  if (z - zstar <= 1e-7) return zstar - 1.0;
  return z - 1.0;
}

}

// reference values from the scipy DOP853 graph-shooting oracle (rtol 1e-13)
TEST_CASE("separation function against frozen oracle values")
{
  auto c5 = p0k(5);
  struct Row { double s, d; };
  const Row rows[] = {{1.42, 0.26667880180841275},
                      {1.46, 0.03147511081599097},
                      {1.5, -0.11733780371184155},
                      {1.55, -0.24280999892954558},
                      {1.6, -0.3294533522285421}};
  for (const auto& r : rows) {
    CAPTURE(r.s);
    CHECK(std::abs(melnikov_separation(c5, 0.2, r.s) - r.d) <= 1e-8);
  }
  const double ss = sstar(0.2, 0.5) * (1 + 1e-9);
  const std::pair<double, double> krows[] = {{1, -0.424669323369681},
                                             {2, -0.018616716732146044},
                                             {3, 0.4069620094365387},
                                             {5, 1.2658907606268595}};
  for (const auto& [k, d] : krows) {
    CAPTURE(k);
    CHECK(std::abs(melnikov_separation(p0k(k), 0.2, ss) - d) <= 1e-7);
  }
}

TEST_CASE("separation function against in-test RK4 oracle")
{
  for (double s : {1.44, 1.5, 1.58}) {
    CAPTURE(s);
    CHECK(std::abs(melnikov_separation(p0k(5), 0.2, s) - rk4_oracle(0.2, s, 5)) <= 1e-8);
  }
  CHECK(std::abs(melnikov_separation(p0k(2.5), 0.2, 1.45) - rk4_oracle(0.2, 1.45, 2.5)) <= 1e-8);
}

TEST_CASE("trapped orbits")
{
  // (f(u_i) - f(u+) - s (u_i - u+)) / (s q)
  auto r = shoot_weak_manifold(p0k(1), 0.2, 1.5);
  CHECK(r.trapped);
  CHECK(r.d == doctest::Approx(-0.46).epsilon(1e-12));
  auto small = shoot_weak_manifold(p0k(1e-3), 0.2, 1.5);
  CHECK(small.d < 0);
  CHECK(small.trapped);
  CHECK(melnikov_separation(p0k(1), 0.2, 1.5) >= melnikov_separation(p0k(1), 0.2, 1.6));
}

TEST_CASE("weak manifold orbit samples")
{
  auto orb = weak_manifold_orbit(p0k(5), 0.2, 1.46, 100);
  REQUIRE(orb.size() >= 2);
  CHECK(orb.back()[0] == doctest::Approx(0.5).epsilon(1e-9));
  CHECK(orb.back()[1] - 1.0 == doctest::Approx(0.03147511081599097).epsilon(1e-6));
  for (std::size_t j = 1; j < orb.size(); ++j) {
    CHECK(orb[j][0] < orb[j - 1][0]);
    CHECK(orb[j][1] >= orb[j - 1][1]);
  }
}

TEST_CASE("monotonicity grid in s and k")
{
  const double S[] = {1.4, 1.45, 1.5, 1.55, 1.6};
  const double K[] = {0.5, 1, 2, 3, 5};
  double d[5][5];
  for (int i = 0; i < 5; ++i)
    for (int j = 0; j < 5; ++j) d[i][j] = melnikov_separation(p0k(K[j]), 0.2, S[i]);
  for (int i = 0; i < 5; ++i)
    for (int j = 0; j < 5; ++j) {
      CAPTURE(S[i]);
      CAPTURE(K[j]);
      if (i > 0) CHECK(d[i][j] <= d[i - 1][j] + 1e-12);
      if (j > 0) CHECK(d[i][j] >= d[i][j - 1] - 1e-12);
    }
  // u+ and q at fixed s, k
  auto c = p0k(5);
  CHECK(melnikov_separation(c, 0.25, 1.5) >= melnikov_separation(c, 0.2, 1.5));
  auto cq = c;
  cq.q = 0.45;
  double dq = melnikov_separation(cq, 0.2, 1.5), d0 = melnikov_separation(c, 0.2, 1.5);
  CHECK(d0 >= dq);
}

TEST_CASE("threshold speed and derivative")
{
  auto c5 = p0k(5);
  auto ws = find_weak_detonation_speed(c5, 0.2);
  REQUIRE(ws.found);
  CHECK(std::abs(ws.s_hat - 1.4672234716278902) <= 1e-9);
  CHECK(std::abs(ws.d) <= 1e-8);
  CHECK(std::abs(melnikov_separation(c5, 0.2, ws.s_hat)) <= 1e-8);

  auto m = melnikov_full(c5, 0.2, ws.s_hat);
  CHECK(m.dd_ds < 0);
  CHECK(std::abs(m.dd_ds - m.dd_ds_fd) <= 1e-3 * std::max(std::abs(m.dd_ds), 1e-8));
  // oracle centered difference with h = 1e-4 s
  CHECK(std::abs(m.dd_ds - (-4.191085915910649)) <= 1e-3 * 4.191085915910649);
  REQUIRE(m.partials.has_value());

  auto p = compute_profile(c5, classify_wave(c5, rh_states(c5, 0.2, ws.s_hat).weak, 0.2, ws.s_hat));
  CHECK(melnikov_derivative_s(p) == doctest::Approx(m.dd_ds).epsilon(1e-10));

  // partials against centered differences of the oracle
  double h = 1e-5;
  auto cq1 = c5, cq2 = c5;
  cq1.q += h;
  cq2.q -= h;
  double fdk = (rk4_oracle(0.2, ws.s_hat, 5 + h) - rk4_oracle(0.2, ws.s_hat, 5 - h)) / (2 * h);
  double fdu = (rk4_oracle(0.2 + h, ws.s_hat, 5) - rk4_oracle(0.2 - h, ws.s_hat, 5)) / (2 * h);
  CHECK(m.partials->dd_dk == doctest::Approx(fdk).epsilon(1e-3));
  CHECK(m.partials->dd_duplus == doctest::Approx(fdu).epsilon(1e-3));
  double fdq = (melnikov_separation(cq1, 0.2, ws.s_hat) - melnikov_separation(cq2, 0.2, ws.s_hat)) / (2 * h);
  CHECK(m.partials->dd_dq == doctest::Approx(fdq).epsilon(1e-3));
  CHECK(m.partials->dd_dk > 0);
  CHECK(m.partials->dd_duplus > 0);

  // off-root speed: quadrature and finite difference still agree
  auto off = melnikov_full(c5, 0.2, 1.55);
  CHECK(off.d == doctest::Approx(-0.24280999892954558).epsilon(1e-7));
  CHECK(std::abs(off.dd_ds - off.dd_ds_fd) <= 1e-3 * std::abs(off.dd_ds));
}

TEST_CASE("case (i) for slow reaction")
{
  auto ws = find_weak_detonation_speed(p0k(1e-3), 0.2);
  CHECK_FALSE(ws.found);
  auto ws1 = find_weak_detonation_speed(p0k(1), 0.2);
  CHECK_FALSE(ws1.found);
}

TEST_CASE("degenerate profile rejected")
{
  auto cfg = p0k(1);
  double s = (0.5 * 1.8 * 1.8 - 0.5 * 2.5 * 2.5) / (1.8 - 2.5 - 0.5);
  auto p = compute_profile(cfg, classify_wave(cfg, 1.8, 2.5, s));
  try {
    melnikov_derivative_s(p);
    FAIL("accepted a degenerate profile");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::DegenerateProfile);
  }
}
