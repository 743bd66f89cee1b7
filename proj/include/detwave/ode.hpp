#pragma once
#include <array>
#include <cmath>
#include <functional>
#include <vector>
#include <boost/numeric/odeint.hpp>
#include <boost/math/tools/roots.hpp>

#include "detwave/errors.hpp"

namespace detwave::ode {

namespace odeint = boost::numeric::odeint;

struct Options {
  double rtol = 1e-10;
  double atol = 1e-12;
  double h0 = 1e-3;
  long max_steps = 5000000;
};

// event fires when g changes from positive to nonpositive; locate=false skips root refinement
template <std::size_t N>
struct Event {
  std::function<double(double, const std::array<double, N>&)> g;
  bool locate = true;
};

template <std::size_t N>
struct Hit {
  int index = -1;          // -1 when x_end reached
  double x = 0;
  std::array<double, N> y{};
};

// integrate y' = sys(y, dydx, x) from x0 toward x_end (either direction) until an event fires
template <std::size_t N, class Sys, class Obs>
Hit<N> integrate_until(Sys sys, std::array<double, N> y, double x0, double x_end,
                       const std::vector<Event<N>>& events, const Options& opt, Obs observe)
{
  using State = std::array<double, N>;
  double dir = x_end >= x0 ? 1.0 : -1.0;
  auto dense = odeint::make_dense_output(opt.atol, opt.rtol, odeint::runge_kutta_dopri5<State>());
  dense.initialize(y, x0, dir * opt.h0);
  std::vector<double> gprev(events.size());
  for (std::size_t e = 0; e < events.size(); ++e) gprev[e] = events[e].g(x0, y);
  observe(x0, y);
  long steps = 0;
  while (dir * (x_end - dense.current_time()) > 0) {
    if (++steps > opt.max_steps) fail(ErrorKind::Integration, "step limit exceeded");
    if (dir * (dense.current_time() + dense.current_time_step() - x_end) > 0)
      dense.initialize(dense.current_state(), dense.current_time(), x_end - dense.current_time());
    dense.do_step(sys);
    double x1 = dense.current_time();
    const State& y1 = dense.current_state();
    for (double v : y1)
      if (!std::isfinite(v)) fail(ErrorKind::Integration, "non-finite state during integration");
    for (std::size_t e = 0; e < events.size(); ++e) {
      double g1 = events[e].g(x1, y1);
      if (gprev[e] > 0 && g1 <= 0) {
        Hit<N> h;
        h.index = static_cast<int>(e);
        if (!events[e].locate) {
          h.x = x1;
          h.y = y1;
          return h;
        }
        double xa = dense.previous_time();
        State ya = dense.previous_state();
        auto ctrl = odeint::make_controlled(opt.atol, opt.rtol, odeint::runge_kutta_dopri5<State>());
        auto advance = [&](double x) {
          State tmp = ya;
          if (x != xa) odeint::integrate_adaptive(ctrl, sys, tmp, xa, x, (x - xa) / 4.0);
          return tmp;
        };
        auto gfun = [&](double x) { return events[e].g(x, advance(x)); };
        double ga = events[e].g(xa, ya);
        double xe = x1;
        if (g1 != 0) {
          boost::uintmax_t it = 100;
          double lo = std::min(xa, x1), hi = std::max(xa, x1);
          double glo = xa < x1 ? ga : g1, ghi = xa < x1 ? g1 : ga;
          auto r = boost::math::tools::toms748_solve(gfun, lo, hi, glo, ghi,
                                                     boost::math::tools::eps_tolerance<double>(52), it);
          xe = 0.5 * (r.first + r.second);
        }
        h.x = xe;
        h.y = advance(xe);
        return h;
      }
      gprev[e] = g1;
    }
    observe(x1, y1);
  }
  Hit<N> h;
  h.x = dense.current_time();
  h.y = dense.current_state();
  return h;
}

template <std::size_t N, class Sys>
Hit<N> integrate_until(Sys sys, std::array<double, N> y, double x0, double x_end,
                       const std::vector<Event<N>>& events, const Options& opt)
{
  return integrate_until<N>(sys, y, x0, x_end, events, opt, [](double, const std::array<double, N>&) {});
}

// states at the listed abscissae (monotone, all on one side of x0), exact stepping onto each point
template <std::size_t N, class Sys>
std::vector<std::array<double, N>> sample(Sys sys, std::array<double, N> y, double x0,
                                          const std::vector<double>& xs, const Options& opt)
{
  using State = std::array<double, N>;
  std::vector<State> out;
  out.reserve(xs.size());
  auto ctrl = odeint::make_controlled(opt.atol, opt.rtol, odeint::runge_kutta_dopri5<State>());
  double x = x0;
  double dt = opt.h0;
  for (double xt : xs) {
    if (xt != x) {
      double step = (xt > x ? 1.0 : -1.0) * std::min(std::abs(dt), std::abs(xt - x));
      odeint::integrate_adaptive(ctrl, sys, y, x, xt, step);
      x = xt;
    }
    out.push_back(y);
  }
  return out;
}

}
