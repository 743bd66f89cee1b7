#pragma once
#include <functional>
#include <string>
#include <vector>
#include <nlohmann/json.hpp>

#include "detwave/profiles.hpp"
#include "detwave/riemann.hpp"

namespace detwave {

enum class Boundary { EndstateDirichlet, ZeroGradient, Periodic };
std::string boundary_name(Boundary b);
Boundary boundary_from_name(const std::string& s);

struct SimGrid {
  double x_min = -1, x_max = 1;
  int n_cells = 100;
  double frame_speed = 0;
  Boundary boundary = Boundary::ZeroGradient;
  // ghost states for EndstateDirichlet
  RiemannState left{0, 0}, right{0, 0};

  double dx() const { return (x_max - x_min) / n_cells; }
  double center(int i) const { return x_min + (i + 0.5) * dx(); }
};

struct SimState {
  double t = 0;
  std::vector<double> u, z;
  double conserved_total = 0;
};

void check_grid(const SimGrid& g);
double conserved_total(const ModelConfig& cfg, const SimState& st, const SimGrid& g);
double cfl_bound(const ModelConfig& cfg, const SimState& st, const SimGrid& g);

SimState step(const ModelConfig& cfg, const SimState& st, const SimGrid& g, double dt);

// advances to t_end with dt = cfl_fraction * cfl_bound; obs(state) after every step
using SimObserver = std::function<void(const SimState&)>;
SimState evolve(const ModelConfig& cfg, SimState st, const SimGrid& g, double t_end, double cfl_fraction = 1.0,
                const SimObserver& obs = {});

SimState riemann_initial(const SimGrid& g, RiemannState L, RiemannState R);

struct DecayOptions {
  double dx = 0.05;
  double relax_time = 150;       // unperturbed run that settles the discrete traveling wave
  double half_length = 0;        // 0: the profile's truncation length
  double center = 0;
  double width = 2.0;            // half-width of the cos^2 bump
  int n_samples = 11;
};

struct DecayReport {
  std::vector<double> times, norms, shifts;
  double discretization_gap = 0;   // relaxed discrete wave vs. the continuous profile
  double initial_norm = 0, final_norm = 0;
  bool decayed = false;
  int n_cells = 0;
  double dt = 0;
};

// reference wave sampled at x
using WaveShape = std::function<std::pair<double, double>(double)>;
WaveShape profile_shape(const Profile& p);
// cubic-spline interpolant of cell values, endstates outside the grid
WaveShape state_shape(const SimState& st, const SimGrid& g);

// L2 distance of (u, z) to the best translate of the reference; shift is the starting guess and the result
double translate_fit(const WaveShape& ref, const SimState& st, const SimGrid& g, double& shift);

using SampleHook = std::function<void(const SimState&, const SimGrid&)>;

DecayReport perturbation_decay_test(const ModelConfig& cfg, const Profile& p, double amplitude, double T,
                                    const DecayOptions& opt = {}, const SampleHook& hook = {});

struct MeasuredWave {
  WaveClass cls;
  double level;
  double predicted_speed;
  double measured_speed;
};

struct RiemannRunReport {
  bool solvable = true;
  std::string case_label;
  std::string error;
  std::vector<MeasuredWave> waves;
  std::vector<double> times;
  std::vector<std::vector<double>> crossings;   // u-level crossings at each sample time
  double level = 0;                             // level used for the crossing census
  SimGrid grid;
  double wall_seconds = 0;
};

RiemannRunReport riemann_asymptotic_test(const ModelConfig& cfg, RiemannState L, RiemannState R, double T,
                                         int n_cells, const SampleHook& hook = {});

std::vector<double> level_crossings(const SimState& st, const SimGrid& g, double level);

nlohmann::json to_json(const SimGrid& g);
nlohmann::json to_json(const DecayReport& r);
nlohmann::json to_json(const RiemannRunReport& r);

}
