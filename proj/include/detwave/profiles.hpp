#pragma once
#include <array>
#include <optional>
#include <string>
#include <vector>
#include <nlohmann/json.hpp>

#include "detwave/model.hpp"

namespace detwave {

enum class WaveClass {
  StrongDetonation,
  WeakDetonation,
  CJDetonation,
  WeakDeflagration,
  CJDeflagration,
  StrongDeflagration,
  InertShock,
  InertRarefaction
};

std::string wave_class_name(WaveClass c);
bool is_combustion(WaveClass c);

struct WaveSpec {
  double u_minus = 0, u_plus = 0;
  double z_minus = 0, z_plus = 1;
  double s = 0;
  WaveClass cls = WaveClass::StrongDetonation;
  double alpha_minus = 0, alpha_plus = 0;
};

nlohmann::json to_json(const WaveSpec& w);

enum class Branch { Detonation, Deflagration };

struct RHStates {
  double strong, weak;
};

// traveling-wave vector field (F, G) for the endstates of a wave
struct TWField {
  const ModelConfig* cfg;
  double u_plus, z_plus, s;
  bool reactive;
  double F(double u, double z) const;
  double G(double u, double z) const;
};

RHStates rh_states(const ModelConfig& cfg, double u_plus, double s, Branch branch = Branch::Detonation);
std::pair<double, double> cj_speeds(const ModelConfig& cfg, double u_plus);
double cj_state(const ModelConfig& cfg, double s_cj);
WaveSpec classify_wave(const ModelConfig& cfg, double u_minus, double u_plus, double s);

enum class RestType { Repellor, Saddle, SaddleAttractor, SaddleRepellor, DegenerateCenter };
std::string rest_type_name(RestType t);

struct RestPointAnalysis {
  std::array<double, 2> eigenvalues;
  std::array<std::array<double, 2>, 2> eigenvectors;   // unit vectors in (u,z)
  RestType rest_type;
  std::optional<std::array<double, 2>> center_direction;
};

RestPointAnalysis rest_point_analysis(const ModelConfig& cfg, double u, double z, double s);

struct LPolicy {
  double delta_tail = 1e-8;
  double dx = 0.005;
  double launch_eps = 1e-7;
  double cap_factor = 200.0;
  double defl_factor = 10.0;
  double defl_delta = 1e-6;
};

struct Profile {
  ModelConfig cfg;
  WaveSpec wave;
  double dx = 0;
  std::vector<double> x, u, z, ux, zx, uxx, zxx;
  double L = 0;
  std::array<double, 2> tail_decay_rates{0, 0};
  bool degenerate = false;
  double zhat = 1;
  double x_ignition = 0;   // abscissa where u crosses u_i (detonations)

  struct Point {
    double u, z, ux, zx;
  };
  Point at(double xq) const;
  double x_min() const { return x.front(); }
  double x_max() const { return x.back(); }
  std::size_t index_of_zero() const;
};

Profile compute_profile(const ModelConfig& cfg, const WaveSpec& wave, const LPolicy& pol = {});

// max ODE residual using 4th-order finite differences on the stored grid
double profile_residual(const Profile& p);
double endstate_gap(const Profile& p);
// expected decay rates (at -inf, at +inf) from the rest-point linearization
std::array<std::vector<double>, 2> expected_tail_rates(const Profile& p);

struct CJRow {
  double s;
  std::optional<double> strong, weak;
};
std::vector<CJRow> cj_diagram(const ModelConfig& cfg, double u_plus, const std::vector<double>& s_grid, int jobs = 1);

nlohmann::json profile_sidecar(const Profile& p);

// Melnikov machinery
struct ShootResult {
  double d;
  double zhat;
  bool trapped;
  double u_minus;
};

ShootResult shoot_weak_manifold(const ModelConfig& cfg, double u_plus, double s);
double melnikov_separation(const ModelConfig& cfg, double u_plus, double s);
// (u, z) samples of the weak saddle's unstable manifold from launch to u = u_i or the rest point (u_i, z*)
std::vector<std::array<double, 2>> weak_manifold_orbit(const ModelConfig& cfg, double u_plus, double s, int n = 200);

struct MelnikovPartials {
  double dd_ds, dd_duplus, dd_dk, dd_dq;
};

MelnikovPartials melnikov_partials(const Profile& p);
double melnikov_derivative_s(const Profile& p);

struct MelnikovResult {
  double d;
  double dd_ds;
  double dd_ds_fd;
  std::optional<MelnikovPartials> partials;
};

MelnikovResult melnikov_full(const ModelConfig& cfg, double u_plus, double s);
double melnikov_fd_s(const ModelConfig& cfg, double u_plus, double s);

struct WeakSpeed {
  bool found;     // false: NoThreshold (case (i) on the bracket)
  double s_hat;
  double d;
};

WeakSpeed find_weak_detonation_speed(const ModelConfig& cfg, double u_plus, double s_lo, double s_hi);
// bracket starting just above s_* and doubling the excess until d < 0
WeakSpeed find_weak_detonation_speed(const ModelConfig& cfg, double u_plus);

}
