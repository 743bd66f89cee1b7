#pragma once
#include <string>
#include <vector>
#include <nlohmann/json.hpp>

namespace detwave {

enum class FluxKind { Burgers, Exponential, TabulatedCubic };

struct FluxSpec {
  FluxKind kind = FluxKind::Burgers;
  // tabulated cubic: knots and values, optional end slopes (clamped), else not-a-knot
  std::vector<double> knots, values;
  double slope_left = 0.0, slope_right = 0.0;
  bool clamped = false;
  std::vector<double> m;   // spline second derivatives at knots, filled by validate_config

  double lo() const;
  double hi() const;
  bool contains(double u) const;
};

struct FluxValue {
  double f, df, d2f;
};

enum class IgnitionMode { PolynomialBump, ZNDTemperature };

struct IgnitionSpec {
  IgnitionMode mode = IgnitionMode::PolynomialBump;
  double u_i = 0.5;
  double u_sup = 2.5;
  double amplitude = 1.0;
  // ZND temperature map T(u) = -g M^2 u^2 + (g M^2 + 1) u
  double mach = 0.0, gamma_gas = 0.0, T_i = 0.0;

  double temperature(double u) const;
};

struct IgnitionValue {
  double phi, dphi;
};

struct ModelConfig {
  FluxSpec flux;
  IgnitionSpec ignition;
  double q = 0.5;
  double k = 1.0;
};

FluxValue flux_eval(const FluxSpec& flux, double u);
IgnitionValue ignition_eval(const IgnitionSpec& ig, double u);

// u with f'(u) = a
double flux_slope_inverse(const FluxSpec& flux, double a);

ModelConfig validate_config(ModelConfig cfg);
ModelConfig p0_config();

nlohmann::json to_json(const ModelConfig& cfg);
ModelConfig config_from_json(const nlohmann::json& j);

std::string flux_kind_name(FluxKind k);
std::string ignition_mode_name(IgnitionMode m);

}
