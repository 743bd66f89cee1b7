#pragma once
#include <optional>
#include <string>
#include <vector>
#include <nlohmann/json.hpp>

#include "detwave/profiles.hpp"

namespace detwave {

struct RiemannWave {
  WaveSpec spec;                 // rarefactions use u_minus/u_plus as fan endpoints
  double speed_lo = 0, speed_hi = 0;
  bool zero_strength = false;
  bool has_profile = true;       // CJ waves carry no profile
};

struct RiemannSolution {
  std::string case_label;        // Ia, Ib, IIa, IIb, IIa', IIb', III, V, inert
  std::vector<RiemannWave> waves;
  std::vector<std::vector<RiemannWave>> side_list;   // degenerate alternatives (case III)
  std::optional<double> s_hat;   // weak-detonation speed when detonation case (ii) applies
};

struct RiemannState {
  double u, z;
};

RiemannWave gas_dynamical_wave(const ModelConfig& cfg, double u_l, double u_r, double z_frozen);
RiemannSolution solve_riemann(const ModelConfig& cfg, RiemannState L, RiemannState R);

// invariant violations (empty when the solution is consistent)
std::vector<std::string> check_solution(const ModelConfig& cfg, const RiemannSolution& sol, RiemannState L,
                                        RiemannState R);

// (u, z) of the self-similar solution at xi = x/t
RiemannState sample_solution(const ModelConfig& cfg, const RiemannSolution& sol, RiemannState L, double xi);

struct CJShiftRow {
  double k;
  bool case_ii;
  double speed;       // s_hat in case (ii), s_* in case (i)
  double d_at_sstar;
};

struct CJShiftReport {
  std::vector<CJShiftRow> rows;
  std::optional<double> k0_lo, k0_hi;
};

CJShiftReport cj_shift_report(const ModelConfig& cfg, double u_R, const std::vector<double>& k_grid, int jobs = 1);

nlohmann::json to_json(const RiemannWave& w);
nlohmann::json to_json(const RiemannSolution& s);
nlohmann::json to_json(const CJShiftReport& r);

}
