#pragma once
#include <array>
#include <complex>
#include <functional>
#include <memory>
#include <vector>
#include <nlohmann/json.hpp>

#include "detwave/profiles.hpp"

namespace detwave {

using cplx = std::complex<double>;

enum class Side { Minus, Plus };

struct LimitingModes {
  std::array<cplx, 3> mu;                    // stable, kinematic unstable, reactive
  std::array<std::array<cplx, 3>, 3> vec;    // eigenvectors in (u, u', z)
};

// rates and eigenvectors of the constant-coefficient system at an endstate
LimitingModes limiting_modes(const ModelConfig& cfg, double u, double z, double s, cplx lambda);

// coefficients of the first-order eigenvalue system at one abscissa
struct EvansCoeffs {
  double alpha, dalpha, phi, dphi, zbar;
};

class EvansSystem {
public:
  static EvansSystem from_profile(const Profile& p, double extend = 1.0);
  // artificial profile at rest: q = 0, phi = 0, alpha = alpha0
  static EvansSystem constant(double alpha0, double s = 1.0, double half_length = 10.0);

  EvansCoeffs coeffs(double x) const;
  double q = 0, k = 0, s = 1;
  double x_minus = 0, x_plus = 0;
  double orientation = 1;
  EvansCoeffs minus{}, plus{};
  std::shared_ptr<const Profile> profile;   // null for the harness
  double alpha_const = 0;

};

struct EvansEvaluation {
  cplx lambda;
  cplx D;
  nlohmann::json normalization;
};

struct EvansOptions {
  double rtol = 1e-10;
  double atol = 1e-12;
};

EvansEvaluation evans_eval(const EvansSystem& sys, cplx lambda, const EvansOptions& opt = {});
EvansEvaluation evans_eval(const Profile& p, cplx lambda, const EvansOptions& opt = {});

double dprime_zero_numeric(const EvansSystem& sys, const EvansOptions& opt = {});

struct DPrimeFormula {
  double value;
  double gamma;      // strong: Abel-limit factor; weak: NaN
  double delta;      // [u] + q
  double dd_ds;      // weak only
  nlohmann::json parts;
};
DPrimeFormula dprime_zero_formula(const Profile& p);

struct SignAtInfinity {
  int sign;
  double lambda_lo, lambda_hi;
};
SignAtInfinity sign_at_infinity(const EvansSystem& sys, double lambda_max = 0.0, int jobs = 1);

struct WindingResult {
  int count;
  double min_abs, median_abs;
  std::size_t n_evals;
  std::vector<std::pair<cplx, cplx>> samples;   // (lambda, D) along the contour
};
WindingResult winding_number(const EvansSystem& sys, double r, double R, int n_samples = 64, int jobs = 1);

struct StabilityReport {
  double dprime0_numeric;
  DPrimeFormula formula;
  SignAtInfinity at_infinity;
  int Gamma;
  int winding_count;
  double D0_abs;
  nlohmann::json residuals;
};
StabilityReport stability_index(const Profile& p, int jobs = 1, double r = 1e-3, double R = 50.0);

nlohmann::json to_json(const StabilityReport& r);

}
