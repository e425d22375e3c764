#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "nlar/nlar_core.hpp"
#include "nlar/rng.hpp"

namespace nlar {

enum class LossKind { Quadratic, Quartic, NonConvexSine };
enum class MomentumMode { Off, DynamicRho };
enum class EstimatorKind { Nlarb, Nlarcm, Nlarsm };

std::string to_string(LossKind k);
std::string to_string(EstimatorKind k);

// Synthetic scalar process theta_{t+1} = theta_t + rho_t v_t
// - gamma_true * f(g_t) + sigma_t * eps_{t+1} with a KNOWN rate; the
// estimator runs alongside on the realized updates and should recover
// gamma_true.
struct ProcessSpec {
  double gamma_true = 0.1;
  LossKind loss_kind = LossKind::Quadratic;
  double theta0 = 1.0;
  long steps = 100000;
  MomentumMode momentum = MomentumMode::DynamicRho;
  EstimatorKind estimator = EstimatorKind::Nlarsm;
  NlarConfig cfg;
  NoiseSpec noise;
  double tolerance = 1e-2;  // pass threshold on |zeta_T - gamma_true|
};

struct ConvergenceReport {
  std::vector<double> zeta_trace;  // starts at lambda0; steps+1 entries on clean runs
  double final_error = 0.0;
  bool passed = false;
  std::string diagnostic;  // empty on clean runs
};

ConvergenceReport simulate_process(const ProcessSpec& spec);

std::vector<ConvergenceReport> sweep(const std::vector<ProcessSpec>& specs);

// CSV columns: estimator,gamma_true,lambda0,seed,steps,final_error,passed
void write_sweep_csv(const std::vector<ProcessSpec>& specs,
                     const std::vector<ConvergenceReport>& reports, std::ostream& out);

struct AuditCheck {
  bool applicable = false;
  bool pass = false;
  double value = 0.0;
};

// Empirical checks of the convergence assumptions over one simulated
// trajectory. Series checks ask for numerically Cauchy partial sums:
// over the last 10% of steps, increment / max(1, |partial sum|) <= 1e-8.
struct AuditReport {
  bool noise_exercised = false;   // false means "assumption not exercised"
  AuditCheck noise_mean;          // |mean| within 5/sqrt(T)
  AuditCheck noise_variance;      // |var - 1| within 5*sqrt(0.8/T)
  AuditCheck bound;               // max |f(g_t)| <= cfg.b
  AuditCheck eq_noise_scale;      // sum ((b / (c s))^2      (Nlarb/Nlarcm)
  AuditCheck eq_momentum_cm;      // sum sigma^-2 |rho v| b / s   (Nlarcm)
  AuditCheck eq_noise_sm;         // sum c'^2 / s^2              (Nlarsm)
  AuditCheck eq_momentum_sm;      // sum |rho v| / s             (Nlarsm)
  bool all_applicable_pass() const;
};

AuditReport assumption_audit(const ProcessSpec& spec);

class Config;

// Grid from a [lab] config table: estimators x gammas x lambda0 x seeds.
std::vector<ProcessSpec> lab_specs_from_config(const Config& cfg);

}  // namespace nlar
