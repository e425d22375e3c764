#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "nlar/rng.hpp"

namespace nlar {

// Nlarb is the general estimator driven by caller hooks; Nlarcm/Nlarsm are
// the practical variants with dynamic momentum; Nlars/Nlarc are their
// momentum-free specializations (rho_t forced to 0).
enum class NlarVariant { Nlarb, Nlarcm, Nlarsm, Nlars, Nlarc };

std::string to_string(NlarVariant v);

struct NlarConfig {
  double lambda0 = 0.1;    // initial learning rate, shared across dimensions
  double k = 1.0;          // estimator regularizer, any nonzero value
  double b = 1.0;          // global clipping norm
  double c = 1e-30;        // noise-scale ceiling (Nlarcm/Nlarc)
  double c_prime = 1e-30;  // noise magnitude (Nlarsm/Nlars)
  double rho = 1.0;        // momentum ceiling, in [0, 1]
  double b_prime = 1e-150; // lower clip (Nlarsm/Nlars), 0 < b_prime < b
  NlarVariant variant = NlarVariant::Nlarsm;
  std::uint64_t seed = 0;  // noise stream seed

  void validate() const;   // throws std::invalid_argument
};

// Per-trainable-parameter optimizer state. After every step,
// zeta == (k*lambda0 - s_acc) / (k + g_acc) for Nlarcm/Nlarsm families.
struct DimState {
  double s_acc = 0.0;     // S_t: numerator accumulator
  double g_acc = 0.0;     // G_t: denominator accumulator, non-decreasing
  double velocity = 0.0;  // v_t
  double zeta = 0.0;      // current rate estimate, lambda0 at init
};

std::vector<DimState> init_state(std::size_t n, const NlarConfig& cfg);

// Caller-supplied processes for the general Nlarb step. The caller is
// responsible for the convergence contract (k'_t/t -> 0, k_t/t -> 0,
// |f(g)| bounded by b_t with summable (b_t / (c_t t))^2); the step itself
// only checks k_t(t) + G != 0 at use. b_t is bookkeeping for audits and is
// not consulted by the step. f maps each dimension's gradient as supplied;
// no global scaling is applied internally (compose upstream if wanted).
struct NlarbHooks {
  std::function<double(long)> k_t;
  std::function<double(long)> k_prime_t;
  std::function<double(long)> c_t;       // > 0
  std::function<double(long)> b_t;       // > 0
  std::function<double(double)> f;

  // k_t = k, k'_t = k*lambda0, c_t = c, b_t = 1, f = identity.
  static NlarbHooks constants(double k, double lambda0, double c);
};

// Rescales the flattened gradient to L2 norm b. Returns all zeros when the
// norm is below 1e-300 (zero gradient carries no direction). Throws on
// non-finite input.
std::vector<double> global_scale(std::span<const double> grads, double b);

// Element-wise floor on magnitude: x when |x| >= b_prime, else
// sign(x)*b_prime with sign(0) = +1.
double lower_clip(double x, double b_prime);

// Noise magnitude: min(c, |f_g|) when the raw gradient is nonzero, else c.
// Throws "zero mapped gradient" when raw_g != 0 but f_g == 0 (the inverse
// square weight would blow up downstream).
double noise_magnitude(double f_g, double raw_g, double c);

// Dynamic momentum coefficient (rho / (1 + |zeta|)) * m_t / (m_t + |v|),
// always in [0, rho].
double momentum_coeff(double rho, double zeta, double m_t, double v);

// Momentum decay scale: (sigma/c)^2 / (t+1) for Nlarcm, 1 / (t+1) for
// Nlarsm. Undefined for Nlarb.
double m_schedule(NlarVariant variant, double sigma, double c, long t);

// (k*lambda0 - S) / (k + G); throws on a zero denominator.
double estimator_value(double s_acc, double g_acc, double k, double lambda0);

// One optimizer step over all dimensions. Returns the parameter deltas
// (the caller applies them); state is updated in place. Noise for step t,
// dimension d is noise.sample(t, d).
std::vector<double> nlarcm_step(std::span<DimState> state, std::span<const double> raw_grads,
                                long t, const NlarConfig& cfg, const NoiseStream& noise);

std::vector<double> nlarsm_step(std::span<DimState> state, std::span<const double> raw_grads,
                                long t, const NlarConfig& cfg, const NoiseStream& noise);

std::vector<double> nlarb_step(std::span<DimState> state, std::span<const double> raw_grads,
                               long t, const NlarbHooks& hooks, const NlarConfig& cfg,
                               const NoiseStream& noise);

// Dispatch on cfg.variant (Nlarb needs hooks and is rejected here).
std::vector<double> nlar_step(std::span<DimState> state, std::span<const double> raw_grads,
                              long t, const NlarConfig& cfg, const NoiseStream& noise);

}  // namespace nlar
