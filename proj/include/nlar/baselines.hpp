#pragma once

#include <span>
#include <string>
#include <vector>

namespace nlar {

enum class BaselineKind { SgdMomentum, Adam, AdamHd, Adagrad, Adadelta };

std::string to_string(BaselineKind k);

struct BaselineConfig {
  BaselineKind kind = BaselineKind::Adam;
  double lr = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-7;     // Adam default; use 1e-8 for AdamHd
  double beta_hyper = 0.0;   // AdamHd hypergradient rate
  double rho_decay = 0.95;   // Adadelta decay; also the SgdMomentum coefficient
  double clip_norm = 1.0;    // conventional clip, applied inside the step

  void validate() const;
};

// Per-kind defaults: Adam eps 1e-7, AdamHd eps 1e-8 / beta 1e-7,
// Adadelta eps 1e-6 / decay 0.95.
BaselineConfig default_config(BaselineKind kind);

// Flat per-kind state. Unused arrays stay empty. For SgdMomentum the
// velocity lives in first_moment; for AdamHd grad_prev holds the previous
// update direction m_hat / (sqrt(v_hat) + eps) and lr_current the evolving
// scalar rate.
struct BaselineState {
  std::vector<double> first_moment;
  std::vector<double> second_moment;
  std::vector<double> grad_prev;
  std::vector<double> accum_sq_grad;
  std::vector<double> accum_sq_delta;
  long step = 0;
  double lr_current = 0.0;
};

BaselineState init_baseline_state(std::size_t n, const BaselineConfig& cfg);

// Conventional clip-norm: g (unchanged) when ||g|| <= b, else b*g/||g||.
std::vector<double> clip_by_global_norm(std::span<const double> grads, double b);

std::vector<double> sgd_momentum_step(BaselineState& state, std::span<const double> grads,
                                      const BaselineConfig& cfg);
std::vector<double> adam_step(BaselineState& state, std::span<const double> grads,
                              const BaselineConfig& cfg);
std::vector<double> adamhd_step(BaselineState& state, std::span<const double> grads,
                                const BaselineConfig& cfg);
std::vector<double> adagrad_step(BaselineState& state, std::span<const double> grads,
                                 const BaselineConfig& cfg);
std::vector<double> adadelta_step(BaselineState& state, std::span<const double> grads,
                                  const BaselineConfig& cfg);

// Dispatch on cfg.kind.
std::vector<double> baseline_step(BaselineState& state, std::span<const double> grads,
                                  const BaselineConfig& cfg);

}  // namespace nlar
