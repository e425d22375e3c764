#include "nlar/baselines.hpp"

#include <cmath>
#include <stdexcept>

namespace nlar {

namespace {

constexpr double kAdagradEps = 1e-10;   // guard inside the root

void check_len(std::size_t state_n, std::size_t grad_n) {
  if (state_n != grad_n)
    throw std::invalid_argument("baseline state/gradient length mismatch");
}

// Shared Adam core so AdamHd with beta_hyper = 0 is bit-identical to Adam.
// Writes the unscaled direction m_hat/(sqrt(v_hat)+eps) into direction
// (when non-null) and returns the deltas for the given rate.
std::vector<double> adam_core(BaselineState& state, std::span<const double> g, double lr,
                              const BaselineConfig& cfg, std::vector<double>* direction) {
  state.step += 1;
  const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.step));
  std::vector<double> deltas(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) {
    double& m = state.first_moment[i];
    double& v = state.second_moment[i];
    m = cfg.beta1 * m + (1.0 - cfg.beta1) * g[i];
    v = cfg.beta2 * v + (1.0 - cfg.beta2) * g[i] * g[i];
    const double u = (m / bc1) / (std::sqrt(v / bc2) + cfg.epsilon);
    if (direction) (*direction)[i] = u;
    deltas[i] = -lr * u;
  }
  return deltas;
}

}  // namespace

std::string to_string(BaselineKind k) {
  switch (k) {
    case BaselineKind::SgdMomentum: return "sgd";
    case BaselineKind::Adam: return "adam";
    case BaselineKind::AdamHd: return "adamhd";
    case BaselineKind::Adagrad: return "adagrad";
    case BaselineKind::Adadelta: return "adadelta";
  }
  return "?";
}

void BaselineConfig::validate() const {
  if (!(lr > 0.0)) throw std::invalid_argument("lr must be > 0");
  if (!(beta1 >= 0.0 && beta1 < 1.0)) throw std::invalid_argument("beta1 must be in [0, 1)");
  if (!(beta2 >= 0.0 && beta2 < 1.0)) throw std::invalid_argument("beta2 must be in [0, 1)");
  if (!(epsilon > 0.0)) throw std::invalid_argument("epsilon must be > 0");
  if (!(rho_decay >= 0.0 && rho_decay < 1.0))
    throw std::invalid_argument("rho_decay must be in [0, 1)");
  if (!(clip_norm > 0.0)) throw std::invalid_argument("clip_norm must be > 0");
}

BaselineConfig default_config(BaselineKind kind) {
  BaselineConfig cfg;
  cfg.kind = kind;
  switch (kind) {
    case BaselineKind::Adam:
      cfg.epsilon = 1e-7;
      break;
    case BaselineKind::AdamHd:
      cfg.epsilon = 1e-8;
      cfg.beta_hyper = 1e-7;
      break;
    case BaselineKind::Adadelta:
      cfg.epsilon = 1e-6;
      cfg.rho_decay = 0.95;
      break;
    case BaselineKind::SgdMomentum:
      cfg.lr = 0.01;
      cfg.rho_decay = 0.9;
      break;
    case BaselineKind::Adagrad:
      cfg.lr = 0.01;
      break;
  }
  return cfg;
}

BaselineState init_baseline_state(std::size_t n, const BaselineConfig& cfg) {
  cfg.validate();
  BaselineState st;
  st.lr_current = cfg.lr;
  switch (cfg.kind) {
    case BaselineKind::SgdMomentum:
      st.first_moment.assign(n, 0.0);
      break;
    case BaselineKind::Adam:
      st.first_moment.assign(n, 0.0);
      st.second_moment.assign(n, 0.0);
      break;
    case BaselineKind::AdamHd:
      st.first_moment.assign(n, 0.0);
      st.second_moment.assign(n, 0.0);
      st.grad_prev.assign(n, 0.0);
      break;
    case BaselineKind::Adagrad:
      st.accum_sq_grad.assign(n, 0.0);
      break;
    case BaselineKind::Adadelta:
      st.accum_sq_grad.assign(n, 0.0);
      st.accum_sq_delta.assign(n, 0.0);
      break;
  }
  return st;
}

std::vector<double> clip_by_global_norm(std::span<const double> grads, double b) {
  double sumsq = 0.0;
  for (double g : grads) sumsq += g * g;
  const double norm = std::sqrt(sumsq);
  std::vector<double> out(grads.begin(), grads.end());
  if (norm > b) {
    const double scale = b / norm;
    for (double& g : out) g *= scale;
  }
  return out;
}

std::vector<double> sgd_momentum_step(BaselineState& state, std::span<const double> grads,
                                      const BaselineConfig& cfg) {
  check_len(state.first_moment.size(), grads.size());
  const std::vector<double> g = clip_by_global_norm(grads, cfg.clip_norm);
  state.step += 1;
  std::vector<double> deltas(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) {
    double& v = state.first_moment[i];
    v = cfg.rho_decay * v - cfg.lr * g[i];
    deltas[i] = v;
  }
  return deltas;
}

std::vector<double> adam_step(BaselineState& state, std::span<const double> grads,
                              const BaselineConfig& cfg) {
  check_len(state.first_moment.size(), grads.size());
  const std::vector<double> g = clip_by_global_norm(grads, cfg.clip_norm);
  return adam_core(state, g, cfg.lr, cfg, nullptr);
}

std::vector<double> adamhd_step(BaselineState& state, std::span<const double> grads,
                                const BaselineConfig& cfg) {
  check_len(state.first_moment.size(), grads.size());
  const std::vector<double> g = clip_by_global_norm(grads, cfg.clip_norm);
  if (state.step == 0) state.lr_current = cfg.lr;
  // Hypergradient update on the scalar rate: alignment of the current
  // gradient with the previous update direction raises or lowers lr. The
  // rate may go negative; that is the cited method's behavior.
  double align = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) align += g[i] * state.grad_prev[i];
  state.lr_current += cfg.beta_hyper * align;
  return adam_core(state, g, state.lr_current, cfg, &state.grad_prev);
}

std::vector<double> adagrad_step(BaselineState& state, std::span<const double> grads,
                                 const BaselineConfig& cfg) {
  check_len(state.accum_sq_grad.size(), grads.size());
  const std::vector<double> g = clip_by_global_norm(grads, cfg.clip_norm);
  state.step += 1;
  std::vector<double> deltas(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) {
    double& acc = state.accum_sq_grad[i];
    acc += g[i] * g[i];
    deltas[i] = -cfg.lr * g[i] / std::sqrt(acc + kAdagradEps);
  }
  return deltas;
}

std::vector<double> adadelta_step(BaselineState& state, std::span<const double> grads,
                                  const BaselineConfig& cfg) {
  check_len(state.accum_sq_grad.size(), grads.size());
  const std::vector<double> g = clip_by_global_norm(grads, cfg.clip_norm);
  state.step += 1;
  std::vector<double> deltas(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) {
    double& eg2 = state.accum_sq_grad[i];
    double& ed2 = state.accum_sq_delta[i];
    eg2 = cfg.rho_decay * eg2 + (1.0 - cfg.rho_decay) * g[i] * g[i];
    const double d = -std::sqrt(ed2 + cfg.epsilon) / std::sqrt(eg2 + cfg.epsilon) * g[i];
    ed2 = cfg.rho_decay * ed2 + (1.0 - cfg.rho_decay) * d * d;
    deltas[i] = d;
  }
  return deltas;
}

std::vector<double> baseline_step(BaselineState& state, std::span<const double> grads,
                                  const BaselineConfig& cfg) {
  switch (cfg.kind) {
    case BaselineKind::SgdMomentum: return sgd_momentum_step(state, grads, cfg);
    case BaselineKind::Adam: return adam_step(state, grads, cfg);
    case BaselineKind::AdamHd: return adamhd_step(state, grads, cfg);
    case BaselineKind::Adagrad: return adagrad_step(state, grads, cfg);
    case BaselineKind::Adadelta: return adadelta_step(state, grads, cfg);
  }
  throw std::invalid_argument("unknown baseline kind");
}

}  // namespace nlar
