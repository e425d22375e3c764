#include "nlar/nlar_core.hpp"

#include <cmath>
#include <stdexcept>

namespace nlar {

namespace {

void check_state_finite(const DimState& st, std::size_t d) {
  if (!(std::isfinite(st.s_acc) && std::isfinite(st.g_acc) &&
        std::isfinite(st.velocity) && std::isfinite(st.zeta))) {
    throw std::runtime_error("state blow-up at dimension " + std::to_string(d));
  }
}

void check_shapes(std::size_t state_n, std::size_t grad_n, long t) {
  if (state_n != grad_n) {
    throw std::invalid_argument("state/gradient length mismatch: " +
                                std::to_string(state_n) + " vs " + std::to_string(grad_n));
  }
  if (t < 0) throw std::invalid_argument("step index must be >= 0");
}

}  // namespace

std::string to_string(NlarVariant v) {
  switch (v) {
    case NlarVariant::Nlarb: return "nlarb";
    case NlarVariant::Nlarcm: return "nlarcm";
    case NlarVariant::Nlarsm: return "nlarsm";
    case NlarVariant::Nlars: return "nlars";
    case NlarVariant::Nlarc: return "nlarc";
  }
  return "?";
}

void NlarConfig::validate() const {
  if (!(lambda0 > 0.0)) throw std::invalid_argument("lambda0 must be > 0");
  if (k == 0.0) throw std::invalid_argument("k must be nonzero");
  if (!(b > 0.0)) throw std::invalid_argument("b must be > 0");
  if (!(c > 0.0)) throw std::invalid_argument("c must be > 0");
  if (!(c_prime > 0.0)) throw std::invalid_argument("c_prime must be > 0");
  if (!(rho >= 0.0 && rho <= 1.0)) throw std::invalid_argument("rho must be in [0, 1]");
  if (!(b_prime > 0.0 && b_prime < b)) throw std::invalid_argument("need 0 < b_prime < b");
}

std::vector<DimState> init_state(std::size_t n, const NlarConfig& cfg) {
  cfg.validate();
  std::vector<DimState> state(n);
  for (auto& st : state) st.zeta = cfg.lambda0;
  return state;
}

NlarbHooks NlarbHooks::constants(double k, double lambda0, double c) {
  NlarbHooks h;
  h.k_t = [k](long) { return k; };
  h.k_prime_t = [k, lambda0](long) { return k * lambda0; };
  h.c_t = [c](long) { return c; };
  h.b_t = [](long) { return 1.0; };
  h.f = [](double g) { return g; };
  return h;
}

std::vector<double> global_scale(std::span<const double> grads, double b) {
  double peak = 0.0;
  for (double g : grads) {
    if (!std::isfinite(g)) throw std::domain_error("non-finite gradient");
    peak = std::max(peak, std::abs(g));
  }
  std::vector<double> out(grads.size(), 0.0);
  if (peak == 0.0) return out;
  // nrm2-style scaling keeps the squares from under/overflowing
  double sumsq = 0.0;
  for (double g : grads) {
    const double r = g / peak;
    sumsq += r * r;
  }
  const double unit_norm = std::sqrt(sumsq);  // in [1, sqrt(n)]
  if (peak * unit_norm < 1e-300) return out;
  for (std::size_t i = 0; i < grads.size(); ++i)
    out[i] = b * ((grads[i] / peak) / unit_norm);
  return out;
}

double lower_clip(double x, double b_prime) {
  if (std::abs(x) >= b_prime) return x;
  return x >= 0.0 ? b_prime : -b_prime;
}

double noise_magnitude(double f_g, double raw_g, double c) {
  if (!(c > 0.0)) throw std::invalid_argument("noise ceiling c must be > 0");
  if (raw_g == 0.0) return c;
  if (f_g == 0.0) throw std::domain_error("zero mapped gradient");
  return std::min(c, std::abs(f_g));
}

double momentum_coeff(double rho, double zeta, double m_t, double v) {
  return (rho / (1.0 + std::abs(zeta))) * (m_t / (m_t + std::abs(v)));
}

double m_schedule(NlarVariant variant, double sigma, double c, long t) {
  if (t < 0) throw std::invalid_argument("step index must be >= 0");
  switch (variant) {
    case NlarVariant::Nlarcm:
    case NlarVariant::Nlarc: {
      const double r = sigma / c;
      return r * r / static_cast<double>(t + 1);
    }
    case NlarVariant::Nlarsm:
    case NlarVariant::Nlars:
      return 1.0 / static_cast<double>(t + 1);
    case NlarVariant::Nlarb:
      break;
  }
  throw std::invalid_argument("m_schedule is not defined for Nlarb");
}

double estimator_value(double s_acc, double g_acc, double k, double lambda0) {
  const double denom = k + g_acc;
  if (denom == 0.0) throw std::domain_error("degenerate estimator denominator");
  return (k * lambda0 - s_acc) / denom;
}

std::vector<double> nlarcm_step(std::span<DimState> state, std::span<const double> raw_grads,
                                long t, const NlarConfig& cfg, const NoiseStream& noise) {
  if (cfg.variant != NlarVariant::Nlarcm && cfg.variant != NlarVariant::Nlarc)
    throw std::invalid_argument("nlarcm_step: variant must be Nlarcm or Nlarc");
  check_shapes(state.size(), raw_grads.size(), t);

  const std::vector<double> scaled = global_scale(raw_grads, cfg.b);
  std::vector<double> deltas(state.size());
  for (std::size_t d = 0; d < state.size(); ++d) {
    DimState& st = state[d];
    const double fg = scaled[d];
    const double sigma = noise_magnitude(fg, raw_grads[d], cfg.c);
    double rho_t = 0.0;
    if (cfg.variant == NlarVariant::Nlarcm) {
      const double m_t = m_schedule(NlarVariant::Nlarcm, sigma, cfg.c, t);
      rho_t = momentum_coeff(cfg.rho, st.zeta, m_t, st.velocity);
    }
    const double eps = noise.sample(static_cast<std::uint64_t>(t), d);
    const double v_prev = st.velocity;
    st.velocity = rho_t * v_prev - st.zeta * fg;
    // The parameter delta uses the pre-update velocity v_t, not v_{t+1}.
    const double delta = rho_t * v_prev - st.zeta * fg + sigma * eps;
    // sigma^-2 weights evaluated as ratios; 1/sigma^2 itself can overflow
    // long before the weighted terms do
    const double fs = fg / sigma;
    st.s_acc += fs * (delta / sigma);
    st.g_acc += fs * fs;
    st.zeta = estimator_value(st.s_acc, st.g_acc, cfg.k, cfg.lambda0);
    check_state_finite(st, d);
    deltas[d] = delta;
  }
  return deltas;
}

std::vector<double> nlarsm_step(std::span<DimState> state, std::span<const double> raw_grads,
                                long t, const NlarConfig& cfg, const NoiseStream& noise) {
  if (cfg.variant != NlarVariant::Nlarsm && cfg.variant != NlarVariant::Nlars)
    throw std::invalid_argument("nlarsm_step: variant must be Nlarsm or Nlars");
  check_shapes(state.size(), raw_grads.size(), t);

  const std::vector<double> scaled = global_scale(raw_grads, cfg.b);
  const double m_t = m_schedule(NlarVariant::Nlarsm, 0.0, 1.0, t);
  std::vector<double> deltas(state.size());
  for (std::size_t d = 0; d < state.size(); ++d) {
    DimState& st = state[d];
    const double fg = lower_clip(scaled[d], cfg.b_prime);
    double rho_t = 0.0;
    if (cfg.variant == NlarVariant::Nlarsm)
      rho_t = momentum_coeff(cfg.rho, st.zeta, m_t, st.velocity);
    const double eps = noise.sample(static_cast<std::uint64_t>(t), d);
    const double v_prev = st.velocity;
    st.velocity = rho_t * v_prev - st.zeta * fg;
    const double delta = rho_t * v_prev - st.zeta * fg + cfg.c_prime * eps;
    // Unweighted accumulators: no sigma^-2 factors in this variant.
    st.s_acc += fg * delta;
    st.g_acc += fg * fg;
    st.zeta = estimator_value(st.s_acc, st.g_acc, cfg.k, cfg.lambda0);
    check_state_finite(st, d);
    deltas[d] = delta;
  }
  return deltas;
}

std::vector<double> nlarb_step(std::span<DimState> state, std::span<const double> raw_grads,
                               long t, const NlarbHooks& hooks, const NlarConfig& cfg,
                               const NoiseStream& noise) {
  if (cfg.variant != NlarVariant::Nlarb)
    throw std::invalid_argument("nlarb_step: variant must be Nlarb");
  check_shapes(state.size(), raw_grads.size(), t);
  if (!hooks.k_t || !hooks.k_prime_t || !hooks.c_t || !hooks.f)
    throw std::invalid_argument("nlarb_step: k_t, k_prime_t, c_t and f hooks are required");

  const double kt = hooks.k_t(t);
  const double kpt = hooks.k_prime_t(t);
  const double ct = hooks.c_t(t);
  std::vector<double> deltas(state.size());
  for (std::size_t d = 0; d < state.size(); ++d) {
    DimState& st = state[d];
    const double g = raw_grads[d];
    if (!std::isfinite(g)) throw std::domain_error("non-finite gradient");
    const double fg = hooks.f(g);
    const double sigma = noise_magnitude(fg, g, ct);
    const double eps = noise.sample(static_cast<std::uint64_t>(t), d);
    const double delta = -st.zeta * fg + sigma * eps;
    const double fs = fg / sigma;
    st.s_acc += fs * (delta / sigma);
    st.g_acc += fs * fs;
    const double denom = kt + st.g_acc;
    if (denom == 0.0) throw std::domain_error("degenerate estimator denominator");
    st.zeta = (kpt - st.s_acc) / denom;
    check_state_finite(st, d);
    deltas[d] = delta;
  }
  return deltas;
}

std::vector<double> nlar_step(std::span<DimState> state, std::span<const double> raw_grads,
                              long t, const NlarConfig& cfg, const NoiseStream& noise) {
  switch (cfg.variant) {
    case NlarVariant::Nlarcm:
    case NlarVariant::Nlarc:
      return nlarcm_step(state, raw_grads, t, cfg, noise);
    case NlarVariant::Nlarsm:
    case NlarVariant::Nlars:
      return nlarsm_step(state, raw_grads, t, cfg, noise);
    case NlarVariant::Nlarb:
      break;
  }
  throw std::invalid_argument("nlar_step: Nlarb requires hooks, call nlarb_step");
}

}  // namespace nlar
