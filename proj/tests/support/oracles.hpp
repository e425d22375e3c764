#pragma once

// Straight-line transcriptions of the three optimizer update loops, kept
// deliberately independent of the library implementation: plain scalar
// arithmetic, every formula written out inline. Tests compare nlar_core
// step outputs against these.

#include <cmath>
#include <cstddef>
#include <functional>
#include <vector>

namespace oracle {

struct Dim {
  double s = 0.0;
  double g = 0.0;
  double v = 0.0;
  double zeta = 0.0;
};

struct StepResult {
  std::vector<double> deltas;
  std::vector<Dim> state;
};

// noise(t, d) supplies epsilon_{t+1}(d); pass a lambda returning 0 for
// noise-free runs.
using NoiseFn = std::function<double(long, std::size_t)>;

inline std::vector<double> scale_to_norm(const std::vector<double>& grads, double b) {
  double sumsq = 0.0;
  for (double g : grads) sumsq += g * g;
  const double norm = std::sqrt(sumsq);
  std::vector<double> out(grads.size(), 0.0);
  if (norm < 1e-300) return out;
  for (std::size_t i = 0; i < grads.size(); ++i) out[i] = b * grads[i] / norm;
  return out;
}

inline StepResult nlarcm_transcript(std::vector<Dim> st, const std::vector<double>& grads,
                                    long t, double lambda0, double k, double b, double c,
                                    double rho, const NoiseFn& noise) {
  const std::vector<double> fstar = scale_to_norm(grads, b);
  std::vector<double> deltas(grads.size());
  for (std::size_t d = 0; d < grads.size(); ++d) {
    const double fg = fstar[d];
    const double sigma = grads[d] != 0.0 ? std::min(c, std::abs(fg)) : c;
    const double m_t = (sigma / c) * (sigma / c) / double(t + 1);
    const double rho_t =
        rho / (1.0 + std::abs(st[d].zeta)) * (m_t / (m_t + std::abs(st[d].v)));
    const double v_old = st[d].v;
    st[d].v = rho_t * v_old - st[d].zeta * fg;
    const double delta = rho_t * v_old - st[d].zeta * fg + sigma * noise(t, d);
    st[d].s = st[d].s + (1.0 / (sigma * sigma)) * fg * delta;
    st[d].g = st[d].g + (1.0 / (sigma * sigma)) * fg * fg;
    st[d].zeta = (k * lambda0 - st[d].s) / (k + st[d].g);
    deltas[d] = delta;
  }
  return {deltas, st};
}

inline StepResult nlarsm_transcript(std::vector<Dim> st, const std::vector<double>& grads,
                                    long t, double lambda0, double k, double b, double c_prime,
                                    double rho, double b_prime, const NoiseFn& noise) {
  const std::vector<double> fstar = scale_to_norm(grads, b);
  std::vector<double> deltas(grads.size());
  for (std::size_t d = 0; d < grads.size(); ++d) {
    double fg = fstar[d];
    if (std::abs(fg) < b_prime) fg = (fg >= 0.0 ? b_prime : -b_prime);
    const double m_t = 1.0 / double(t + 1);
    const double rho_t =
        rho / (1.0 + std::abs(st[d].zeta)) * (m_t / (m_t + std::abs(st[d].v)));
    const double v_old = st[d].v;
    st[d].v = rho_t * v_old - st[d].zeta * fg;
    const double delta = rho_t * v_old - st[d].zeta * fg + c_prime * noise(t, d);
    st[d].s = st[d].s + fg * delta;
    st[d].g = st[d].g + fg * fg;
    st[d].zeta = (k * lambda0 - st[d].s) / (k + st[d].g);
    deltas[d] = delta;
  }
  return {deltas, st};
}

inline StepResult nlarb_transcript(std::vector<Dim> st, const std::vector<double>& grads, long t,
                                   const std::function<double(long)>& k_t,
                                   const std::function<double(long)>& k_prime_t,
                                   const std::function<double(long)>& c_t,
                                   const std::function<double(double)>& f, const NoiseFn& noise) {
  std::vector<double> deltas(grads.size());
  for (std::size_t d = 0; d < grads.size(); ++d) {
    const double fg = f(grads[d]);
    const double sigma = grads[d] != 0.0 ? std::min(c_t(t), std::abs(fg)) : c_t(t);
    const double delta = -st[d].zeta * fg + sigma * noise(t, d);
    st[d].s = st[d].s + (1.0 / (sigma * sigma)) * fg * delta;
    st[d].g = st[d].g + (1.0 / (sigma * sigma)) * fg * fg;
    st[d].zeta = (k_prime_t(t) - st[d].s) / (k_t(t) + st[d].g);
    deltas[d] = delta;
  }
  return {deltas, st};
}

}  // namespace oracle
