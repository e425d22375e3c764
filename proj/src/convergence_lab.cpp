#include "nlar/convergence_lab.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>
#include <stdexcept>

#include "nlar/config.hpp"

namespace nlar {

namespace {

double loss_derivative(LossKind kind, double theta) {
  switch (kind) {
    case LossKind::Quadratic: return theta;                                // L = theta^2 / 2
    case LossKind::Quartic: return theta * theta * theta;                  // L = theta^4 / 4
    case LossKind::NonConvexSine: return theta + 5.0 * std::cos(5.0 * theta);
  }
  throw std::invalid_argument("unknown loss kind");
}

constexpr double kBlowUp = 1e12;

// Tracks whether tail increments of a partial sum stay relatively small.
class CauchyProbe {
 public:
  explicit CauchyProbe(long total_steps) : tail_start_(total_steps - total_steps / 10) {}

  void add(long s, double term) {
    sum_ += term;
    if (s >= tail_start_) {
      const double rel = std::abs(term) / std::max(1.0, std::abs(sum_));
      if (rel > worst_) worst_ = rel;
    }
  }

  double worst_tail_increment() const { return worst_; }
  bool cauchy() const { return worst_ <= 1e-8; }

 private:
  long tail_start_;
  double sum_ = 0.0;
  double worst_ = 0.0;
};

struct SimTrace {
  ConvergenceReport report;
  // audit material
  double noise_sum = 0.0, noise_sumsq = 0.0;
  long noise_count = 0;
  double max_abs_f = 0.0;
  CauchyProbe momentum_cm;  // sigma^-2 |rho v| b / s
  CauchyProbe momentum_sm;  // |rho v| / s
  explicit SimTrace(long steps) : momentum_cm(steps), momentum_sm(steps) {}
};

SimTrace run_simulation(const ProcessSpec& spec) {
  spec.cfg.validate();
  if (spec.steps < 1) throw std::invalid_argument("steps must be >= 1");
  if (!(spec.gamma_true > 0.0)) throw std::invalid_argument("gamma_true must be > 0");

  SimTrace sim(spec.steps);
  ConvergenceReport& rep = sim.report;
  rep.zeta_trace.reserve(static_cast<std::size_t>(spec.steps) + 1);
  rep.zeta_trace.push_back(spec.cfg.lambda0);

  const NoiseStream stream(spec.cfg.seed, spec.noise.distribution);
  const NlarConfig& cfg = spec.cfg;
  double theta = spec.theta0;
  DimState st;
  st.zeta = cfg.lambda0;

  for (long t = 0; t < spec.steps; ++t) {
    const double g = loss_derivative(spec.loss_kind, theta);
    if (!std::isfinite(g)) {
      rep.diagnostic = "non-finite gradient at step " + std::to_string(t);
      return sim;
    }

    double fg = 0.0;
    double sigma = 0.0;
    double m_t = 0.0;
    try {
      switch (spec.estimator) {
        case EstimatorKind::Nlarb:
          fg = g;  // identity map; cfg.c as the constant noise ceiling
          sigma = noise_magnitude(fg, g, cfg.c);
          break;
        case EstimatorKind::Nlarcm:
          fg = global_scale(std::span<const double>(&g, 1), cfg.b)[0];
          sigma = noise_magnitude(fg, g, cfg.c);
          m_t = m_schedule(NlarVariant::Nlarcm, sigma, cfg.c, t);
          break;
        case EstimatorKind::Nlarsm:
          fg = lower_clip(global_scale(std::span<const double>(&g, 1), cfg.b)[0], cfg.b_prime);
          sigma = cfg.c_prime;
          m_t = m_schedule(NlarVariant::Nlarsm, 0.0, 1.0, t);
          break;
      }
    } catch (const std::exception& e) {
      rep.diagnostic = std::string(e.what()) + " at step " + std::to_string(t);
      return sim;
    }

    sim.max_abs_f = std::max(sim.max_abs_f, std::abs(fg));

    double rho_t = 0.0;
    if (spec.momentum == MomentumMode::DynamicRho && spec.estimator != EstimatorKind::Nlarb)
      rho_t = momentum_coeff(cfg.rho, st.zeta, m_t, st.velocity);

    const double eps = stream.sample(static_cast<std::uint64_t>(t), 0);
    sim.noise_sum += eps;
    sim.noise_sumsq += eps * eps;
    sim.noise_count += 1;

    const double momentum_term = rho_t * st.velocity;
    const double delta = momentum_term - spec.gamma_true * fg + sigma * eps;
    st.velocity = momentum_term - spec.gamma_true * fg;
    theta += delta;

    if (t >= 1) {
      const double s = static_cast<double>(t);
      if (spec.estimator == EstimatorKind::Nlarcm)
        sim.momentum_cm.add(t, (std::abs(momentum_term) / sigma) * (cfg.b / sigma) / s);
      if (spec.estimator == EstimatorKind::Nlarsm)
        sim.momentum_sm.add(t, std::abs(momentum_term) / s);
    }

    if (spec.estimator == EstimatorKind::Nlarsm) {
      st.s_acc += fg * delta;
      st.g_acc += fg * fg;
    } else {
      const double fs = fg / sigma;
      st.s_acc += fs * (delta / sigma);
      st.g_acc += fs * fs;
    }
    try {
      st.zeta = estimator_value(st.s_acc, st.g_acc, cfg.k, cfg.lambda0);
    } catch (const std::exception& e) {
      rep.diagnostic = std::string(e.what()) + " at step " + std::to_string(t);
      return sim;
    }
    if (!(std::isfinite(st.s_acc) && std::isfinite(st.g_acc) && std::isfinite(st.zeta))) {
      rep.diagnostic = "estimator state blow-up at step " + std::to_string(t);
      return sim;
    }
    rep.zeta_trace.push_back(st.zeta);

    if (std::abs(theta) > kBlowUp) {
      rep.diagnostic = "process blow-up at step " + std::to_string(t) +
                       " (|theta| > 1e12)";
      return sim;
    }
  }
  return sim;
}

AuditCheck series_check(bool applicable, const CauchyProbe& probe) {
  AuditCheck c;
  c.applicable = applicable;
  c.value = probe.worst_tail_increment();
  c.pass = probe.cauchy();
  return c;
}

}  // namespace

std::string to_string(LossKind k) {
  switch (k) {
    case LossKind::Quadratic: return "quadratic";
    case LossKind::Quartic: return "quartic";
    case LossKind::NonConvexSine: return "nonconvex-sine";
  }
  return "?";
}

std::string to_string(EstimatorKind k) {
  switch (k) {
    case EstimatorKind::Nlarb: return "nlarb";
    case EstimatorKind::Nlarcm: return "nlarcm";
    case EstimatorKind::Nlarsm: return "nlarsm";
  }
  return "?";
}

ConvergenceReport simulate_process(const ProcessSpec& spec) {
  SimTrace sim = run_simulation(spec);
  ConvergenceReport rep = std::move(sim.report);
  rep.final_error = std::abs(rep.zeta_trace.back() - spec.gamma_true);
  rep.passed = rep.diagnostic.empty() && std::isfinite(rep.final_error) &&
               rep.final_error <= spec.tolerance;
  return rep;
}

std::vector<ConvergenceReport> sweep(const std::vector<ProcessSpec>& specs) {
  std::vector<ConvergenceReport> reports;
  reports.reserve(specs.size());
  for (const auto& spec : specs) reports.push_back(simulate_process(spec));
  return reports;
}

void write_sweep_csv(const std::vector<ProcessSpec>& specs,
                     const std::vector<ConvergenceReport>& reports, std::ostream& out) {
  if (specs.size() != reports.size())
    throw std::invalid_argument("spec/report count mismatch");
  out << "estimator,gamma_true,lambda0,seed,steps,final_error,passed\n";
  char buf[64];
  for (std::size_t i = 0; i < specs.size(); ++i) {
    const auto& s = specs[i];
    const auto& r = reports[i];
    out << to_string(s.estimator) << ',';
    std::snprintf(buf, sizeof(buf), "%.17g", s.gamma_true);
    out << buf << ',';
    std::snprintf(buf, sizeof(buf), "%.17g", s.cfg.lambda0);
    out << buf << ',';
    out << s.cfg.seed << ',' << s.steps << ',';
    std::snprintf(buf, sizeof(buf), "%.17g", r.final_error);
    out << buf << ',' << (r.passed ? "true" : "false") << '\n';
  }
}

bool AuditReport::all_applicable_pass() const {
  for (const AuditCheck* c : {&noise_mean, &noise_variance, &bound, &eq_noise_scale,
                              &eq_momentum_cm, &eq_noise_sm, &eq_momentum_sm}) {
    if (c->applicable && !c->pass) return false;
  }
  return true;
}

AuditReport assumption_audit(const ProcessSpec& spec) {
  SimTrace sim = run_simulation(spec);
  AuditReport audit;

  audit.noise_exercised = spec.noise.distribution != NoiseKind::None && sim.noise_count > 0;
  if (audit.noise_exercised) {
    const double n = static_cast<double>(sim.noise_count);
    const double mean = sim.noise_sum / n;
    const double var = sim.noise_sumsq / n - mean * mean;
    audit.noise_mean = {true, std::abs(mean) <= 5.0 / std::sqrt(n), mean};
    audit.noise_variance = {true, std::abs(var - 1.0) <= 5.0 * std::sqrt(0.8 / n), var};
  } else {
    audit.noise_mean = {false, true, 0.0};
    audit.noise_variance = {false, true, 0.0};
  }

  audit.bound = {true, sim.max_abs_f <= spec.cfg.b * (1.0 + 1e-12), sim.max_abs_f};

  // Eq. (4)-style series on the configured constants: sum_s (b / (c s))^2.
  const bool sigma_weighted = spec.estimator != EstimatorKind::Nlarsm;
  {
    CauchyProbe probe(spec.steps);
    if (sigma_weighted) {
      const double ratio = spec.cfg.b / spec.cfg.c;
      for (long s = 1; s <= spec.steps; ++s) {
        const double term = ratio / static_cast<double>(s);
        probe.add(s, term * term);
      }
    }
    audit.eq_noise_scale = series_check(sigma_weighted, probe);
  }

  audit.eq_momentum_cm = series_check(spec.estimator == EstimatorKind::Nlarcm, sim.momentum_cm);

  {
    CauchyProbe probe(spec.steps);
    if (spec.estimator == EstimatorKind::Nlarsm) {
      const double cp2 = spec.cfg.c_prime * spec.cfg.c_prime;
      for (long s = 1; s <= spec.steps; ++s)
        probe.add(s, cp2 / (static_cast<double>(s) * static_cast<double>(s)));
    }
    audit.eq_noise_sm = series_check(spec.estimator == EstimatorKind::Nlarsm, probe);
  }

  audit.eq_momentum_sm = series_check(spec.estimator == EstimatorKind::Nlarsm, sim.momentum_sm);
  return audit;
}

std::vector<ProcessSpec> lab_specs_from_config(const Config& cfg) {
  const ConfigTable& lab = cfg.require("lab");

  std::vector<EstimatorKind> estimators;
  for (const std::string& name : lab.get_string_list("estimators")) {
    if (name == "nlarb") estimators.push_back(EstimatorKind::Nlarb);
    else if (name == "nlarcm") estimators.push_back(EstimatorKind::Nlarcm);
    else if (name == "nlarsm") estimators.push_back(EstimatorKind::Nlarsm);
    else throw std::runtime_error("config error: unknown estimator '" + name + "'");
  }

  const std::string loss_name = lab.get_string_or("loss", "quadratic");
  LossKind loss;
  if (loss_name == "quadratic") loss = LossKind::Quadratic;
  else if (loss_name == "quartic") loss = LossKind::Quartic;
  else if (loss_name == "nonconvex-sine") loss = LossKind::NonConvexSine;
  else throw std::runtime_error("config error: unknown loss '" + loss_name + "'");

  const std::string momentum_name = lab.get_string_or("momentum", "dynamic");
  MomentumMode momentum;
  if (momentum_name == "dynamic") momentum = MomentumMode::DynamicRho;
  else if (momentum_name == "off") momentum = MomentumMode::Off;
  else throw std::runtime_error("config error: unknown momentum mode '" + momentum_name + "'");

  const std::string noise_name = lab.get_string_or("noise", "uniform");
  NoiseKind noise;
  if (noise_name == "uniform") noise = NoiseKind::UniformUnitVar;
  else if (noise_name == "off") noise = NoiseKind::None;
  else throw std::runtime_error("config error: unknown noise kind '" + noise_name + "'");

  const auto gammas = lab.get_number_list("gammas");
  const auto lambdas = lab.get_number_list("lambda0");
  const auto seeds = lab.get_number_list("seeds");
  const long steps = lab.get_int_or("steps", 100000);
  const double theta0 = lab.get_number_or("theta0", 1.0);
  const double tolerance = lab.get_number_or("tolerance", 1e-2);

  std::vector<ProcessSpec> specs;
  for (EstimatorKind est : estimators) {
    for (double gamma : gammas) {
      for (double lambda0 : lambdas) {
        for (double seed : seeds) {
          ProcessSpec s;
          s.gamma_true = gamma;
          s.loss_kind = loss;
          s.theta0 = theta0;
          s.steps = steps;
          s.momentum = momentum;
          s.estimator = est;
          s.cfg.lambda0 = lambda0;
          s.cfg.seed = static_cast<std::uint64_t>(seed);
          s.noise.distribution = noise;
          s.tolerance = tolerance;
          specs.push_back(s);
        }
      }
    }
  }
  return specs;
}

}  // namespace nlar
