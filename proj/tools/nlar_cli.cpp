#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>

#include "nlar/baselines.hpp"
#include "nlar/config.hpp"
#include "nlar/convergence_lab.hpp"
#include "nlar/harness.hpp"
#include "nlar/model.hpp"
#include "nlar/nlar_core.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitMissingData = 2;

bool precision_ok(std::string& why) {
  if (!std::numeric_limits<double>::is_iec559 || std::numeric_limits<double>::digits != 53) {
    why = "double is not IEEE 754 binary64";
    return false;
  }
  volatile double one = 1.0;
  volatile double above = one + 0x1.0p-52;
  volatile double below = one + 0x1.0p-54;
  if (!(above != 1.0 && below == 1.0)) {
    why = "double arithmetic does not behave like 53-bit binary64";
    return false;
  }
  return true;
}

int check_precision_or_fail() {
  std::string why;
  if (!precision_ok(why)) {
    std::cerr << "precision check failed: " << why << "\n";
    return kExitConfig;
  }
  return kExitOk;
}

int run_train(const std::string& config_path, const std::string& out_dir, long seed_override,
              long subset) {
  const nlar::Config cfg = nlar::Config::parse_file(config_path);
  nlar::ExperimentSpec spec = nlar::experiment_from_config(cfg);
  if (!out_dir.empty()) spec.out_dir = out_dir;
  if (seed_override >= 0) spec.seeds = {static_cast<std::uint64_t>(seed_override)};
  if (subset > 0) spec.train_cap = static_cast<std::size_t>(subset);

  const nlar::ExperimentResult result = nlar::run_experiment(spec);
  std::cout << result.records.size() << " metric rows, " << result.averaged.size()
            << " averaged rows written to " << spec.out_dir << "\n";
  std::size_t diverged = 0;
  for (const auto& r : result.records)
    if (r.diverged) ++diverged;
  if (diverged) std::cout << diverged << " rows flagged diverged\n";
  return kExitOk;
}

int run_converge(const std::string& config_path, const std::string& out_dir) {
  const nlar::Config cfg = nlar::Config::parse_file(config_path);
  const std::vector<nlar::ProcessSpec> specs = nlar::lab_specs_from_config(cfg);
  const std::vector<nlar::ConvergenceReport> reports = nlar::sweep(specs);

  const std::string dir = out_dir.empty() ? std::string(".") : out_dir;
  std::filesystem::create_directories(dir);
  const std::string out_path = dir + "/convergence.csv";
  std::ofstream out(out_path, std::ios::binary);
  if (!out) {
    std::cerr << "cannot write " << out_path << "\n";
    return kExitConfig;
  }
  nlar::write_sweep_csv(specs, reports, out);

  std::size_t failed = 0;
  for (std::size_t i = 0; i < reports.size(); ++i) {
    if (!reports[i].passed) {
      ++failed;
      std::cout << "FAIL " << to_string(specs[i].estimator) << " gamma=" << specs[i].gamma_true
                << " lambda0=" << specs[i].cfg.lambda0 << " seed=" << specs[i].cfg.seed
                << " err=" << reports[i].final_error
                << (reports[i].diagnostic.empty() ? "" : " (" + reports[i].diagnostic + ")")
                << "\n";
    }
  }
  std::cout << (reports.size() - failed) << "/" << reports.size() << " grid cells passed; CSV at "
            << out_path << "\n";
  return failed == 0 ? kExitOk : kExitConfig;
}

int run_gradcheck() {
  const double h = 1e-6;
  const double tol = 1e-6;
  bool ok = true;
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const nlar::Batch batch20 = nlar::random_batch(32, 20, 5, seed);
    const auto logistic =
        nlar::DenseNet::build(nlar::ModelKind::Logistic, 20, 5, {}, seed, 1e-4);
    const double e1 = nlar::gradient_check_error(logistic, batch20, h);

    const int hidden[] = {10, 10};
    const auto mlp = nlar::DenseNet::build(nlar::ModelKind::Mlp2h, 20, 5, hidden, seed, 1e-4);
    const double e2 = nlar::gradient_check_error(mlp, batch20, h);

    std::printf("seed %llu: logistic(20->5) %.3e, mlp(20-10-10-5) %.3e\n",
                static_cast<unsigned long long>(seed), e1, e2);
    ok = ok && e1 <= tol && e2 <= tol;
  }
  std::cout << (ok ? "gradcheck passed" : "gradcheck FAILED") << " (tolerance 1e-6)\n";
  return ok ? kExitOk : kExitConfig;
}

int run_info() {
  nlar::NlarConfig n;
  std::printf("nlar defaults: lambda0=%g k=%g b=%g c=%g c_prime=%g rho=%g b_prime=%g\n", n.lambda0,
              n.k, n.b, n.c, n.c_prime, n.rho, n.b_prime);
  std::printf("noise: uniform on [-sqrt(3), sqrt(3)] (mean 0, variance 1)\n");
  for (auto kind : {nlar::BaselineKind::SgdMomentum, nlar::BaselineKind::Adam,
                    nlar::BaselineKind::AdamHd, nlar::BaselineKind::Adagrad,
                    nlar::BaselineKind::Adadelta}) {
    const nlar::BaselineConfig b = nlar::default_config(kind);
    std::printf("%-8s lr=%g beta1=%g beta2=%g eps=%g beta=%g rho_decay=%g clip_norm=%g\n",
                to_string(kind).c_str(), b.lr, b.beta1, b.beta2, b.epsilon, b.beta_hyper,
                b.rho_decay, b.clip_norm);
  }
  const char* env = std::getenv("NLAR_DATA_DIR");
  std::printf("NLAR_DATA_DIR: %s\n", env ? env : "(unset)");
  std::string why;
  std::printf("precision: %s\n", precision_ok(why) ? "64-bit IEEE 754 ok" : why.c_str());
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Nlar adaptive learning-rate optimizers: experiments and verification"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  long seed_override = -1;
  long subset = 0;
  bool precision_check = false;
  app.add_flag("--precision-check", precision_check,
               "fail fast unless doubles are IEEE 754 binary64");

  CLI::App* train = app.add_subcommand("train", "run a training experiment from a config file");
  train->add_option("--config", config_path, "experiment config (TOML subset)")->required();
  train->add_option("--out", out_dir, "output directory (overrides config out_dir)");
  train->add_option("--seed-override", seed_override, "replace the config seed list");
  train->add_option("--subset", subset, "cap the training rows");

  CLI::App* converge = app.add_subcommand("converge", "run convergence-lab sweeps");
  converge->add_option("--config", config_path, "lab config (TOML subset)")->required();
  converge->add_option("--out", out_dir, "output directory for convergence.csv");

  app.add_subcommand("gradcheck", "finite-difference audit of the analytic gradients");
  app.add_subcommand("info", "print resolved defaults");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  if (precision_check) {
    const int rc = check_precision_or_fail();
    if (rc != kExitOk) return rc;
  }

  try {
    if (app.got_subcommand("train")) return run_train(config_path, out_dir, seed_override, subset);
    if (app.got_subcommand("converge")) return run_converge(config_path, out_dir);
    if (app.got_subcommand("gradcheck")) return run_gradcheck();
    if (app.got_subcommand("info")) return run_info();
  } catch (const nlar::MissingDataError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitMissingData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  }
  return kExitConfig;
}
