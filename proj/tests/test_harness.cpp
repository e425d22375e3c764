#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "nlar/harness.hpp"

using namespace nlar;
namespace fs = std::filesystem;

namespace {

std::string experiment_text(const std::string& out_dir, const std::string& extra_optimizer = "") {
  std::string text = R"(
[experiment]
model = "logistic"
dataset = "synthetic"
synth_n = 360
epochs = 2
batch_size = 50
seeds = [5]
lambda0 = [0.1]
l2 = 0.0001
out_dir = ")" + out_dir + R"("

[optimizer.nlarsm]
kind = "nlarsm"

[optimizer.adam]
kind = "adam"
)";
  text += extra_optimizer;
  return text;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

MetricsRecord rec(const std::string& name, double lambda0, std::uint64_t seed, int epoch,
                  double val_acc, bool diverged = false) {
  MetricsRecord r;
  r.optimizer = name;
  r.lambda0 = lambda0;
  r.seed = seed;
  r.epoch = epoch;
  r.train_loss = 1.0;
  r.train_accuracy = val_acc;
  r.val_loss = 1.0;
  r.val_accuracy = val_acc;
  r.diverged = diverged;
  return r;
}

}  // namespace

TEST_CASE("experiment config round-trips into a spec") {
  const Config cfg = Config::parse_text(experiment_text("/tmp/nlar_x"), "inline");
  const ExperimentSpec spec = experiment_from_config(cfg);
  CHECK(spec.model == ModelKind::Logistic);
  CHECK(spec.dataset == "synthetic");
  CHECK(spec.synth_n == 360);
  CHECK(spec.epochs == 2);
  CHECK(spec.batch_size == 50);
  REQUIRE(spec.seeds.size() == 1);
  CHECK(spec.seeds[0] == 5);
  REQUIRE(spec.optimizers.size() == 2);
  CHECK(spec.optimizers[0].name == "nlarsm");
  CHECK(spec.optimizers[0].is_nlar);
  CHECK(spec.optimizers[0].nlar.variant == NlarVariant::Nlarsm);
  CHECK(spec.optimizers[1].name == "adam");
  CHECK_FALSE(spec.optimizers[1].is_nlar);
  CHECK(spec.optimizers[1].baseline.epsilon == 1e-7);
  CHECK_NOTHROW(spec.validate());

  const std::string with_override = experiment_text("/tmp/nlar_x",
                                                    "\n[optimizer.adam2]\nkind = \"adam\"\n"
                                                    "lambda0 = [0.001, 1.0]\n");
  const ExperimentSpec spec2 =
      experiment_from_config(Config::parse_text(with_override, "inline"));
  REQUIRE(spec2.optimizers.size() == 3);
  CHECK(spec2.optimizers[2].lambda0_override == std::vector<double>{0.001, 1.0});
}

TEST_CASE("config errors are loud") {
  CHECK_THROWS(experiment_from_config(Config::parse_text("[experiment]\n", "inline")));
  CHECK_THROWS(Config::parse_text("[experiment\nmodel = \"x\"\n", "inline"));
  CHECK_THROWS(Config::parse_text("[experiment]\nmodel = \n", "inline"));
  CHECK_THROWS(experiment_from_config(
      Config::parse_text("[experiment]\n[optimizer.x]\nkind = \"bogus\"\n", "inline")));
}

TEST_CASE("a small experiment produces the full metric grid") {
  const std::string out = (fs::temp_directory_path() / "nlar_exp_small").string();
  fs::remove_all(out);
  const Config cfg = Config::parse_text(experiment_text(out), "inline");
  ExperimentSpec spec = experiment_from_config(cfg);
  const ExperimentResult result = run_experiment(spec);

  // 2 optimizers x 1 lambda0 x 1 seed x 2 epochs
  REQUIRE(result.records.size() == 4);
  CHECK(result.records[0].optimizer == "nlarsm");
  CHECK(result.records[0].epoch == 1);
  CHECK(result.records[1].epoch == 2);
  CHECK(result.records[2].optimizer == "adam");
  for (const auto& r : result.records) {
    CHECK(r.train_accuracy >= 0.0);
    CHECK(r.train_accuracy <= 1.0);
    CHECK(r.val_accuracy >= 0.0);
    CHECK(r.val_accuracy <= 1.0);
    CHECK_FALSE(r.diverged);
    CHECK(r.wall_seconds >= 0.0);
  }
  // blobs are easy; both optimizers should fit them quickly
  CHECK(result.records[1].val_accuracy >= 0.9);

  CHECK(fs::exists(fs::path(out) / "metrics.csv"));
  CHECK(fs::exists(fs::path(out) / "metrics_avg.csv"));
  CHECK(fs::exists(fs::path(out) / "timings.csv"));
  CHECK(fs::exists(fs::path(out) / "val_accuracy.svg"));
  CHECK(fs::exists(fs::path(out) / "train_accuracy.svg"));

  const std::string csv = slurp(fs::path(out) / "metrics.csv");
  CHECK(csv.rfind("optimizer,lambda0,seed,epoch,train_loss,train_accuracy,val_loss,"
                  "val_accuracy,zeta_min,zeta_max,diverged\n",
                  0) == 0);
  const std::string svg = slurp(fs::path(out) / "val_accuracy.svg");
  CHECK(svg.find("<svg") != std::string::npos);
  CHECK(svg.find("polyline") != std::string::npos);
  fs::remove_all(out);
}

TEST_CASE("three seeds and five epochs give fifteen rows per cell") {
  const std::string out = (fs::temp_directory_path() / "nlar_exp_rows").string();
  fs::remove_all(out);
  const std::string text = R"(
[experiment]
model = "logistic"
dataset = "synthetic"
synth_n = 240
epochs = 5
batch_size = 60
seeds = [1, 2, 3]
lambda0 = [0.1]
out_dir = ")" + out + R"("

[optimizer.nlarsm]
kind = "nlarsm"
)";
  const ExperimentResult result =
      run_experiment(experiment_from_config(Config::parse_text(text, "inline")));
  CHECK(result.records.size() == 15);
  CHECK(result.averaged.size() == 5);
  fs::remove_all(out);
}

TEST_CASE("repeated runs emit byte-identical deterministic CSVs") {
  const std::string out1 = (fs::temp_directory_path() / "nlar_exp_det1").string();
  const std::string out2 = (fs::temp_directory_path() / "nlar_exp_det2").string();
  fs::remove_all(out1);
  fs::remove_all(out2);
  run_experiment(experiment_from_config(Config::parse_text(experiment_text(out1), "inline")));
  run_experiment(experiment_from_config(Config::parse_text(experiment_text(out2), "inline")));
  CHECK(slurp(fs::path(out1) / "metrics.csv") == slurp(fs::path(out2) / "metrics.csv"));
  CHECK(slurp(fs::path(out1) / "metrics_avg.csv") == slurp(fs::path(out2) / "metrics_avg.csv"));
  CHECK(slurp(fs::path(out1) / "val_accuracy.svg") == slurp(fs::path(out2) / "val_accuracy.svg"));
  fs::remove_all(out1);
  fs::remove_all(out2);
}

TEST_CASE("inserting an optimizer leaves other rows untouched") {
  const std::string out1 = (fs::temp_directory_path() / "nlar_exp_iso1").string();
  const std::string out2 = (fs::temp_directory_path() / "nlar_exp_iso2").string();
  fs::remove_all(out1);
  fs::remove_all(out2);
  const std::string extra = "\n[optimizer.adagrad]\nkind = \"adagrad\"\n";
  const auto base =
      run_experiment(experiment_from_config(Config::parse_text(experiment_text(out1), "inline")));
  const auto wider = run_experiment(
      experiment_from_config(Config::parse_text(experiment_text(out2, extra), "inline")));

  auto rows_of = [](const ExperimentResult& r, const std::string& name) {
    std::vector<MetricsRecord> out;
    for (const auto& rec : r.records)
      if (rec.optimizer == name) out.push_back(rec);
    return out;
  };
  for (const std::string name : {"nlarsm", "adam"}) {
    const auto a = rows_of(base, name);
    const auto b = rows_of(wider, name);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
      CHECK(a[i].train_loss == b[i].train_loss);
      CHECK(a[i].train_accuracy == b[i].train_accuracy);
      CHECK(a[i].val_loss == b[i].val_loss);
      CHECK(a[i].val_accuracy == b[i].val_accuracy);
      CHECK(a[i].zeta_min == b[i].zeta_min);
      CHECK(a[i].zeta_max == b[i].zeta_max);
    }
  }
  CHECK(rows_of(wider, "adagrad").size() == 2);
  fs::remove_all(out1);
  fs::remove_all(out2);
}

TEST_CASE("average_seeds computes per-epoch means and propagates flags") {
  {
    const std::vector<MetricsRecord> records = {
        rec("o", 0.1, 1, 1, 0.90), rec("o", 0.1, 2, 1, 0.92), rec("o", 0.1, 3, 1, 0.94)};
    const auto avg = average_seeds(records);
    REQUIRE(avg.size() == 1);
    CHECK(avg[0].val_accuracy == doctest::Approx(0.92).epsilon(1e-15));
    CHECK_FALSE(avg[0].diverged);
  }
  {
    const std::vector<MetricsRecord> one = {rec("o", 0.1, 1, 1, 0.5)};
    const auto avg = average_seeds(one);
    REQUIRE(avg.size() == 1);
    CHECK(avg[0].val_accuracy == 0.5);  // single seed: identity
  }
  {
    const std::vector<MetricsRecord> records = {rec("o", 0.1, 1, 1, 0.9),
                                                rec("o", 0.1, 2, 1, 0.1, true)};
    const auto avg = average_seeds(records);
    CHECK(avg[0].diverged);
  }
  {
    const std::vector<MetricsRecord> ragged = {rec("o", 0.1, 1, 1, 0.9), rec("o", 0.1, 1, 2, 0.9),
                                               rec("o", 0.1, 2, 1, 0.9)};
    CHECK_THROWS_WITH_AS(average_seeds(ragged), doctest::Contains("mismatched epochs"),
                         std::invalid_argument);
  }
}

TEST_CASE("divergence is recorded as data, never thrown") {
  const std::string out = (fs::temp_directory_path() / "nlar_exp_div").string();
  fs::remove_all(out);
  const std::string text = R"(
[experiment]
model = "logistic"
dataset = "synthetic"
synth_n = 240
epochs = 3
batch_size = 60
seeds = [7]
lambda0 = [1e18]
out_dir = ")" + out + R"("

[optimizer.sgd]
kind = "sgd"
rho_decay = 0.0
)";
  const ExperimentResult result =
      run_experiment(experiment_from_config(Config::parse_text(text, "inline")));
  REQUIRE(result.records.size() == 3);
  bool any_diverged = false;
  for (const auto& r : result.records) any_diverged = any_diverged || r.diverged;
  CHECK(any_diverged);
  // rows keep coming after the divergence epoch
  CHECK(result.records.back().epoch == 3);
  CHECK(result.records.back().diverged);
  const std::string csv = slurp(fs::path(out) / "metrics.csv");
  CHECK(csv.find("true") != std::string::npos);
  fs::remove_all(out);
}

TEST_CASE("data dir resolution prefers the config key over the environment") {
  ExperimentSpec spec;
  spec.data_dir = "/explicit";
  setenv("NLAR_DATA_DIR", "/from-env", 1);
  CHECK(resolve_data_dir(spec) == "/explicit");
  spec.data_dir.clear();
  CHECK(resolve_data_dir(spec) == "/from-env");
  unsetenv("NLAR_DATA_DIR");
  CHECK(resolve_data_dir(spec).empty());
}

TEST_CASE("missing dataset files raise MissingDataError") {
  ExperimentSpec spec;
  spec.dataset = "mnist";
  spec.data_dir = (fs::temp_directory_path() / "nlar_no_such_dir").string();
  spec.seeds = {1};
  OptimizerSpec opt;
  opt.name = "nlarsm";
  opt.is_nlar = true;
  spec.optimizers.push_back(opt);
  spec.lambda0_grid = {0.1};
  CHECK_THROWS_AS(run_experiment(spec), MissingDataError);
}
