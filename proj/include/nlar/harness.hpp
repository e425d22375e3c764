#pragma once

#include <cstdint>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include "nlar/baselines.hpp"
#include "nlar/config.hpp"
#include "nlar/model.hpp"
#include "nlar/nlar_core.hpp"

namespace nlar {

// Raised when dataset files cannot be found (CLI exit code 2).
struct MissingDataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct OptimizerSpec {
  std::string name;  // stable identity: CSV column and noise-stream key
  bool is_nlar = false;
  NlarConfig nlar;
  BaselineConfig baseline;
  std::vector<double> lambda0_override;  // empty: use the experiment grid
};

struct ExperimentSpec {
  ModelKind model = ModelKind::Logistic;
  std::vector<int> hidden_sizes;      // empty: paper-shape defaults
  std::string dataset = "synthetic";  // mnist | cifar10 | synthetic
  std::string data_dir;               // falls back to $NLAR_DATA_DIR
  std::size_t train_cap = 0;          // 0: provider train size
  std::size_t test_cap = 0;           // 0: provider test size
  std::size_t synth_n = 2000;         // synthetic dataset rows
  double l2 = 1e-4;
  std::vector<OptimizerSpec> optimizers;
  std::vector<double> lambda0_grid;
  int epochs = 10;
  std::size_t batch_size = 300;
  std::vector<std::uint64_t> seeds;
  std::string out_dir = ".";

  void validate() const;
};

struct MetricsRecord {
  std::string optimizer;
  double lambda0 = 0.0;
  std::uint64_t seed = 0;
  int epoch = 0;  // 1-based
  double train_loss = 0.0;
  double train_accuracy = 0.0;
  double val_loss = 0.0;
  double val_accuracy = 0.0;
  double zeta_min = 0.0;
  double zeta_max = 0.0;
  double wall_seconds = 0.0;
  bool diverged = false;
};

struct ExperimentResult {
  std::vector<MetricsRecord> records;   // canonical order: optimizer, lambda0, seed, epoch
  std::vector<MetricsRecord> averaged;  // per (optimizer, lambda0, epoch); seed = 0
};

// Config key wins, then $NLAR_DATA_DIR; empty for synthetic datasets.
std::string resolve_data_dir(const ExperimentSpec& spec);

ExperimentSpec experiment_from_config(const Config& cfg);

// Full protocol: per seed one reshuffle split and one shared model init;
// identical batch sequences across optimizers; per-epoch metric rows.
// Writes metrics.csv, metrics_avg.csv, timings.csv and accuracy SVGs into
// spec.out_dir. Divergence is recorded, never thrown.
ExperimentResult run_experiment(const ExperimentSpec& spec);

// Arithmetic mean per (optimizer, lambda0, epoch) across seeds; the
// diverged flag propagates if any seed diverged. Throws on ragged input.
std::vector<MetricsRecord> average_seeds(const std::vector<MetricsRecord>& records);

// metrics.csv: deterministic fields only (wall clock lives in timings.csv,
// so repeated runs are byte-identical).
void write_metrics_csv(const std::vector<MetricsRecord>& records, std::ostream& out);
void write_averaged_csv(const std::vector<MetricsRecord>& averaged, std::ostream& out);
void write_timings_csv(const std::vector<MetricsRecord>& records, std::ostream& out);

}  // namespace nlar
