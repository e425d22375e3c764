#include "nlar/harness.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <ostream>
#include <tuple>

#include "nlar/data.hpp"
#include "nlar/rng.hpp"
#include "nlar/svg.hpp"

namespace nlar {

namespace {

namespace fs = std::filesystem;

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

// Noise stream key: experiment seed x optimizer name x lambda0 bits.
// Name-keyed (not index-keyed) so inserting an optimizer into the grid
// cannot perturb another optimizer's stream.
std::uint64_t noise_key(std::uint64_t seed, const std::string& optimizer, double lambda0) {
  const std::uint64_t base = derive_stream(seed, "nlar-noise", hash_name(optimizer));
  return mix64(base ^ mix64(std::bit_cast<std::uint64_t>(lambda0)));
}

struct LoadedData {
  std::vector<Dataset> parts;
  std::size_t default_train = 0;
  std::size_t default_test = 0;
  int classes = 0;
};

LoadedData load_parts(const ExperimentSpec& spec) {
  LoadedData data;
  if (spec.dataset == "synthetic") {
    Dataset base = synthetic_two_class(spec.synth_n, 9001);
    data.default_train = (base.rows * 5) / 6;
    data.default_test = base.rows - data.default_train;
    data.classes = 2;
    data.parts.push_back(std::move(base));
    return data;
  }

  const std::string dir = resolve_data_dir(spec);
  if (dir.empty())
    throw MissingDataError("no data directory: set data_dir in the config or NLAR_DATA_DIR");

  auto need = [&](const std::string& name) {
    const std::string path = dir + "/" + name;
    if (!fs::exists(path)) throw MissingDataError("missing dataset file: " + path);
    return path;
  };

  if (spec.dataset == "mnist") {
    Dataset train = load_mnist_idx(need("train-images-idx3-ubyte"), need("train-labels-idx1-ubyte"));
    Dataset test = load_mnist_idx(need("t10k-images-idx3-ubyte"), need("t10k-labels-idx1-ubyte"));
    data.default_train = train.rows;
    data.default_test = test.rows;
    data.classes = 10;
    data.parts.push_back(std::move(train));
    data.parts.push_back(std::move(test));
    return data;
  }
  if (spec.dataset == "cifar10") {
    std::vector<std::string> train_files;
    for (int i = 1; i <= 5; ++i) train_files.push_back(need("data_batch_" + std::to_string(i) + ".bin"));
    Dataset train = load_cifar10_bin(train_files);
    Dataset test = load_cifar10_bin({need("test_batch.bin")});
    data.default_train = train.rows;
    data.default_test = test.rows;
    data.classes = 10;
    data.parts.push_back(std::move(train));
    data.parts.push_back(std::move(test));
    return data;
  }
  throw std::invalid_argument("unknown dataset: " + spec.dataset);
}

struct CellKey {
  std::size_t optimizer_index;
  std::size_t lambda_index;
  std::size_t seed_index;
};

// Evaluate loss/accuracy over a dataset in deterministic batch order.
LossReport evaluate_split(const DenseNet& net, const Dataset& ds, std::size_t batch_size) {
  LossReport total;
  std::size_t seen = 0;
  for (std::size_t begin = 0; begin < ds.rows; begin += batch_size) {
    const std::size_t n = std::min(batch_size, ds.rows - begin);
    Batch b;
    b.rows = n;
    b.features = ds.cols;
    b.inputs.assign(ds.features.begin() + static_cast<std::ptrdiff_t>(begin * ds.cols),
                    ds.features.begin() + static_cast<std::ptrdiff_t>((begin + n) * ds.cols));
    b.labels.assign(ds.labels.begin() + static_cast<std::ptrdiff_t>(begin),
                    ds.labels.begin() + static_cast<std::ptrdiff_t>(begin + n));
    const LossReport r = net.evaluate(b);
    total.loss += r.loss * static_cast<double>(n);
    total.accuracy += r.accuracy * static_cast<double>(n);
    seen += n;
  }
  if (seen > 0) {
    total.loss /= static_cast<double>(seen);
    total.accuracy /= static_cast<double>(seen);
  }
  return total;
}

std::vector<MetricsRecord> run_cell(const ExperimentSpec& spec, const OptimizerSpec& opt,
                                    double lambda0, std::uint64_t seed, const DenseNet& init_net,
                                    const Dataset& train, const Dataset& val) {
  DenseNet net = init_net;
  const std::size_t n = net.param_count();

  NlarConfig ncfg = opt.nlar;
  BaselineConfig bcfg = opt.baseline;
  std::vector<DimState> nstate;
  BaselineState bstate;
  NoiseStream stream;
  if (opt.is_nlar) {
    ncfg.lambda0 = lambda0;
    ncfg.seed = noise_key(seed, opt.name, lambda0);
    nstate = init_state(n, ncfg);
    stream = NoiseStream(ncfg.seed);
  } else {
    bcfg.lr = lambda0;
    bstate = init_baseline_state(n, bcfg);
  }

  std::vector<MetricsRecord> rows;
  rows.reserve(static_cast<std::size_t>(spec.epochs));
  bool diverged = false;
  long t_global = 0;

  MetricsRecord frozen;  // last completed metrics, reused after divergence
  frozen.train_loss = std::numeric_limits<double>::quiet_NaN();
  frozen.train_accuracy = 0.0;
  frozen.val_loss = std::numeric_limits<double>::quiet_NaN();
  frozen.val_accuracy = 0.0;
  frozen.zeta_min = lambda0;
  frozen.zeta_max = lambda0;

  for (int epoch = 1; epoch <= spec.epochs; ++epoch) {
    const auto t_start = std::chrono::steady_clock::now();
    MetricsRecord row;
    row.optimizer = opt.name;
    row.lambda0 = lambda0;
    row.seed = seed;
    row.epoch = epoch;

    if (diverged) {
      row.train_loss = frozen.train_loss;
      row.train_accuracy = frozen.train_accuracy;
      row.val_loss = frozen.val_loss;
      row.val_accuracy = frozen.val_accuracy;
      row.zeta_min = frozen.zeta_min;
      row.zeta_max = frozen.zeta_max;
      row.diverged = true;
      row.wall_seconds = 0.0;
      rows.push_back(row);
      continue;
    }

    double loss_sum = 0.0, acc_sum = 0.0;
    std::size_t seen = 0;
    double zeta_lo = std::numeric_limits<double>::infinity();
    double zeta_hi = -std::numeric_limits<double>::infinity();
    double observed_bad_loss = std::numeric_limits<double>::quiet_NaN();

    const auto epoch_batches =
        batches(train, spec.batch_size, derive_stream(seed, "epoch-batches", static_cast<std::uint64_t>(epoch)));
    for (const Batch& batch : epoch_batches) {
      LossReport rep;
      try {
        rep = net.forward_backward(batch);
      } catch (const std::exception&) {
        diverged = true;
        break;
      }
      if (!std::isfinite(rep.loss)) {
        observed_bad_loss = rep.loss;
        diverged = true;
        break;
      }
      loss_sum += rep.loss * static_cast<double>(batch.rows);
      acc_sum += rep.accuracy * static_cast<double>(batch.rows);
      seen += batch.rows;

      try {
        std::vector<double> deltas;
        if (opt.is_nlar) {
          deltas = nlar_step(nstate, rep.grads, t_global, ncfg, stream);
          for (const DimState& st : nstate) {
            zeta_lo = std::min(zeta_lo, st.zeta);
            zeta_hi = std::max(zeta_hi, st.zeta);
          }
        } else {
          deltas = baseline_step(bstate, rep.grads, bcfg);
          zeta_lo = std::min(zeta_lo, bstate.lr_current);
          zeta_hi = std::max(zeta_hi, bstate.lr_current);
        }
        net.apply_deltas(deltas);
      } catch (const std::exception&) {
        diverged = true;
        break;
      }
      ++t_global;
    }

    if (diverged) {
      row.train_loss = observed_bad_loss;  // non-finite loss is data, not a crash
      row.train_accuracy = frozen.train_accuracy;
      row.val_loss = frozen.val_loss;
      row.val_accuracy = frozen.val_accuracy;
      row.zeta_min = frozen.zeta_min;
      row.zeta_max = frozen.zeta_max;
      row.diverged = true;
      frozen = row;
    } else {
      row.train_loss = seen ? loss_sum / static_cast<double>(seen) : 0.0;
      row.train_accuracy = seen ? acc_sum / static_cast<double>(seen) : 0.0;
      try {
        const LossReport v = evaluate_split(net, val, spec.batch_size);
        row.val_loss = v.loss;
        row.val_accuracy = v.accuracy;
      } catch (const std::exception&) {
        row.val_loss = std::numeric_limits<double>::quiet_NaN();
        row.val_accuracy = frozen.val_accuracy;
      }
      if (!std::isfinite(row.val_loss)) row.diverged = diverged = true;
      row.zeta_min = std::isfinite(zeta_lo) ? zeta_lo : frozen.zeta_min;
      row.zeta_max = std::isfinite(zeta_hi) ? zeta_hi : frozen.zeta_max;
      frozen = row;
    }
    row.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
    rows.push_back(row);
  }
  return rows;
}

const std::vector<double>& grid_for(const ExperimentSpec& spec, const OptimizerSpec& opt) {
  return opt.lambda0_override.empty() ? spec.lambda0_grid : opt.lambda0_override;
}

}  // namespace

void ExperimentSpec::validate() const {
  if (epochs < 1) throw std::invalid_argument("epochs must be >= 1");
  if (batch_size < 1) throw std::invalid_argument("batch_size must be >= 1");
  if (seeds.empty()) throw std::invalid_argument("at least one seed is required");
  if (optimizers.empty()) throw std::invalid_argument("no optimizers configured");
  for (const auto& opt : optimizers) {
    for (double l : grid_for(*this, opt))
      if (!(l > 0.0)) throw std::invalid_argument("lambda0 grid values must be > 0");
    if (grid_for(*this, opt).empty())
      throw std::invalid_argument("empty lambda0 grid for optimizer " + opt.name);
  }
  if (dataset != "mnist" && dataset != "cifar10" && dataset != "synthetic")
    throw std::invalid_argument("unknown dataset: " + dataset);
}

std::string resolve_data_dir(const ExperimentSpec& spec) {
  if (!spec.data_dir.empty()) return spec.data_dir;
  const char* env = std::getenv("NLAR_DATA_DIR");
  return env ? env : "";
}

ExperimentResult run_experiment(const ExperimentSpec& spec) {
  spec.validate();
  const LoadedData data = load_parts(spec);

  const std::size_t train_count =
      spec.train_cap ? std::min(spec.train_cap, data.default_train) : data.default_train;
  const std::size_t test_count =
      spec.test_cap ? std::min(spec.test_cap, data.default_test) : data.default_test;
  const std::size_t features = data.parts.front().cols;

  // records[opt][lambda][seed] -> epoch rows, assembled in canonical order.
  std::map<std::array<std::size_t, 3>, std::vector<MetricsRecord>> cells;

  for (std::size_t si = 0; si < spec.seeds.size(); ++si) {
    const std::uint64_t seed = spec.seeds[si];
    const auto [train, val] =
        merge_reshuffle_split(data.parts, SplitSpec{seed, train_count, test_count});
    // One initialization per seed, shared by every optimizer cell.
    const DenseNet init_net = DenseNet::build(spec.model, static_cast<int>(features),
                                              data.classes, spec.hidden_sizes, seed, spec.l2);
    for (std::size_t oi = 0; oi < spec.optimizers.size(); ++oi) {
      const auto& opt = spec.optimizers[oi];
      const auto& grid = grid_for(spec, opt);
      for (std::size_t li = 0; li < grid.size(); ++li) {
        cells[{oi, li, si}] = run_cell(spec, opt, grid[li], seed, init_net, train, val);
      }
    }
  }

  ExperimentResult result;
  for (std::size_t oi = 0; oi < spec.optimizers.size(); ++oi) {
    const auto& grid = grid_for(spec, spec.optimizers[oi]);
    for (std::size_t li = 0; li < grid.size(); ++li) {
      for (std::size_t si = 0; si < spec.seeds.size(); ++si) {
        auto& rows = cells[{oi, li, si}];
        result.records.insert(result.records.end(), rows.begin(), rows.end());
      }
    }
  }
  result.averaged = average_seeds(result.records);

  fs::create_directories(spec.out_dir);
  {
    std::ofstream out(spec.out_dir + "/metrics.csv", std::ios::binary);
    write_metrics_csv(result.records, out);
  }
  {
    std::ofstream out(spec.out_dir + "/metrics_avg.csv", std::ios::binary);
    write_averaged_csv(result.averaged, out);
  }
  {
    std::ofstream out(spec.out_dir + "/timings.csv", std::ios::binary);
    write_timings_csv(result.records, out);
  }

  // Averaged accuracy curves, one series per (optimizer, lambda0).
  const auto chart = [&](const std::string& file, const std::string& title, bool validation) {
    std::vector<SvgSeries> series;
    for (std::size_t oi = 0; oi < spec.optimizers.size(); ++oi) {
      const auto& opt = spec.optimizers[oi];
      for (double lambda0 : grid_for(spec, opt)) {
        SvgSeries s;
        char label[96];
        std::snprintf(label, sizeof(label), "%s lr=%g", opt.name.c_str(), lambda0);
        s.label = label;
        for (const auto& rec : result.averaged)
          if (rec.optimizer == opt.name && rec.lambda0 == lambda0)
            s.ys.push_back(validation ? rec.val_accuracy : rec.train_accuracy);
        series.push_back(std::move(s));
      }
    }
    std::ofstream out(spec.out_dir + "/" + file, std::ios::binary);
    write_line_chart(out, title, "epoch", "accuracy", series, 0.0, 1.0);
  };
  chart("val_accuracy.svg", "validation accuracy", true);
  chart("train_accuracy.svg", "training accuracy", false);

  return result;
}

std::vector<MetricsRecord> average_seeds(const std::vector<MetricsRecord>& records) {
  // key: (optimizer, lambda0, epoch) in first-seen order
  std::vector<MetricsRecord> averaged;
  std::map<std::tuple<std::string, double, int>, std::size_t> index;
  std::vector<std::size_t> counts;

  for (const auto& rec : records) {
    const auto key = std::make_tuple(rec.optimizer, rec.lambda0, rec.epoch);
    auto it = index.find(key);
    if (it == index.end()) {
      index.emplace(key, averaged.size());
      MetricsRecord avg = rec;
      avg.seed = 0;
      averaged.push_back(avg);
      counts.push_back(1);
    } else {
      MetricsRecord& avg = averaged[it->second];
      avg.train_loss += rec.train_loss;
      avg.train_accuracy += rec.train_accuracy;
      avg.val_loss += rec.val_loss;
      avg.val_accuracy += rec.val_accuracy;
      avg.zeta_min += rec.zeta_min;
      avg.zeta_max += rec.zeta_max;
      avg.wall_seconds += rec.wall_seconds;
      avg.diverged = avg.diverged || rec.diverged;
      counts[it->second] += 1;
    }
  }

  std::size_t expected = 0;
  for (std::size_t i = 0; i < averaged.size(); ++i) {
    if (expected == 0) expected = counts[i];
    if (counts[i] != expected)
      throw std::invalid_argument("mismatched epochs: incomplete rows across seeds");
    const double n = static_cast<double>(counts[i]);
    averaged[i].train_loss /= n;
    averaged[i].train_accuracy /= n;
    averaged[i].val_loss /= n;
    averaged[i].val_accuracy /= n;
    averaged[i].zeta_min /= n;
    averaged[i].zeta_max /= n;
    averaged[i].wall_seconds /= n;
  }

  // canonical order: keep the records' own (optimizer, lambda0) order,
  // which insertion already preserved.
  return averaged;
}

void write_metrics_csv(const std::vector<MetricsRecord>& records, std::ostream& out) {
  out << "optimizer,lambda0,seed,epoch,train_loss,train_accuracy,val_loss,val_accuracy,"
         "zeta_min,zeta_max,diverged\n";
  for (const auto& r : records) {
    out << r.optimizer << ',' << fmt17(r.lambda0) << ',' << r.seed << ',' << r.epoch << ','
        << fmt17(r.train_loss) << ',' << fmt17(r.train_accuracy) << ',' << fmt17(r.val_loss)
        << ',' << fmt17(r.val_accuracy) << ',' << fmt17(r.zeta_min) << ',' << fmt17(r.zeta_max)
        << ',' << (r.diverged ? "true" : "false") << '\n';
  }
}

void write_averaged_csv(const std::vector<MetricsRecord>& averaged, std::ostream& out) {
  out << "optimizer,lambda0,epoch,train_loss,train_accuracy,val_loss,val_accuracy,"
         "zeta_min,zeta_max,diverged\n";
  for (const auto& r : averaged) {
    out << r.optimizer << ',' << fmt17(r.lambda0) << ',' << r.epoch << ',' << fmt17(r.train_loss)
        << ',' << fmt17(r.train_accuracy) << ',' << fmt17(r.val_loss) << ','
        << fmt17(r.val_accuracy) << ',' << fmt17(r.zeta_min) << ',' << fmt17(r.zeta_max) << ','
        << (r.diverged ? "true" : "false") << '\n';
  }
}

void write_timings_csv(const std::vector<MetricsRecord>& records, std::ostream& out) {
  out << "optimizer,lambda0,seed,epoch,wall_seconds\n";
  for (const auto& r : records) {
    out << r.optimizer << ',' << fmt17(r.lambda0) << ',' << r.seed << ',' << r.epoch << ','
        << fmt17(r.wall_seconds) << '\n';
  }
}

ExperimentSpec experiment_from_config(const Config& cfg) {
  const ConfigTable& exp = cfg.require("experiment");
  ExperimentSpec spec;
  spec.model = model_kind_from(exp.get_string_or("model", "logistic"));
  if (exp.has("hidden_sizes")) {
    for (double v : exp.get_number_list("hidden_sizes"))
      spec.hidden_sizes.push_back(static_cast<int>(v));
  }
  spec.dataset = exp.get_string_or("dataset", "synthetic");
  spec.data_dir = exp.get_string_or("data_dir", "");
  spec.train_cap = static_cast<std::size_t>(exp.get_int_or("train_cap", 0));
  spec.test_cap = static_cast<std::size_t>(exp.get_int_or("test_cap", 0));
  spec.synth_n = static_cast<std::size_t>(exp.get_int_or("synth_n", 2000));
  spec.l2 = exp.get_number_or("l2", 1e-4);
  spec.epochs = static_cast<int>(exp.get_int_or("epochs", 10));
  spec.batch_size = static_cast<std::size_t>(exp.get_int_or("batch_size", 300));
  if (exp.has("seeds")) {
    for (double v : exp.get_number_list("seeds"))
      spec.seeds.push_back(static_cast<std::uint64_t>(v));
  }
  if (exp.has("lambda0")) spec.lambda0_grid = exp.get_number_list("lambda0");
  spec.out_dir = exp.get_string_or("out_dir", ".");

  for (const auto& table : cfg.tables()) {
    if (table.name().rfind("optimizer.", 0) != 0) continue;
    OptimizerSpec opt;
    opt.name = table.name().substr(std::string("optimizer.").size());
    const std::string kind = table.get_string("kind");
    if (kind == "nlarb")
      throw std::runtime_error("config error: nlarb needs hooks and has no config surface");
    if (kind == "nlarcm" || kind == "nlarsm" || kind == "nlars" || kind == "nlarc") {
      opt.is_nlar = true;
      NlarConfig n;
      n.variant = kind == "nlarcm"   ? NlarVariant::Nlarcm
                  : kind == "nlarsm" ? NlarVariant::Nlarsm
                  : kind == "nlars"  ? NlarVariant::Nlars
                                     : NlarVariant::Nlarc;
      n.k = table.get_number_or("k", n.k);
      n.b = table.get_number_or("b", n.b);
      n.c = table.get_number_or("c", n.c);
      n.c_prime = table.get_number_or("c_prime", n.c_prime);
      n.rho = table.get_number_or("rho", n.rho);
      n.b_prime = table.get_number_or("b_prime", n.b_prime);
      opt.nlar = n;
    } else {
      BaselineKind bk;
      if (kind == "sgd") bk = BaselineKind::SgdMomentum;
      else if (kind == "adam") bk = BaselineKind::Adam;
      else if (kind == "adamhd") bk = BaselineKind::AdamHd;
      else if (kind == "adagrad") bk = BaselineKind::Adagrad;
      else if (kind == "adadelta") bk = BaselineKind::Adadelta;
      else throw std::runtime_error("config error: unknown optimizer kind '" + kind + "'");
      BaselineConfig b = default_config(bk);
      b.beta1 = table.get_number_or("beta1", b.beta1);
      b.beta2 = table.get_number_or("beta2", b.beta2);
      b.epsilon = table.get_number_or("epsilon", b.epsilon);
      b.beta_hyper = table.get_number_or("beta", b.beta_hyper);
      b.rho_decay = table.get_number_or("rho_decay", b.rho_decay);
      b.clip_norm = table.get_number_or("clip_norm", b.clip_norm);
      opt.baseline = b;
    }
    if (table.has("lambda0")) opt.lambda0_override = table.get_number_list("lambda0");
    spec.optimizers.push_back(std::move(opt));
  }
  spec.validate();
  return spec;
}

}  // namespace nlar
