#include "nlar/model.hpp"

#include <Eigen/Dense>

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include "nlar/rng.hpp"

namespace nlar {

namespace {

using MatRM = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapMat = Eigen::Map<MatRM>;
using MapConstMat = Eigen::Map<const MatRM>;
using MapConstVec = Eigen::Map<const Eigen::VectorXd>;

static_assert(std::endian::native == std::endian::little,
              "checkpoint format is little-endian");

constexpr char kMagic[8] = {'N', 'L', 'A', 'R', 'P', 'A', 'R', 'M'};
constexpr std::uint32_t kVersion = 1;

std::size_t layer_param_count(const LayerSpec& l) {
  return (static_cast<std::size_t>(l.in) + 1) * static_cast<std::size_t>(l.out);
}

struct ForwardPass {
  std::vector<MatRM> activations;  // activations[0] is the input
  double data_loss = 0.0;
  double accuracy = 0.0;
};

// Forward through the stack; final layer must be Softmax for the
// cross-entropy loss. Keeps per-layer activations when wanted for backprop.
ForwardPass run_forward(const std::vector<LayerSpec>& layers, const std::vector<double>& params,
                        const Batch& batch, bool keep_activations) {
  if (batch.rows == 0) throw std::invalid_argument("empty batch");
  if (batch.inputs.size() != batch.rows * batch.features)
    throw std::invalid_argument("batch input size mismatch");
  if (batch.labels.size() != batch.rows)
    throw std::invalid_argument("batch label count mismatch");
  if (layers.empty() || static_cast<std::size_t>(layers.front().in) != batch.features)
    throw std::invalid_argument("batch feature width does not match the first layer");
  if (layers.back().act != Activation::Softmax)
    throw std::invalid_argument("final layer must be Softmax for the classification loss");

  ForwardPass fp;
  MatRM a = MapConstMat(batch.inputs.data(), static_cast<Eigen::Index>(batch.rows),
                        static_cast<Eigen::Index>(batch.features));
  if (keep_activations) fp.activations.push_back(a);

  std::size_t offset = 0;
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const LayerSpec& spec = layers[l];
    MapConstMat w(params.data() + offset, spec.in, spec.out);
    MapConstVec bias(params.data() + offset + static_cast<std::size_t>(spec.in) * spec.out,
                     spec.out);
    offset += layer_param_count(spec);

    MatRM z = a * w;
    z.rowwise() += bias.transpose();
    switch (spec.act) {
      case Activation::ReLU:
        a = z.cwiseMax(0.0);
        break;
      case Activation::Linear:
        a = std::move(z);
        break;
      case Activation::Softmax: {
        const Eigen::VectorXd row_max = z.rowwise().maxCoeff();
        a = (z.colwise() - row_max).array().exp();
        const Eigen::VectorXd row_sum = a.rowwise().sum();
        a.array().colwise() /= row_sum.array();
        break;
      }
    }
    if (!a.allFinite())
      throw std::runtime_error("non-finite activation in layer " + std::to_string(l));
    if (keep_activations) fp.activations.push_back(a);
  }

  const int classes = layers.back().out;
  double loss_sum = 0.0;
  std::size_t correct = 0;
  for (std::size_t i = 0; i < batch.rows; ++i) {
    const int label = batch.labels[i];
    if (label < 0 || label >= classes)
      throw std::invalid_argument("label out of range at row " + std::to_string(i));
    loss_sum += -std::log(a(static_cast<Eigen::Index>(i), label));
    Eigen::Index arg = 0;
    a.row(static_cast<Eigen::Index>(i)).maxCoeff(&arg);
    if (arg == label) ++correct;
  }
  fp.data_loss = loss_sum / static_cast<double>(batch.rows);
  fp.accuracy = static_cast<double>(correct) / static_cast<double>(batch.rows);
  if (!keep_activations) fp.activations.push_back(std::move(a));
  return fp;
}

}  // namespace

std::string to_string(ModelKind k) {
  switch (k) {
    case ModelKind::Logistic: return "logistic";
    case ModelKind::Mlp1h: return "mlp1h";
    case ModelKind::Mlp2h: return "mlp2h";
    case ModelKind::Mlp7h: return "mlp7h";
  }
  return "?";
}

ModelKind model_kind_from(const std::string& name) {
  if (name == "logistic") return ModelKind::Logistic;
  if (name == "mlp1h") return ModelKind::Mlp1h;
  if (name == "mlp2h") return ModelKind::Mlp2h;
  if (name == "mlp7h") return ModelKind::Mlp7h;
  throw std::invalid_argument("unknown model kind: " + name);
}

std::vector<int> default_hidden_sizes(ModelKind kind) {
  switch (kind) {
    case ModelKind::Logistic: return {};
    case ModelKind::Mlp1h: return {128};
    case ModelKind::Mlp2h: return {1000, 1000};
    case ModelKind::Mlp7h: return {512, 512, 512, 512, 512, 512, 512};
  }
  return {};
}

DenseNet::DenseNet(std::vector<LayerSpec> layers, double l2, std::uint64_t seed)
    : layers_(std::move(layers)), l2_(l2) {
  if (layers_.empty()) throw std::invalid_argument("a network needs at least one layer");
  if (l2_ < 0.0) throw std::invalid_argument("l2 must be >= 0");
  std::size_t count = 0;
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    if (layers_[l].in <= 0 || layers_[l].out <= 0)
      throw std::invalid_argument("layer dimensions must be positive");
    if (l > 0 && layers_[l].in != layers_[l - 1].out)
      throw std::invalid_argument("consecutive layer shapes do not compose");
    count += layer_param_count(layers_[l]);
  }
  params_.assign(count, 0.0);

  // Glorot-style uniform weights, zero biases.
  SeqRng rng(derive_stream(seed, "model-init"));
  std::size_t offset = 0;
  for (const LayerSpec& spec : layers_) {
    const double bound = std::sqrt(6.0 / static_cast<double>(spec.in + spec.out));
    const std::size_t weights = static_cast<std::size_t>(spec.in) * spec.out;
    for (std::size_t i = 0; i < weights; ++i)
      params_[offset + i] = (2.0 * rng.next_unit() - 1.0) * bound;
    offset += layer_param_count(spec);
  }
}

DenseNet DenseNet::build(ModelKind kind, int in_dim, int out_dim,
                         std::span<const int> hidden_sizes, std::uint64_t seed, double l2) {
  if (in_dim <= 0 || out_dim <= 0) throw std::invalid_argument("dimensions must be positive");
  std::vector<int> hidden(hidden_sizes.begin(), hidden_sizes.end());
  if (hidden.empty()) hidden = default_hidden_sizes(kind);
  if (kind == ModelKind::Logistic) hidden.clear();

  std::vector<LayerSpec> layers;
  int prev = in_dim;
  for (int h : hidden) {
    layers.push_back({prev, h, Activation::ReLU});
    prev = h;
  }
  layers.push_back({prev, out_dim, Activation::Softmax});
  return DenseNet(std::move(layers), l2, seed);
}

LossReport DenseNet::forward_backward(const Batch& batch) const {
  ForwardPass fp = run_forward(layers_, params_, batch, true);

  LossReport report;
  report.accuracy = fp.accuracy;
  double sq = 0.0;
  for (double p : params_) sq += p * p;
  report.loss = fp.data_loss + l2_ * sq;
  report.grads.assign(params_.size(), 0.0);

  const std::size_t rows = batch.rows;
  // dL/dZ for softmax cross-entropy: (P - onehot) / rows
  MatRM dz = fp.activations.back();
  for (std::size_t i = 0; i < rows; ++i)
    dz(static_cast<Eigen::Index>(i), batch.labels[i]) -= 1.0;
  dz /= static_cast<double>(rows);

  std::vector<std::size_t> offsets(layers_.size());
  {
    std::size_t off = 0;
    for (std::size_t l = 0; l < layers_.size(); ++l) {
      offsets[l] = off;
      off += layer_param_count(layers_[l]);
    }
  }

  for (std::size_t li = layers_.size(); li-- > 0;) {
    const LayerSpec& spec = layers_[li];
    const MatRM& a_prev = fp.activations[li];
    MapConstMat w(params_.data() + offsets[li], spec.in, spec.out);
    MapMat dw(report.grads.data() + offsets[li], spec.in, spec.out);
    Eigen::Map<Eigen::VectorXd> db(
        report.grads.data() + offsets[li] + static_cast<std::size_t>(spec.in) * spec.out,
        spec.out);

    dw = a_prev.transpose() * dz;
    db = dz.colwise().sum();

    if (li > 0) {
      MatRM da = dz * w.transpose();
      // ReLU mask from the stored activation (positive output <=> passed)
      const LayerSpec& prev_spec = layers_[li - 1];
      switch (prev_spec.act) {
        case Activation::ReLU:
          dz = da.cwiseProduct(
              (fp.activations[li].array() > 0.0).cast<double>().matrix());
          break;
        case Activation::Linear:
          dz = std::move(da);
          break;
        case Activation::Softmax:
          throw std::invalid_argument("softmax is only supported as the final activation");
      }
    }
  }

  // L2 term: d/dtheta (l2 * sum theta^2) = 2 * l2 * theta, weights and biases.
  if (l2_ != 0.0) {
    for (std::size_t i = 0; i < params_.size(); ++i)
      report.grads[i] += 2.0 * l2_ * params_[i];
  }
  return report;
}

double DenseNet::loss_value(const Batch& batch) const {
  const ForwardPass fp = run_forward(layers_, params_, batch, false);
  double sq = 0.0;
  for (double p : params_) sq += p * p;
  return fp.data_loss + l2_ * sq;
}

LossReport DenseNet::evaluate(const Batch& batch) const {
  const ForwardPass fp = run_forward(layers_, params_, batch, false);
  double sq = 0.0;
  for (double p : params_) sq += p * p;
  LossReport report;
  report.loss = fp.data_loss + l2_ * sq;
  report.accuracy = fp.accuracy;
  return report;
}

void DenseNet::apply_deltas(std::span<const double> deltas) {
  if (deltas.size() != params_.size())
    throw std::invalid_argument("delta length " + std::to_string(deltas.size()) +
                                " does not match parameter count " +
                                std::to_string(params_.size()));
  for (std::size_t i = 0; i < params_.size(); ++i) params_[i] += deltas[i];
}

void DenseNet::set_params(std::span<const double> values) {
  if (values.size() != params_.size())
    throw std::invalid_argument("parameter count mismatch in set_params");
  params_.assign(values.begin(), values.end());
}

void DenseNet::save_params(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out.write(kMagic, sizeof(kMagic));
  const std::uint32_t version = kVersion;
  const std::uint64_t count = params_.size();
  out.write(reinterpret_cast<const char*>(&version), sizeof(version));
  out.write(reinterpret_cast<const char*>(&count), sizeof(count));
  out.write(reinterpret_cast<const char*>(params_.data()),
            static_cast<std::streamsize>(params_.size() * sizeof(double)));
  if (!out) throw std::runtime_error("short write: " + path);
}

void DenseNet::load_params(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open: " + path);
  char magic[8];
  std::uint32_t version = 0;
  std::uint64_t count = 0;
  in.read(magic, sizeof(magic));
  in.read(reinterpret_cast<char*>(&version), sizeof(version));
  in.read(reinterpret_cast<char*>(&count), sizeof(count));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
    throw std::runtime_error("bad checkpoint magic: " + path);
  if (version != kVersion)
    throw std::runtime_error("unsupported checkpoint version " + std::to_string(version));
  if (count != params_.size())
    throw std::runtime_error("checkpoint parameter count mismatch");
  in.read(reinterpret_cast<char*>(params_.data()),
          static_cast<std::streamsize>(count * sizeof(double)));
  if (!in) throw std::runtime_error("truncated checkpoint: " + path);
}

std::vector<double> finite_diff(const DenseNet& net, const Batch& batch, double h) {
  if (!(h > 0.0)) throw std::invalid_argument("finite_diff step h must be > 0");
  DenseNet probe = net;
  const std::size_t n = probe.param_count();
  std::vector<double> theta(net.params().begin(), net.params().end());
  std::vector<double> grads(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const double orig = theta[i];
    theta[i] = orig + h;
    probe.set_params(theta);
    const double up = probe.loss_value(batch);
    theta[i] = orig - h;
    probe.set_params(theta);
    const double down = probe.loss_value(batch);
    theta[i] = orig;
    grads[i] = (up - down) / (2.0 * h);
  }
  return grads;
}

double gradient_check_error(const DenseNet& net, const Batch& batch, double h) {
  const LossReport analytic = net.forward_backward(batch);
  const std::vector<double> fd = finite_diff(net, batch, h);
  double scale = 1e-300;
  for (double g : analytic.grads) scale = std::max(scale, std::abs(g));
  for (double g : fd) scale = std::max(scale, std::abs(g));
  double worst = 0.0;
  for (std::size_t i = 0; i < fd.size(); ++i)
    worst = std::max(worst, std::abs(analytic.grads[i] - fd[i]));
  return worst / scale;
}

Batch random_batch(std::size_t rows, std::size_t features, int classes, std::uint64_t seed) {
  if (rows == 0 || features == 0 || classes <= 0)
    throw std::invalid_argument("random_batch needs positive dimensions");
  Batch b;
  b.rows = rows;
  b.features = features;
  b.inputs.resize(rows * features);
  b.labels.resize(rows);
  SeqRng rng(derive_stream(seed, "random-batch"));
  for (double& v : b.inputs) v = rng.next_unit();
  for (int& l : b.labels) l = static_cast<int>(rng.next_below(static_cast<std::uint64_t>(classes)));
  return b;
}

}  // namespace nlar
