#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace nlar {

enum class Activation { ReLU, Softmax, Linear };
enum class ModelKind { Logistic, Mlp1h, Mlp2h, Mlp7h };

std::string to_string(ModelKind k);
ModelKind model_kind_from(const std::string& name);
std::vector<int> default_hidden_sizes(ModelKind kind);

struct Batch {
  std::vector<double> inputs;  // row-major, rows x features
  std::vector<int> labels;     // class indices, one per row
  std::size_t rows = 0;
  std::size_t features = 0;
};

struct LossReport {
  double loss = 0.0;       // mean cross-entropy + l2 * sum(theta^2)
  double accuracy = 0.0;   // argmax match rate over the batch
  std::vector<double> grads;
};

struct LayerSpec {
  int in = 0;
  int out = 0;
  Activation act = Activation::Linear;
};

// Dense stack with analytic backprop. Parameters live in one flat array,
// layer-major: each layer's weights row-major (in x out), then its bias.
class DenseNet {
 public:
  DenseNet(std::vector<LayerSpec> layers, double l2, std::uint64_t seed);

  // Architecture from a named kind; hidden_sizes overrides the paper-shape
  // defaults when non-empty (Logistic takes none).
  static DenseNet build(ModelKind kind, int in_dim, int out_dim,
                        std::span<const int> hidden_sizes, std::uint64_t seed,
                        double l2 = 1e-4);

  std::size_t param_count() const { return params_.size(); }
  const std::vector<LayerSpec>& layers() const { return layers_; }
  double l2() const { return l2_; }
  std::span<const double> params() const { return params_; }

  LossReport forward_backward(const Batch& batch) const;
  double loss_value(const Batch& batch) const;  // forward only

  // Loss and accuracy without gradients (validation passes).
  LossReport evaluate(const Batch& batch) const;

  void apply_deltas(std::span<const double> deltas);
  void set_params(std::span<const double> values);

  // Checkpoint: magic "NLARPARM", u32 version, u64 count, raw doubles
  // (little-endian).
  void save_params(const std::string& path) const;
  void load_params(const std::string& path);

 private:
  std::vector<LayerSpec> layers_;
  std::vector<double> params_;
  double l2_ = 0.0;
};

// Central-difference estimate of the same scalar loss; the gradient oracle
// for forward_backward. Throws if h <= 0.
std::vector<double> finite_diff(const DenseNet& net, const Batch& batch, double h);

// max_i |analytic_i - fd_i| relative to the gradient's max magnitude.
double gradient_check_error(const DenseNet& net, const Batch& batch, double h);

// Seeded batch with uniform [0,1) features and uniform class labels.
Batch random_batch(std::size_t rows, std::size_t features, int classes, std::uint64_t seed);

}  // namespace nlar
