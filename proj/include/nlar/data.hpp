#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "nlar/model.hpp"

namespace nlar {

// Immutable after load. Pixel loaders scale bytes by 1/255 so features lie
// in [0, 1]; synthetic generators are unbounded reals.
struct Dataset {
  std::vector<double> features;  // rows x cols, row-major
  std::vector<int> labels;
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::string name;
};

struct SplitSpec {
  std::uint64_t seed = 0;
  std::size_t train_count = 0;
  std::size_t test_count = 0;
};

// IDX readers: big-endian 32-bit magic 2051 (images) / 2049 (labels),
// dimension header, unsigned byte payload, flattened to rows*cols features.
Dataset load_mnist_idx(const std::string& images_path, const std::string& labels_path);

// CIFAR-10 binary batches: 3073-byte records, 1 label byte followed by
// 3072 channel-planar pixel bytes. Multiple files are concatenated in order.
Dataset load_cifar10_bin(const std::vector<std::string>& paths);

// Concatenate, permute with a seeded shuffle, cut at train_count /
// test_count. Deterministic per seed.
std::pair<Dataset, Dataset> merge_reshuffle_split(const std::vector<Dataset>& parts,
                                                  const SplitSpec& spec);

// Seeded per-epoch shuffle; the final short batch is included. Identical
// (epoch_seed, batch_size) gives the identical batch sequence.
std::vector<Batch> batches(const Dataset& ds, std::size_t batch_size, std::uint64_t epoch_seed);

// Two unit-variance Gaussian blobs at (-2,-2) and (2,2), labels 0/1.
Dataset synthetic_two_class(std::size_t n, std::uint64_t seed);

}  // namespace nlar
