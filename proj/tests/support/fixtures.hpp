#pragma once

// IDX / CIFAR-10 binary writers and a deterministic 10-class image
// generator, for loader fixtures and MNIST-format training sets when the
// real provider files are not on disk.

#include <cstdint>
#include <string>
#include <vector>

namespace testsupport {

struct ByteImages {
  std::vector<std::vector<unsigned char>> images;  // height*width bytes each
  std::vector<unsigned char> labels;
  std::size_t height = 28;
  std::size_t width = 28;
};

void write_idx_images(const std::string& path, const ByteImages& data);
void write_idx_labels(const std::string& path, const ByteImages& data);

// records of 1 label byte + 3072 pixel bytes
void write_cifar_bin(const std::string& path, const std::vector<unsigned char>& labels,
                     const std::vector<std::vector<unsigned char>>& pixels);

// 28x28 synthetic digits: per-class random prototypes plus per-sample
// noise and brightness jitter. Classes cycle 0..9 deterministically.
ByteImages synth_digits(std::size_t n, std::uint64_t seed);

// Train/test IDX pairs with the standard MNIST file names.
void write_synth_mnist_dir(const std::string& dir, std::size_t train_n, std::size_t test_n,
                           std::uint64_t seed);

}  // namespace testsupport
