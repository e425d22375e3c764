#include "support/fixtures.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#include "nlar/rng.hpp"

namespace testsupport {

namespace {

void write_be32(std::ofstream& out, std::uint32_t v) {
  const unsigned char bytes[4] = {static_cast<unsigned char>(v >> 24),
                                  static_cast<unsigned char>(v >> 16),
                                  static_cast<unsigned char>(v >> 8),
                                  static_cast<unsigned char>(v)};
  out.write(reinterpret_cast<const char*>(bytes), 4);
}

std::ofstream open_binary(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write fixture: " + path);
  return out;
}

}  // namespace

void write_idx_images(const std::string& path, const ByteImages& data) {
  auto out = open_binary(path);
  write_be32(out, 2051);
  write_be32(out, static_cast<std::uint32_t>(data.images.size()));
  write_be32(out, static_cast<std::uint32_t>(data.height));
  write_be32(out, static_cast<std::uint32_t>(data.width));
  for (const auto& img : data.images)
    out.write(reinterpret_cast<const char*>(img.data()),
              static_cast<std::streamsize>(img.size()));
}

void write_idx_labels(const std::string& path, const ByteImages& data) {
  auto out = open_binary(path);
  write_be32(out, 2049);
  write_be32(out, static_cast<std::uint32_t>(data.labels.size()));
  out.write(reinterpret_cast<const char*>(data.labels.data()),
            static_cast<std::streamsize>(data.labels.size()));
}

void write_cifar_bin(const std::string& path, const std::vector<unsigned char>& labels,
                     const std::vector<std::vector<unsigned char>>& pixels) {
  if (labels.size() != pixels.size())
    throw std::invalid_argument("cifar fixture label/pixel count mismatch");
  auto out = open_binary(path);
  for (std::size_t r = 0; r < labels.size(); ++r) {
    if (pixels[r].size() != 3072) throw std::invalid_argument("cifar record must have 3072 pixels");
    out.put(static_cast<char>(labels[r]));
    out.write(reinterpret_cast<const char*>(pixels[r].data()), 3072);
  }
}

ByteImages synth_digits(std::size_t n, std::uint64_t seed) {
  constexpr std::size_t kPixels = 28 * 28;
  constexpr int kClasses = 10;

  // class prototypes: fixed per seed, independent of n
  std::vector<std::vector<double>> protos(kClasses, std::vector<double>(kPixels));
  for (int k = 0; k < kClasses; ++k) {
    nlar::SeqRng rng(nlar::derive_stream(seed, "digit-proto", static_cast<std::uint64_t>(k)));
    for (std::size_t i = 0; i < kPixels; ++i) protos[k][i] = 40.0 + 160.0 * rng.next_unit();
  }

  ByteImages data;
  data.images.reserve(n);
  data.labels.reserve(n);
  nlar::SeqRng rng(nlar::derive_stream(seed, "digit-samples"));
  for (std::size_t i = 0; i < n; ++i) {
    const int label = static_cast<int>(i % kClasses);
    const double brightness = 0.85 + 0.3 * rng.next_unit();
    std::vector<unsigned char> img(kPixels);
    for (std::size_t p = 0; p < kPixels; ++p) {
      const double v = protos[label][p] * brightness + 48.0 * rng.next_gaussian();
      img[p] = static_cast<unsigned char>(std::clamp(v, 0.0, 255.0));
    }
    data.images.push_back(std::move(img));
    data.labels.push_back(static_cast<unsigned char>(label));
  }
  return data;
}

void write_synth_mnist_dir(const std::string& dir, std::size_t train_n, std::size_t test_n,
                           std::uint64_t seed) {
  std::filesystem::create_directories(dir);
  const ByteImages all = synth_digits(train_n + test_n, seed);

  ByteImages train;
  train.images.assign(all.images.begin(), all.images.begin() + static_cast<std::ptrdiff_t>(train_n));
  train.labels.assign(all.labels.begin(), all.labels.begin() + static_cast<std::ptrdiff_t>(train_n));
  ByteImages test;
  test.images.assign(all.images.begin() + static_cast<std::ptrdiff_t>(train_n), all.images.end());
  test.labels.assign(all.labels.begin() + static_cast<std::ptrdiff_t>(train_n), all.labels.end());

  write_idx_images(dir + "/train-images-idx3-ubyte", train);
  write_idx_labels(dir + "/train-labels-idx1-ubyte", train);
  write_idx_images(dir + "/t10k-images-idx3-ubyte", test);
  write_idx_labels(dir + "/t10k-labels-idx1-ubyte", test);
}

}  // namespace testsupport
