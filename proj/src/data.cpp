#include "nlar/data.hpp"

#include <cstdint>
#include <fstream>
#include <numeric>
#include <stdexcept>

#include "nlar/rng.hpp"

namespace nlar {

namespace {

constexpr std::uint32_t kIdxImagesMagic = 2051;  // 0x00000803
constexpr std::uint32_t kIdxLabelsMagic = 2049;  // 0x00000801
constexpr std::size_t kCifarRecord = 3073;       // 1 label byte + 32*32*3 pixels

std::vector<unsigned char> read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open: " + path);
  return std::vector<unsigned char>(std::istreambuf_iterator<char>(in),
                                    std::istreambuf_iterator<char>());
}

std::uint32_t read_be32(const std::vector<unsigned char>& bytes, std::size_t offset,
                        const std::string& path) {
  if (offset + 4 > bytes.size()) throw std::runtime_error("truncated payload: " + path);
  return (static_cast<std::uint32_t>(bytes[offset]) << 24) |
         (static_cast<std::uint32_t>(bytes[offset + 1]) << 16) |
         (static_cast<std::uint32_t>(bytes[offset + 2]) << 8) |
         static_cast<std::uint32_t>(bytes[offset + 3]);
}

}  // namespace

Dataset load_mnist_idx(const std::string& images_path, const std::string& labels_path) {
  const auto img = read_file(images_path);
  if (read_be32(img, 0, images_path) != kIdxImagesMagic)
    throw std::runtime_error("wrong magic in " + images_path);
  const std::size_t count = read_be32(img, 4, images_path);
  const std::size_t height = read_be32(img, 8, images_path);
  const std::size_t width = read_be32(img, 12, images_path);
  const std::size_t pixels = height * width;
  if (img.size() != 16 + count * pixels)
    throw std::runtime_error("truncated payload: " + images_path);

  const auto lab = read_file(labels_path);
  if (read_be32(lab, 0, labels_path) != kIdxLabelsMagic)
    throw std::runtime_error("wrong magic in " + labels_path);
  const std::size_t label_count = read_be32(lab, 4, labels_path);
  if (lab.size() != 8 + label_count)
    throw std::runtime_error("truncated payload: " + labels_path);
  if (label_count != count)
    throw std::runtime_error("count mismatch between files: " + images_path + " has " +
                             std::to_string(count) + " images, " + labels_path + " has " +
                             std::to_string(label_count) + " labels");

  Dataset ds;
  ds.rows = count;
  ds.cols = pixels;
  ds.name = "mnist";
  ds.features.resize(count * pixels);
  for (std::size_t i = 0; i < count * pixels; ++i)
    ds.features[i] = static_cast<double>(img[16 + i]) / 255.0;
  ds.labels.resize(count);
  for (std::size_t i = 0; i < count; ++i) {
    const unsigned char v = lab[8 + i];
    if (v > 9) throw std::runtime_error("label out of range in " + labels_path);
    ds.labels[i] = v;
  }
  return ds;
}

Dataset load_cifar10_bin(const std::vector<std::string>& paths) {
  if (paths.empty()) throw std::invalid_argument("no CIFAR-10 files given");
  Dataset ds;
  ds.cols = kCifarRecord - 1;
  ds.name = "cifar10";
  for (const auto& path : paths) {
    const auto bytes = read_file(path);
    if (bytes.size() % kCifarRecord != 0)
      throw std::runtime_error("file length " + std::to_string(bytes.size()) +
                               " is not a multiple of 3073: " + path);
    const std::size_t records = bytes.size() / kCifarRecord;
    ds.features.reserve(ds.features.size() + records * ds.cols);
    ds.labels.reserve(ds.labels.size() + records);
    for (std::size_t r = 0; r < records; ++r) {
      const unsigned char label = bytes[r * kCifarRecord];
      if (label > 9) throw std::runtime_error("label out of range in " + path);
      ds.labels.push_back(label);
      const std::size_t base = r * kCifarRecord + 1;
      for (std::size_t i = 0; i < ds.cols; ++i)
        ds.features.push_back(static_cast<double>(bytes[base + i]) / 255.0);
    }
    ds.rows += records;
  }
  return ds;
}

std::pair<Dataset, Dataset> merge_reshuffle_split(const std::vector<Dataset>& parts,
                                                  const SplitSpec& spec) {
  if (parts.empty()) throw std::invalid_argument("nothing to split");
  const std::size_t cols = parts.front().cols;
  std::size_t total = 0;
  for (const auto& p : parts) {
    if (p.cols != cols) throw std::invalid_argument("feature widths differ across parts");
    total += p.rows;
  }
  if (spec.train_count + spec.test_count > total)
    throw std::invalid_argument("insufficient rows: need " +
                                std::to_string(spec.train_count + spec.test_count) + ", have " +
                                std::to_string(total));

  // Global row index -> (part, row) without copying the merged dataset.
  std::vector<std::pair<std::size_t, std::size_t>> where;
  where.reserve(total);
  for (std::size_t p = 0; p < parts.size(); ++p)
    for (std::size_t r = 0; r < parts[p].rows; ++r) where.emplace_back(p, r);

  std::vector<std::size_t> order(total);
  std::iota(order.begin(), order.end(), 0);
  SeqRng rng(derive_stream(spec.seed, "merge-reshuffle-split"));
  for (std::size_t i = total; i > 1; --i) {
    const std::size_t j = rng.next_below(i);
    std::swap(order[i - 1], order[j]);
  }

  auto take = [&](std::size_t begin, std::size_t count, const std::string& suffix) {
    Dataset out;
    out.cols = cols;
    out.rows = count;
    out.name = parts.front().name + suffix;
    out.features.resize(count * cols);
    out.labels.resize(count);
    for (std::size_t i = 0; i < count; ++i) {
      const auto [p, r] = where[order[begin + i]];
      const double* src = parts[p].features.data() + r * cols;
      std::copy(src, src + cols, out.features.data() + i * cols);
      out.labels[i] = parts[p].labels[r];
    }
    return out;
  };

  return {take(0, spec.train_count, ":train"), take(spec.train_count, spec.test_count, ":test")};
}

std::vector<Batch> batches(const Dataset& ds, std::size_t batch_size, std::uint64_t epoch_seed) {
  if (batch_size == 0) throw std::invalid_argument("batch_size must be >= 1");
  std::vector<std::size_t> order(ds.rows);
  std::iota(order.begin(), order.end(), 0);
  SeqRng rng(derive_stream(epoch_seed, "batch-shuffle"));
  for (std::size_t i = ds.rows; i > 1; --i) {
    const std::size_t j = rng.next_below(i);
    std::swap(order[i - 1], order[j]);
  }

  std::vector<Batch> out;
  out.reserve((ds.rows + batch_size - 1) / batch_size);
  for (std::size_t begin = 0; begin < ds.rows; begin += batch_size) {
    const std::size_t n = std::min(batch_size, ds.rows - begin);
    Batch b;
    b.rows = n;
    b.features = ds.cols;
    b.inputs.resize(n * ds.cols);
    b.labels.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t r = order[begin + i];
      const double* src = ds.features.data() + r * ds.cols;
      std::copy(src, src + ds.cols, b.inputs.data() + i * ds.cols);
      b.labels[i] = ds.labels[r];
    }
    out.push_back(std::move(b));
  }
  return out;
}

Dataset synthetic_two_class(std::size_t n, std::uint64_t seed) {
  Dataset ds;
  ds.rows = n;
  ds.cols = 2;
  ds.name = "synthetic2";
  ds.features.resize(n * 2);
  ds.labels.resize(n);
  SeqRng rng(derive_stream(seed, "two-class-blobs"));
  const std::size_t first = (n + 1) / 2;
  for (std::size_t i = 0; i < n; ++i) {
    const bool second = i >= first;
    const double cx = second ? 2.0 : -2.0;
    const double cy = second ? 2.0 : -2.0;
    ds.features[i * 2] = cx + rng.next_gaussian();
    ds.features[i * 2 + 1] = cy + rng.next_gaussian();
    ds.labels[i] = second ? 1 : 0;
  }
  return ds;
}

}  // namespace nlar
